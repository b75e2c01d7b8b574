#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mdiotbc/gf2.hpp"

namespace mdiotbc {

// One message on the classical channel, or a local marker.
struct TraceLine {
    std::string phase;
    std::string direction;  // "A->B", "B->A", "station->*", "local"
    std::optional<uint64_t> round;
    std::string message_type;
    std::string payload_hex;
    uint64_t bits = 0;
};

// Message log of one session. When disabled only the bit counters are kept,
// so that size invariants can still be checked cheaply.
class Trace {
public:
    explicit Trace(bool keep_lines = false) : keep_(keep_lines) {}

    void add(std::string phase, std::string direction, std::string type, const gf2::BitString& payload,
             std::optional<uint64_t> round = std::nullopt) {
        total_bits_ += payload.size();
        if (!keep_) return;
        lines_.push_back({std::move(phase), std::move(direction), round, std::move(type), payload.to_hex(),
                          payload.size()});
    }

    void marker(std::string phase, std::string type) {
        if (!keep_) return;
        lines_.push_back({std::move(phase), "local", std::nullopt, std::move(type), "", 0});
    }

    bool enabled() const { return keep_; }
    const std::vector<TraceLine>& lines() const { return lines_; }
    uint64_t total_bits() const { return total_bits_; }

private:
    bool keep_ = false;
    uint64_t total_bits_ = 0;
    std::vector<TraceLine> lines_;
};

}  // namespace mdiotbc
