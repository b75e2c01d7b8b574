#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "mdiotbc/gf2.hpp"
#include "mdiotbc/rng.hpp"
#include "mdiotbc/source.hpp"

namespace mdiotbc::channel {

using gf2::BitString;
using gf2::IndexSet;

unsigned sample_photon_count(double mean, Rng& rng);
unsigned sample_photon_count(const SourceModel& src, const std::string& label, Rng& rng);
unsigned sample_photon_count(const SourceModel& src, std::size_t level, Rng& rng);

struct BellOutcome {
    bool success = false;
    bool parity = false;  // meaningful only on success
};

// Correlation-level model of a probabilistic Bell measurement.
BellOutcome bell_round(bool x, bool theta, bool x_hat, bool theta_hat, double e_err, double p_fail, Rng& station);

// Noise and failure behaviour of the untrusted measurement station.
struct ChannelModel {
    double e_err = 0.0;
    double p_fail = 0.0;
    // Optional override keyed by (Alice label, Bob label).
    std::map<std::pair<std::string, std::string>, double> p_fail_table;

    double p_fail_for(const std::string& a, const std::string& b) const;
};

enum class DiscardReason { None, Failure, IntensityMismatch };
const char* discard_reason_name(DiscardReason r);

struct RoundRecord {
    bool x = false, theta = false;
    bool x_hat = false, theta_hat = false;
    uint16_t intensity_a = 0, intensity_b = 0;  // level indices into the sources
    unsigned k_a = 1, k_b = 1;
    bool success = false;
    bool parity = false;
    bool discarded = true;
    DiscardReason reason = DiscardReason::Failure;

    bool corrected_bob_bit() const { return x_hat ^ parity; }
};

enum class Party { Alice, Bob };

// What one party legitimately sees of one round: its own choices plus the
// public station announcement and, for decoy runs, the other party's
// announced intensity. Photon numbers are seen by nobody.
struct ViewRound {
    bool bit = false;
    bool basis = false;
    uint16_t own_intensity = 0;
    uint16_t other_intensity = 0;
    bool success = false;
    bool parity = false;
    bool retained = false;
};

struct PartyView {
    Party party = Party::Alice;
    std::vector<ViewRound> rounds;
    std::string serialize() const;
};

struct Transcript {
    std::vector<RoundRecord> rounds;
    std::size_t n = 0;  // retained rounds
    bool signal_only_retention = false;
    std::vector<std::string> labels_a, labels_b;

    std::vector<std::size_t> retained() const;
    PartyView alice_view() const;
    PartyView bob_view() const;
};

struct PrepMode {
    enum class Kind { UntilN, FixedN };
    Kind kind = Kind::UntilN;
    uint64_t count = 0;

    static PrepMode until_n(uint64_t n) { return {Kind::UntilN, n}; }
    static PrepMode fixed_n(uint64_t N) { return {Kind::FixedN, N}; }
};

// Each party's device and the station draw from their own stream, so
// changing one party's private randomness never shifts another's.
struct PrepRngs {
    Rng alice, bob, station;
    static PrepRngs from(const Rng& parent) {
        return {parent.fork("prep.alice"), parent.fork("prep.bob"), parent.fork("prep.station")};
    }
};

// UntilN stops once `count` rounds succeeded; FixedN runs exactly `count`
// rounds and marks signal-signal successes as retained. `round_cap` bounds
// UntilN (0 selects a default proportional to n).
Transcript run_preparation(const ChannelModel& ch, const SourceModel& src_a, const SourceModel& src_b, PrepMode mode,
                           PrepRngs& rngs, uint64_t round_cap = 0);

// The retained-round strings each party holds after preparation.
struct AliceStrings {
    BitString x, theta;
};
struct BobStrings {
    BitString x_hat;  // corrected bits
    BitString theta_hat;
};
AliceStrings alice_strings(const Transcript& t);
BobStrings bob_strings(const Transcript& t);

struct SiftResult {
    IndexSet I;
    BitString x_hat_I;
};
SiftResult sift(const BobStrings& bob, const BitString& theta_reveal);

}  // namespace mdiotbc::channel
