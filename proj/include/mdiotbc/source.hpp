#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace mdiotbc {

struct IntensityLevel {
    std::string label;
    double mean = 0.0;  // mean photon number
    double prob = 0.0;  // probability of choosing this level in a round
};

// Photon source of one party. A perfect source emits exactly one photon per
// round. A phase-randomized coherent source picks one of several intensities
// per round and emits a Poisson number of photons. By convention levels[0]
// is the signal intensity and the remaining levels are decoys.
struct SourceModel {
    enum class Kind { Perfect, Coherent };

    Kind kind = Kind::Perfect;
    std::vector<IntensityLevel> levels{{"signal", 1.0, 1.0}};

    static SourceModel perfect() { return SourceModel{}; }
    static SourceModel coherent(std::vector<IntensityLevel> levels);

    bool is_perfect() const { return kind == Kind::Perfect; }
    void validate() const;
    std::size_t index_of(const std::string& label) const;
    const IntensityLevel& signal() const { return levels.front(); }
    double signal_prob() const { return levels.front().prob; }
    std::size_t decoy_count() const { return levels.size() - 1; }
};

}  // namespace mdiotbc
