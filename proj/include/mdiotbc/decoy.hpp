#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mdiotbc/channel.hpp"
#include "mdiotbc/source.hpp"

namespace mdiotbc::decoy {

struct ChernoffEps {
    double epsilon = 1e-3;
    double eps_var = 1e-3;
    double eps_hat = 1e-3;
    double eps1 = 1e-3;

    void validate() const;
    // Failure probability of the whole estimate: 16(eps + eps_var + eps_hat) + 8 eps1.
    double failure_bound() const { return 16.0 * (epsilon + eps_var + eps_hat) + 8.0 * eps1; }
};

// Counts x[o][theta][i] of successful rounds, by announced parity o, basis
// theta and intensity index i (0 is the signal).
struct DecoyObservation {
    std::vector<std::string> labels;
    std::vector<uint64_t> counts;

    explicit DecoyObservation(std::vector<std::string> intensity_labels = {});

    std::size_t intensities() const { return labels.size(); }
    uint64_t& at(int o, int theta, std::size_t i) { return counts[index(o, theta, i)]; }
    uint64_t at(int o, int theta, std::size_t i) const { return counts[index(o, theta, i)]; }
    std::vector<uint64_t> cell(int o, int theta) const;
    uint64_t total() const;
    // CSV block with columns outcome,basis,intensity,count.
    std::string to_csv() const;

private:
    std::size_t index(int o, int theta, std::size_t i) const { return (static_cast<std::size_t>(o) * 2 + theta) * labels.size() + i; }
};

using RoundFilter = std::function<bool(const channel::ViewRound&)>;

DecoyObservation tally(const channel::PartyView& view, const std::vector<std::string>& own_labels,
                       const RoundFilter& keep = nullptr);

// p[i | k] for k = 1 and k >= 2 under Poisson photon statistics.
struct CondIntensityProbs {
    std::vector<double> given_1;
    std::vector<double> given_multi;
};
CondIntensityProbs intensity_given_count(const std::vector<double>& choice_probs, const std::vector<double>& intensities);
CondIntensityProbs intensity_given_count(const SourceModel& src);

enum class Method { ClosedFormQ2, VertexEnum };

struct S1Bound {
    double value = 0;
    bool clamped = false;       // the raw minimum was negative
    bool empty_region = false;  // no feasible point in the quadrant
};

// Lower bound on the single-photon count of one (o, theta) cell. `x` holds
// the observed counts for every intensity, signal included; only the decoys
// enter the constraints.
S1Bound s1_lower_bound(const std::vector<uint64_t>& x, const CondIntensityProbs& cond, const ChernoffEps& eps,
                       Method method);

// The same minimisation over explicit strips lower_j <= p1_j S1 + p2_j S2 <= upper_j,
// one per decoy j. Exposed for exact-data checks.
S1Bound s1_lower_bound_strips(const std::vector<double>& lower, const std::vector<double>& upper,
                              const std::vector<double>& p1, const std::vector<double>& p2, Method method);

struct L1Result {
    double L1 = 0;
    std::array<double, 4> per_cell{};  // index o*2 + theta
    std::array<S1Bound, 4> cell_bounds{};
};

// Throws ValidityViolation naming the offending cell when a cell with data
// fails the Chernoff validity conditions. Cells without data contribute 0.
L1Result single_photon_lower_bound(const DecoyObservation& obs, const CondIntensityProbs& cond, const ChernoffEps& eps,
                                   Method method = Method::ClosedFormQ2);

struct AbortDecision {
    bool abort = false;
    double ratio = 0;
    std::string diagnostic;
};

AbortDecision multiphoton_abort_check(double L1, uint64_t n_signal_success, double f, double gamma, double alpha4);

}  // namespace mdiotbc::decoy
