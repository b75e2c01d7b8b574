#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mdiotbc/common.hpp"
#include "mdiotbc/source.hpp"

namespace mdiotbc::bounds {

// User-chosen security parameters shared by every protocol.
struct SecurityParams {
    double epsilon = 0.05;
    uint32_t l = 32;           // output length in bits
    uint64_t D = 0;            // adversary storage bound in qubits
    double e_err = 0.0;        // expected channel error rate
    double gamma = 0.0;        // multiphoton tolerance
    double mu = 1.0;           // basis-guess bias carried by multiphoton leakage
    double p_fail = 0.0;       // Bell-measurement failure probability
    double delta_t = 0.0;      // wait time marker, no effect on the simulation
    uint64_t n_max = 1ULL << 24;
    double c_ec = 0.0;         // error-correction slack, leak = h(e_err) n + c_ec sqrt(n)
    bool lambda_smoothing_term = true;  // keep -log2(2/eps^2)/n in the perfect-source rate

    void validate() const;
};

double binary_entropy(double x);
// h(x) for x <= 1/2 and 1 beyond. Used for relative distances, where any
// value at or above 1/2 already means no useful code exists.
double binary_entropy_capped(double x);
double g_rate(double x);
double f_rate(double x);

// Observed decoy-stage quantities for one run. count_A is Alice's number of
// successful signal rounds (n1 + n>=2 from her side), f_bs the fraction of
// those rounds in which Bob also used the signal intensity. B is symmetric.
struct DecoyContext {
    double count_A = 0, count_B = 0;
    double f_as = 0, f_bs = 0;
    double p_as = 0, p_bs = 0;
};

struct DecoyTerms {
    Feasible<double> beta_A{0.0}, beta_B{0.0};
    Feasible<double> alpha4_A{0.0}, alpha4_B{0.0};
    Feasible<double> alpha1_dprime{0.0}, alpha1_prime{0.0}, alpha3{0.0};
};

struct FluctuationTerms {
    Feasible<double> alpha1{0.0};
    Feasible<double> alpha2{0.0};
    std::optional<DecoyTerms> decoy;
};

FluctuationTerms fluctuation_terms(uint64_t n, const SecurityParams& p,
                                   const std::optional<DecoyContext>& ctx = std::nullopt);

// Planning-time decoy context: observed fractions replaced by their
// expectations for n retained signal-signal rounds.
DecoyContext expected_decoy_context(uint64_t n, const SourceModel& a, const SourceModel& b);

// Relative distance parameter of the decoy commitment.
Feasible<double> decoy_delta(const SecurityParams& p, const FluctuationTerms& t);

enum class Mode { BcPerfect, Ot, BcDecoy };
const char* mode_name(Mode m);

struct EntropyRateQuery {
    Mode mode = Mode::BcPerfect;
    uint64_t n = 1;
    SecurityParams params;
    double gamma_plus_alpha4 = 0.0;  // BcDecoy only
};

double ot_delta_prime(uint64_t n, double epsilon);
Feasible<double> min_entropy_rate(const EntropyRateQuery& q);

double leftover_hash_distance(double h_min, uint32_t l, double eps_smooth);

double g_chernoff(double x, double y);

struct ChernoffDeviation {
    double delta = 0, delta_hat = 0;
};
ChernoffDeviation chernoff_fluctuations(double x, double eps_var, double eps_hat);

struct ChernoffValidity {
    double zeta = 0;
    bool var_ok = false;
    bool hat_ok = false;
    bool ok() const { return var_ok && hat_ok; }
    std::string failing() const;
};
ChernoffValidity chernoff_validity(double x, double sum_x, double epsilon, double eps_var, double eps_hat);
// Throws ValidityViolation naming `where` and the failing condition.
void require_chernoff_validity(double x, double sum_x, double epsilon, double eps_var, double eps_hat,
                               const std::string& where);

double code_distance_tail(double R, double delta, uint64_t n);

// One evaluation of a round-count inequality: lhs >= rhs is the goal.
// `defined` is false when some factor went non-positive; `factor` then names it.
struct RoundCheck {
    bool defined = false;
    double lhs = 0, rhs = 0;
    double lambda = 0, delta = 0;
    std::string factor;
    bool holds() const { return defined && lhs >= rhs; }
};
RoundCheck round_inequality(Mode mode, uint64_t n, const SecurityParams& p, const SourceModel& a,
                            const SourceModel& b);

struct RoundPlan {
    uint64_t n = 0;
    std::optional<uint64_t> N;
    double lambda = 0;
    double delta = 0;
};
Feasible<RoundPlan> solve_rounds(Mode mode, const SecurityParams& p, const SourceModel& a = SourceModel::perfect(),
                                 const SourceModel& b = SourceModel::perfect());

// Smallest N with (p - sqrt(ln(1/eps)/(2N))) N >= n_star.
std::optional<uint64_t> solve_total_rounds(uint64_t n_star, double p_keep, double epsilon, uint64_t n_max);

// Multiphoton-tolerance condition on the sources: the multiphoton fraction
// of Alice's non-vacuum signal emissions must not exceed p_bs * gamma.
bool source_quality_ok(const SourceModel& a, const SourceModel& b, double gamma);

struct JointEntry {
    uint64_t x = 0;
    uint64_t k = 0;
    double p = 0;
};
// H_min(X|K) = -log2 sum_k max_x p(x,k) for classical K.
double cond_min_entropy_oracle(const std::vector<JointEntry>& joint);
// Dense form, joint[x][k].
double cond_min_entropy_oracle(const std::vector<std::vector<double>>& joint);

}  // namespace mdiotbc::bounds
