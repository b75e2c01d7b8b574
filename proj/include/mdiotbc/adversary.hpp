#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mdiotbc/bounds.hpp"
#include "mdiotbc/gf2.hpp"
#include "mdiotbc/rng.hpp"

namespace mdiotbc::ot {
struct OtConfig;
}

namespace mdiotbc::adversary {

using gf2::BitString;
using gf2::IndexSet;

// What a dishonest sender learns about the receiver's sifted set from
// multiphoton rounds: I_G leans towards membership, I_B against.
struct LeakageRecord {
    IndexSet I_G, I_B;
    double gamma = 0, mu = 0;

    IndexSet leaked() const { return I_G.set_union(I_B); }
};

LeakageRecord sample_leakage(const IndexSet& I, std::size_t n, double gamma, double mu, Rng& rng);

// Restricted dishonest receiver: D rounds are kept until the bases are
// revealed, the rest are measured at once.
struct BoundedBobStrategy {
    enum class Selection { First, Random, Adaptive };
    enum class ImmediateBasis { Random, Fixed };

    uint64_t D = 0;
    Selection selection = Selection::First;
    // Adaptive selection hook: picks the stored rounds out of [0, n).
    std::function<std::vector<uint32_t>(std::size_t n, uint64_t D, Rng&)> adaptive;
    ImmediateBasis immediate = ImmediateBasis::Random;
    bool fixed_basis = false;
};

struct RoundKnowledge {
    bool stored = false;
    bool basis_matched = false;  // learnt after the reveal
    bool known = false;          // X learnt exactly
    bool bit = false;            // Bob's bit for this round
};

struct BobKnowledge {
    std::vector<RoundKnowledge> rounds;
    uint64_t stored = 0;
    bool clamped = false;  // D exceeded n

    IndexSet known_set() const;
    // Probability of guessing the whole string from this record.
    double guess_probability() const;
};

BobKnowledge bounded_bob_view(const BitString& x, const BitString& theta, const BoundedBobStrategy& strategy,
                              const BitString& theta_reveal, Rng& rng);

// Exact joint distribution of X_1^n and the classical record of the
// restricted receiver that stores the first D rounds and measures the rest
// in a uniformly random basis. Intended for n <= 8.
std::vector<bounds::JointEntry> restricted_bob_joint(std::size_t n, uint64_t D);

// Exact secrecy of Ext(X, r) against a receiver who holds the syndrome of
// X, the seed r and the bits of X on a set M of positions.
struct ExactSecrecy {
    double trace_distance = 0;  // of (C, view) from uniform x view, averaged over the seed
    double p_guess = 0;         // of C from the view
    double h_min = 0;           // H_min(X | view without the seed)
};

// Commitment hiding against the D = 0 restricted receiver: M holds each
// position with probability 1/2, independently. Exact, by rank counting:
// for fixed M and seed the view pins X to a coset of the kernel of
// A_M = [H; e_i for i in M], and C is uniform on a coset of T(ker A_M).
// Cost 2^n * 2^(n+l-1) small eliminations, n <= 14.
ExactSecrecy bc_hiding_exact(const gf2::LinearCode& code, std::size_t l);

// The same quantities by brute-force enumeration of (M, r, x), for cross
// checks. n + (n + l - 1) <= 22.
ExactSecrecy bc_hiding_enumerated(const gf2::LinearCode& code, std::size_t l);

// H_min(X | M, X_M, Syn(X)) from the explicit joint pmf through the
// classical oracle. n <= 11.
double bc_hiding_hmin_oracle(const gf2::LinearCode& code);

// Secrecy of one OT output when the receiver knows X exactly on `known`
// (a subset of the half) and has nothing on the rest.
ExactSecrecy extract_secrecy_exact(const gf2::LinearCode& code, std::size_t l, const IndexSet& known);

struct GuessResult {
    bool b = false;
    std::size_t kappa = 0;
    bool omega = false;
    bool r = false;
    bool i_r_in_good = false;
};

// Dishonest sender's guess of the receiver's choice bit from (I0, I1) and
// the leaked sets.
GuessResult alice_guess(const IndexSet& I0, const IndexSet& I1, const LeakageRecord& leak, Rng& rng);

// Wilson score interval.
struct Interval {
    double lo = 0, hi = 1;
};
Interval wilson(uint64_t successes, uint64_t trials, double z = 2.5758293035489);

struct AttackTrial {
    uint64_t trial = 0;
    bool c = false;
    bool b = false;
    std::size_t kappa = 0;
    double alpha = 0;  // NaN when I_{1-C} \ I_C misses the leaked set
    bool omega = false;
    bool aborted = false;  // the OT run itself aborted (padded halves)
};

struct AttackStats {
    uint64_t trials = 0;
    uint64_t aborted = 0;
    uint64_t correct = 0, omega = 0, correct_given_omega = 0;
    double p_guess_hat = 0;
    Interval p_guess_ci;
    double p_omega_hat = 0;
    Interval p_omega_ci;
    double alpha_hat = 0;  // mean over trials where alpha is defined
    uint64_t alpha_count = 0;
    double min_alpha_on_omega = 1;
    double conditional_guess_hat = 0;
    Interval conditional_ci;
};

struct AttackConfig {
    double gamma = 0.1;
    double mu = 1.0;
};

// Runs `trials` OT sessions with a semi-honest sender who applies the
// guessing strategy after the fact. Trial t uses seed derive_seed(seed,
// "attack", t). Rows are filled in trial order when requested.
AttackStats estimate_attack_advantage(const ot::OtConfig& cfg, const bounds::RoundPlan& plan,
                                      const AttackConfig& attack, uint64_t trials, uint64_t seed,
                                      unsigned threads = 1, std::vector<AttackTrial>* rows = nullptr);

}  // namespace mdiotbc::adversary
