#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mdiotbc/adversary.hpp"
#include "mdiotbc/bounds.hpp"
#include "mdiotbc/channel.hpp"
#include "mdiotbc/common.hpp"
#include "mdiotbc/decoy.hpp"
#include "mdiotbc/gf2.hpp"
#include "mdiotbc/rng.hpp"
#include "mdiotbc/source.hpp"
#include "mdiotbc/trace.hpp"

namespace mdiotbc::bc {

using gf2::BitString;
using gf2::IndexSet;

enum class Variant { Perfect, Decoy };
const char* variant_name(Variant v);

// How the commitment code dimension k is chosen once n is known.
//  BoundRate: R = ln(eps)/n + 1 - h(delta), k = ceil(R n).
//  FixedK:    k as given.
//  Screened:  the largest k whose random-code distance tail at relative
//             distance 2(e_err + 2 alpha2) is at most 2^tail_log2.
struct CodePolicy {
    enum class Kind { BoundRate, FixedK, Screened };
    Kind kind = Kind::BoundRate;
    std::size_t k = 0;
    double tail_log2 = -30.0;

    static CodePolicy bound_rate() { return {}; }
    static CodePolicy fixed_k(std::size_t k) { return {Kind::FixedK, k, 0.0}; }
    static CodePolicy screened(double tail_log2 = -30.0) { return {Kind::Screened, 0, tail_log2}; }
};

struct BcConfig {
    bounds::SecurityParams params;
    Variant variant = Variant::Perfect;
    SourceModel src_a = SourceModel::perfect();
    SourceModel src_b = SourceModel::perfect();
    decoy::ChernoffEps chernoff;
    decoy::Method estimator = decoy::Method::ClosedFormQ2;
    // Per intensity-pair failure probabilities, overriding params.p_fail.
    std::map<std::pair<std::string, std::string>, double> p_fail_table;
    // Physical error rate of the channel when it differs from the expected
    // rate the checks are tuned for.
    std::optional<double> channel_e_err;
    CodePolicy code;
    // Bypass the round solver. For Decoy, n_override is the size the
    // retained set must reach and N_override the number of rounds sent.
    std::optional<uint64_t> n_override, N_override;
    bool keep_trace = false;

    channel::ChannelModel channel_model() const;
};

// Round plan the session runs with: the solver's unless overridden.
// Throws InfeasibleError when the solver finds no n.
bounds::RoundPlan plan_rounds(const BcConfig& cfg);

// Code dimension under `policy` for a retained size n and relative
// distance target delta. Throws InfeasibleError when k would be <= 0.
std::size_t choose_code_dimension(const CodePolicy& policy, const bounds::SecurityParams& p, uint64_t n,
                                  double delta);

enum class Reason { None, SyndromeMismatch, ErrorWindow, CommittedAbort };
const char* reason_name(Reason r);

struct OpenOutcome {
    bool accepted = false;
    BitString c_tilde;
    Reason reason = Reason::None;
    std::size_t disagreements = 0;  // over I, for the claimed string
    double error_fraction = 0;
};

// Outcome of one named check in the preparation or commit phase.
struct CheckRecord {
    std::string name;
    channel::Party who = channel::Party::Bob;
    bool passed = true;
    double value = 0;
    double threshold = 0;
    std::string note;
};

struct CommitResult {
    BitString c;  // Alice's output, uniform if she is abort-pending
    bool bob_committed = false;
    BitString theta_reveal, w;
    gf2::ToeplitzSeed r;
    std::vector<CheckRecord> checks;
};

class BcSession {
public:
    enum class Phase { Fresh, Prepared, Committed, Opened };

    BcSession(BcConfig cfg, uint64_t seed);
    BcSession(BcConfig cfg, bounds::RoundPlan plan, uint64_t seed);

    // Preparation: quantum rounds plus, for the decoy variant, intensity
    // announcements, fraction checks, photon-number estimation and the size
    // check. Every failed check only sets an abort-pending flag.
    void prepare();

    // Wait marker, basis reveal, sifting, the |I| check and the commit
    // messages. `theta_override` replaces the revealed basis string, which
    // models an Alice who lies about her bases.
    const CommitResult& commit(const std::optional<BitString>& theta_override = std::nullopt);

    OpenOutcome open(const BitString& x_claim);
    OpenOutcome open_honest() { return open(alice_x_); }

    Phase phase() const { return phase_; }
    const BcConfig& config() const { return cfg_; }
    const bounds::RoundPlan& plan() const { return plan_; }
    uint64_t seed() const { return seed_; }

    const channel::Transcript& transcript() const { return transcript_; }
    const gf2::LinearCode& code() const { return code_; }
    const BitString& alice_x() const { return alice_x_; }
    const BitString& alice_theta() const { return alice_theta_; }
    const BitString& alice_c_extracted() const { return c_ext_; }
    const IndexSet& bob_I() const { return sift_.I; }
    const BitString& bob_x_hat_I() const { return sift_.x_hat_I; }
    const CommitResult& commit_result() const { return commit_; }
    const std::vector<CheckRecord>& checks() const { return checks_; }
    bool alice_abort_pending() const { return alice_abort_; }
    bool bob_abort_pending() const { return bob_abort_; }
    // A decoy estimate could not be formed because the Chernoff conditions failed.
    bool inconclusive() const { return inconclusive_; }
    std::optional<uint64_t> total_rounds() const;
    double alpha1() const { return alpha1_; }
    double alpha2() const { return alpha2_; }
    const Trace& trace() const { return trace_; }

private:
    void require(Phase want, const char* op) const;
    void record(CheckRecord c);
    void decoy_steps();

    BcConfig cfg_;
    bounds::RoundPlan plan_;
    uint64_t seed_;
    Rng root_;
    Rng alice_rng_, bob_rng_, public_rng_;
    Phase phase_ = Phase::Fresh;

    channel::Transcript transcript_;
    BitString alice_x_, alice_theta_;
    channel::BobStrings bob_;
    channel::SiftResult sift_;
    gf2::LinearCode code_;
    BitString c_ext_;
    CommitResult commit_;
    std::vector<CheckRecord> checks_;
    std::optional<bounds::DecoyContext> observed_ctx_;
    bool alice_abort_ = false, bob_abort_ = false, inconclusive_ = false;
    double alpha1_ = 0, alpha2_ = 0;
    Trace trace_;
};

// What a cheating Alice may use when choosing her alternative opening.
struct CheatContext {
    const BcSession& session;
    const adversary::LeakageRecord* knowledge;  // null for the perfect variant
};

using CustomPlan = std::function<BitString(const CheatContext&)>;

struct CheatStrategy {
    enum class Kind { CodewordFlip, FlipOutsideKnowledge, Custom };
    Kind kind = Kind::CodewordFlip;
    std::size_t candidates = 0;  // FlipOutsideKnowledge: codewords searched (0 selects a default)
    CustomPlan plan;

    static CheatStrategy codeword_flip() { return {}; }
    static CheatStrategy flip_outside_knowledge(std::size_t candidates = 0) {
        return {Kind::FlipOutsideKnowledge, candidates, nullptr};
    }
    static CheatStrategy custom(CustomPlan p) { return {Kind::Custom, 0, std::move(p)}; }
};

// Thrown when a strategy has no way to build a different opening.
class StrategyImpossible : public std::runtime_error {
public:
    explicit StrategyImpossible(const std::string& what) : std::runtime_error(what) {}
};

// Minimum-weight nonzero codeword, exact for k <= 20 and a low-weight
// heuristic above that.
BitString min_weight_codeword(const gf2::LinearCode& code);

// Builds x' != x with Syn(x') = w according to `strategy` and opens with it.
OpenOutcome bc_cheating_open(BcSession& session, const adversary::LeakageRecord* knowledge,
                             const CheatStrategy& strategy);

}  // namespace mdiotbc::bc
