#include "mdiotbc/bc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace mdiotbc::bc {

using channel::Party;

const char* variant_name(Variant v) { return v == Variant::Perfect ? "perfect" : "decoy"; }

const char* reason_name(Reason r) {
    switch (r) {
        case Reason::None: return "none";
        case Reason::SyndromeMismatch: return "syndrome-mismatch";
        case Reason::ErrorWindow: return "error-window";
        case Reason::CommittedAbort: return "committed-abort";
    }
    return "?";
}

channel::ChannelModel BcConfig::channel_model() const {
    channel::ChannelModel ch;
    ch.e_err = channel_e_err.value_or(params.e_err);
    ch.p_fail = params.p_fail;
    ch.p_fail_table = p_fail_table;
    return ch;
}

bounds::RoundPlan plan_rounds(const BcConfig& cfg) {
    const auto& p = cfg.params;
    p.validate();
    if (cfg.variant == Variant::Perfect) {
        if (cfg.n_override) {
            const auto chk = bounds::round_inequality(bounds::Mode::BcPerfect, *cfg.n_override, p, cfg.src_a, cfg.src_b);
            return {*cfg.n_override, std::nullopt, chk.lambda, chk.delta};
        }
        auto plan = bounds::solve_rounds(bounds::Mode::BcPerfect, p);
        if (!plan) throw InfeasibleError(plan.why());
        return plan.value();
    }

    bounds::RoundPlan plan;
    if (cfg.n_override) {
        const auto chk = bounds::round_inequality(bounds::Mode::BcDecoy, *cfg.n_override, p, cfg.src_a, cfg.src_b);
        plan = {*cfg.n_override, std::nullopt, chk.lambda, chk.delta};
    } else {
        auto solved = bounds::solve_rounds(bounds::Mode::BcDecoy, p, cfg.src_a, cfg.src_b);
        if (!solved) throw InfeasibleError(solved.why());
        plan = solved.value();
    }
    if (cfg.N_override) {
        plan.N = *cfg.N_override;
    } else if (!plan.N) {
        const double keep = cfg.src_a.signal_prob() * cfg.src_b.signal_prob() * (1.0 - p.p_fail);
        plan.N = bounds::solve_total_rounds(plan.n, keep, p.epsilon, std::max<uint64_t>(p.n_max, 1ULL << 50));
        if (!plan.N) throw InfeasibleError({"p", "retention probability is zero"});
    }
    return plan;
}

std::size_t choose_code_dimension(const CodePolicy& policy, const bounds::SecurityParams& p, uint64_t n,
                                  double delta) {
    const double nn = static_cast<double>(n);
    switch (policy.kind) {
        case CodePolicy::Kind::FixedK:
            if (policy.k > n) throw std::invalid_argument("code dimension exceeds n");
            return policy.k;
        case CodePolicy::Kind::BoundRate: {
            const double R = std::log(p.epsilon) / nn + 1.0 - bounds::binary_entropy_capped(delta);
            if (R <= 0)
                throw InfeasibleError({"R", "code rate ln(eps)/n + 1 - h(delta) is not positive at n = " +
                                                std::to_string(n)});
            return std::min<std::size_t>(n, static_cast<std::size_t>(std::ceil(R * nn)));
        }
        case CodePolicy::Kind::Screened: {
            const auto t = bounds::fluctuation_terms(n, p);
            if (!t.alpha2) throw InfeasibleError(t.alpha2.why());
            const double d_rel = 2.0 * (p.e_err + 2.0 * t.alpha2.value());
            // code_distance_tail(R, d, n) = 2^{(R - 1 + h(d)) n} <= 2^tail
            const double kmax = nn * (1.0 - bounds::binary_entropy_capped(d_rel)) + policy.tail_log2;
            if (kmax < 1)
                throw InfeasibleError({"k", "no dimension meets the distance screen at n = " + std::to_string(n)});
            return std::min<std::size_t>(n, static_cast<std::size_t>(std::floor(kmax)));
        }
    }
    return 0;
}

namespace {

BitString pack_levels(const std::vector<channel::RoundRecord>& rounds, bool alice, std::size_t levels) {
    std::size_t width = 1;
    while ((std::size_t{1} << width) < levels) ++width;
    BitString out(rounds.size() * width);
    for (std::size_t i = 0; i < rounds.size(); ++i) {
        const unsigned v = alice ? rounds[i].intensity_a : rounds[i].intensity_b;
        for (std::size_t b = 0; b < width; ++b) out.set(i * width + b, (v >> (width - 1 - b)) & 1u);
    }
    return out;
}

BitString bell_outcomes(const std::vector<channel::RoundRecord>& rounds) {
    BitString out(rounds.size() * 2);
    for (std::size_t i = 0; i < rounds.size(); ++i) {
        out.set(2 * i, rounds[i].success);
        out.set(2 * i + 1, rounds[i].success && rounds[i].parity);
    }
    return out;
}

}  // namespace

BcSession::BcSession(BcConfig cfg, uint64_t seed) : BcSession(cfg, plan_rounds(cfg), seed) {}

BcSession::BcSession(BcConfig cfg, bounds::RoundPlan plan, uint64_t seed)
    : cfg_(std::move(cfg)),
      plan_(plan),
      seed_(seed),
      root_(seed),
      alice_rng_(root_.fork("alice")),
      bob_rng_(root_.fork("bob")),
      public_rng_(root_.fork("public")),
      trace_(cfg_.keep_trace) {
    cfg_.params.validate();
    if (cfg_.variant == Variant::Decoy && !plan_.N) throw std::invalid_argument("decoy session needs a total round count");
}

std::optional<uint64_t> BcSession::total_rounds() const {
    if (cfg_.variant == Variant::Decoy) return plan_.N;
    return std::nullopt;
}

void BcSession::require(Phase want, const char* op) const {
    if (phase_ != want) throw PhaseError(std::string(op) + " called out of order");
}

void BcSession::record(CheckRecord c) {
    if (!c.passed) {
        if (c.who == Party::Alice) alice_abort_ = true;
        else bob_abort_ = true;
    }
    checks_.push_back(std::move(c));
}

void BcSession::prepare() {
    require(Phase::Fresh, "prepare");
    auto rngs = channel::PrepRngs::from(root_);
    const auto ch = cfg_.channel_model();
    if (cfg_.variant == Variant::Perfect) {
        transcript_ = channel::run_preparation(ch, SourceModel::perfect(), SourceModel::perfect(),
                                               channel::PrepMode::until_n(plan_.n), rngs);
    } else {
        transcript_ = channel::run_preparation(ch, cfg_.src_a, cfg_.src_b, channel::PrepMode::fixed_n(*plan_.N), rngs);
    }
    trace_.add("preparation", "station->*", "bell_outcomes", bell_outcomes(transcript_.rounds));

    if (cfg_.variant == Variant::Decoy) decoy_steps();

    auto a = channel::alice_strings(transcript_);
    alice_x_ = std::move(a.x);
    alice_theta_ = std::move(a.theta);
    bob_ = channel::bob_strings(transcript_);
    if (transcript_.n > 0) {
        const auto t = bounds::fluctuation_terms(transcript_.n, cfg_.params);
        alpha1_ = t.alpha1.value();
        alpha2_ = t.alpha2 ? t.alpha2.value() : std::numeric_limits<double>::quiet_NaN();
    }
    phase_ = Phase::Prepared;
}

void BcSession::decoy_steps() {
    const auto& rounds = transcript_.rounds;
    const auto& p = cfg_.params;
    trace_.add("preparation", "A->B", "intensities", pack_levels(rounds, true, cfg_.src_a.levels.size()));
    trace_.add("preparation", "B->A", "intensities", pack_levels(rounds, false, cfg_.src_b.levels.size()));

    uint64_t count_A = 0, count_B = 0, both = 0;
    for (const auto& r : rounds) {
        if (!r.success) continue;
        if (r.intensity_a == 0) ++count_A;
        if (r.intensity_b == 0) ++count_B;
        if (r.intensity_a == 0 && r.intensity_b == 0) ++both;
    }
    const double f_bs = count_A ? static_cast<double>(both) / static_cast<double>(count_A) : 0.0;
    const double f_as = count_B ? static_cast<double>(both) / static_cast<double>(count_B) : 0.0;
    const double p_as = cfg_.src_a.signal_prob(), p_bs = cfg_.src_b.signal_prob();
    bounds::DecoyContext ctx{static_cast<double>(count_A), static_cast<double>(count_B), f_as, f_bs, p_as, p_bs};
    observed_ctx_ = ctx;

    const uint64_t n_ret = std::max<uint64_t>(transcript_.n, 1);
    const auto terms = bounds::fluctuation_terms(n_ret, p, ctx);
    const auto& d = *terms.decoy;

    auto fraction_check = [&](Party who, double f, double p_other, const Feasible<double>& beta, const char* name) {
        CheckRecord c{name, who, false, f, 0.0, {}};
        if (!beta) {
            c.note = beta.why().detail;
        } else {
            c.threshold = p_other - beta.value();
            c.passed = f >= c.threshold;
        }
        record(std::move(c));
    };
    fraction_check(Party::Alice, f_bs, p_bs, d.beta_A, "fraction_f_bs");
    fraction_check(Party::Bob, f_as, p_as, d.beta_B, "fraction_f_as");

    auto estimate = [&](Party who) {
        const bool alice = who == Party::Alice;
        const auto view = alice ? transcript_.alice_view() : transcript_.bob_view();
        const auto& labels = alice ? transcript_.labels_a : transcript_.labels_b;
        const auto& src = alice ? cfg_.src_a : cfg_.src_b;
        const uint64_t count = alice ? count_A : count_B;
        const double f = alice ? f_bs : f_as;
        const auto& a4 = alice ? d.alpha4_A : d.alpha4_B;
        CheckRecord c{alice ? "multiphoton_A" : "multiphoton_B", who, false, 0.0, 0.0, {}};
        try {
            const auto obs = decoy::tally(view, labels);
            const auto l1 = decoy::single_photon_lower_bound(obs, decoy::intensity_given_count(src), cfg_.chernoff,
                                                             cfg_.estimator);
            if (!a4) {
                c.note = a4.why().detail;
            } else if (!(f > 0)) {
                c.note = "observed signal fraction is zero";
            } else {
                const auto dec = decoy::multiphoton_abort_check(l1.L1, count, f, p.gamma, a4.value());
                c.value = dec.ratio;
                c.threshold = p.gamma + a4.value();
                c.passed = !dec.abort;
                c.note = dec.diagnostic;
            }
        } catch (const ValidityViolation& e) {
            inconclusive_ = true;
            c.note = e.what();
        }
        record(std::move(c));
    };
    estimate(Party::Alice);
    estimate(Party::Bob);

    CheckRecord size{"retained_size", Party::Bob, transcript_.n >= plan_.n, static_cast<double>(transcript_.n),
                     static_cast<double>(plan_.n), {}};
    if (transcript_.n == 0) size.note = "no retained rounds";
    record(size);
    size.who = Party::Alice;
    record(std::move(size));
}

const CommitResult& BcSession::commit(const std::optional<BitString>& theta_override) {
    require(Phase::Prepared, "commit");
    const uint64_t n = transcript_.n;
    const auto& p = cfg_.params;
    if (theta_override && theta_override->size() != n)
        throw std::invalid_argument("commit: basis string must have n bits");

    trace_.marker("preparation", "wait_delta_t");
    commit_.theta_reveal = theta_override ? *theta_override : alice_theta_;
    trace_.add("preparation", "A->B", "theta_reveal", commit_.theta_reveal);
    sift_ = channel::sift(bob_, commit_.theta_reveal);

    const double nn = static_cast<double>(n);
    const double m = static_cast<double>(sift_.I.size());
    CheckRecord sc{"sifted_size", Party::Bob, false, m, (0.5 - alpha1_) * nn, {}};
    if (n == 0) {
        sc.note = "no retained rounds";
    } else if (cfg_.variant == Variant::Perfect) {
        sc.passed = m >= sc.threshold;
    } else {
        sc.passed = m >= sc.threshold && m <= (0.5 + alpha1_) * nn;
        sc.note = "two-sided window up to " + std::to_string((0.5 + alpha1_) * nn);
    }
    record(std::move(sc));

    if (n == 0) {
        // Nothing to commit to; outputs are uniform and no messages follow.
        commit_.c = BitString::random(p.l, alice_rng_);
        c_ext_ = commit_.c;
        commit_.checks = checks_;
        phase_ = Phase::Committed;
        return commit_;
    }

    double delta = 2.0 * p.e_err + 2.0 * (std::isnan(alpha2_) ? 0.5 : alpha2_);
    if (cfg_.variant == Variant::Decoy) {
        const auto t = bounds::fluctuation_terms(n, p, observed_ctx_);
        const auto d = bounds::decoy_delta(p, t);
        delta = d ? d.value() : plan_.delta;
    }
    const std::size_t k = choose_code_dimension(cfg_.code, p, n, delta);
    const uint64_t code_seed = public_rng_.next();
    Rng code_rng(code_seed);
    code_ = gf2::sample_code(n, k, code_rng);
    BitString seed_bits(64);
    for (std::size_t b = 0; b < 64; ++b) seed_bits.set(b, (code_seed >> (63 - b)) & 1u);
    trace_.add("commit", "public", "code_seed", seed_bits);

    commit_.w = gf2::syndrome(code_, alice_x_);
    trace_.add("commit", "A->B", "syndrome", commit_.w);
    commit_.r = gf2::ToeplitzSeed::random(n, p.l, alice_rng_);
    trace_.add("commit", "A->B", "extractor_seed", commit_.r.diagonal);
    c_ext_ = gf2::toeplitz_extract(alice_x_, commit_.r);
    commit_.c = alice_abort_ ? BitString::random(p.l, alice_rng_) : c_ext_;
    commit_.bob_committed = !bob_abort_;
    commit_.checks = checks_;
    phase_ = Phase::Committed;
    return commit_;
}

OpenOutcome BcSession::open(const BitString& x_claim) {
    require(Phase::Committed, "open");
    const uint64_t n = transcript_.n;
    if (x_claim.size() != n) throw std::invalid_argument("open: claimed string must have n bits");
    const auto& p = cfg_.params;
    trace_.add("open", "A->B", "opening", x_claim);

    OpenOutcome out;
    bool syn_ok = false, window_ok = false;
    if (n > 0) {
        syn_ok = gf2::syndrome(code_, x_claim) == commit_.w;
        const BitString diff = x_claim.restrict_to(sift_.I) ^ sift_.x_hat_I;
        out.disagreements = diff.weight();
        if (!sift_.I.empty() && !std::isnan(alpha2_)) {
            out.error_fraction = static_cast<double>(out.disagreements) / static_cast<double>(sift_.I.size());
            window_ok = out.error_fraction > p.e_err - alpha2_ && out.error_fraction < p.e_err + alpha2_;
        }
    }

    if (alice_abort_ || bob_abort_) out.reason = Reason::CommittedAbort;
    else if (!syn_ok) out.reason = Reason::SyndromeMismatch;
    else if (!window_ok) out.reason = Reason::ErrorWindow;
    out.accepted = out.reason == Reason::None;
    if (out.accepted) {
        out.c_tilde = gf2::toeplitz_extract(x_claim, commit_.r);
    } else {
        out.c_tilde = BitString::random(p.l, bob_rng_);
        trace_.marker("open", "abort_announced");
    }
    phase_ = Phase::Opened;
    return out;
}

BitString min_weight_codeword(const gf2::LinearCode& code) {
    if (code.k == 0) throw StrategyImpossible("code has no nonzero codeword");
    if (code.k > 20) return gf2::low_weight_codeword(code);
    const auto basis = gf2::codeword_basis(code);
    BitString cur(code.n), best;
    std::size_t best_w = code.n + 1;
    // Gray-code walk over all nonzero combinations of the basis.
    const uint64_t total = 1ULL << code.k;
    for (uint64_t i = 1; i < total; ++i) {
        cur ^= basis[static_cast<std::size_t>(__builtin_ctzll(i))];
        const std::size_t w = cur.weight();
        if (w < best_w) {
            best_w = w;
            best = cur;
        }
    }
    return best;
}

namespace {

// Candidate codewords for the knowledge-guided strategy: the basis, its
// pairwise sums and random combinations, up to `limit` in total.
std::vector<BitString> candidate_codewords(const gf2::LinearCode& code, std::size_t limit, Rng& rng) {
    const auto basis = gf2::codeword_basis(code);
    std::vector<BitString> out;
    for (const auto& b : basis) {
        if (out.size() >= limit) return out;
        out.push_back(b);
    }
    for (std::size_t i = 0; i < basis.size() && out.size() < limit; ++i)
        for (std::size_t j = i + 1; j < basis.size() && out.size() < limit; ++j) out.push_back(basis[i] ^ basis[j]);
    while (out.size() < limit) {
        BitString c(code.n);
        for (const auto& b : basis)
            if (rng.bit()) c ^= b;
        if (c.weight() > 0) out.push_back(std::move(c));
    }
    return out;
}

}  // namespace

OpenOutcome bc_cheating_open(BcSession& session, const adversary::LeakageRecord* knowledge,
                             const CheatStrategy& strategy) {
    if (session.phase() != BcSession::Phase::Committed) throw PhaseError("cheating open called out of order");
    const auto& code = session.code();
    const BitString& x = session.alice_x();
    BitString x_alt;
    switch (strategy.kind) {
        case CheatStrategy::Kind::CodewordFlip:
            x_alt = x ^ min_weight_codeword(code);
            break;
        case CheatStrategy::Kind::FlipOutsideKnowledge: {
            if (code.k == 0) throw StrategyImpossible("code has no nonzero codeword");
            if (!knowledge) {
                x_alt = x ^ min_weight_codeword(code);
                break;
            }
            // Expected number of flips Bob sees: a position in I_G is in the
            // sifted set with probability (1+mu)/2, one in I_B with (1-mu)/2,
            // any other with 1/2.
            const double mu = knowledge->mu;
            const BitString good = knowledge->I_G.mask(), bad = knowledge->I_B.mask();
            Rng rng = Rng(session.seed()).fork("cheat.candidates");
            const std::size_t limit = strategy.candidates ? strategy.candidates : 512;
            double best_score = std::numeric_limits<double>::infinity();
            BitString best;
            for (const auto& c : candidate_codewords(code, limit, rng)) {
                std::size_t ng = 0, nb = 0;
                for (std::size_t wi = 0; wi < c.words().size(); ++wi) {
                    ng += static_cast<std::size_t>(__builtin_popcountll(c.words()[wi] & good.words()[wi]));
                    nb += static_cast<std::size_t>(__builtin_popcountll(c.words()[wi] & bad.words()[wi]));
                }
                const std::size_t w = c.weight();
                const double score = 0.5 * (1.0 + mu) * static_cast<double>(ng) +
                                     0.5 * (1.0 - mu) * static_cast<double>(nb) +
                                     0.5 * static_cast<double>(w - ng - nb);
                if (score < best_score) {
                    best_score = score;
                    best = c;
                }
            }
            x_alt = x ^ best;
            break;
        }
        case CheatStrategy::Kind::Custom:
            if (!strategy.plan) throw std::invalid_argument("custom strategy without a plan");
            x_alt = strategy.plan(CheatContext{session, knowledge});
            break;
    }
    if (x_alt == x) throw std::invalid_argument("cheating opening equals the committed string");
    return session.open(x_alt);
}

}  // namespace mdiotbc::bc
