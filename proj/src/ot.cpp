#include "mdiotbc/ot.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mdiotbc/common.hpp"

namespace mdiotbc::ot {

channel::ChannelModel OtConfig::channel_model() const {
    channel::ChannelModel ch;
    ch.e_err = channel_e_err.value_or(params.e_err);
    ch.p_fail = params.p_fail;
    ch.p_fail_table = p_fail_table;
    return ch;
}

bounds::RoundPlan plan_rounds(const OtConfig& cfg) {
    cfg.params.validate();
    if (cfg.n_override) {
        const auto chk = bounds::round_inequality(bounds::Mode::Ot, *cfg.n_override, cfg.params, SourceModel::perfect(),
                                                  SourceModel::perfect());
        return {*cfg.n_override, std::nullopt, chk.lambda, chk.delta};
    }
    auto plan = bounds::solve_rounds(bounds::Mode::Ot, cfg.params);
    if (!plan) throw InfeasibleError(plan.why());
    return plan.value();
}

namespace {

std::size_t m_from_alpha(uint64_t n, double alpha1) {
    const double v = (0.5 - alpha1) * static_cast<double>(n);
    if (v <= 0) return 0;
    return static_cast<std::size_t>(std::ceil(v));
}

}  // namespace

std::size_t half_size(uint64_t n, double epsilon) {
    if (n == 0) return 0;
    return m_from_alpha(n, std::sqrt(std::log(1.0 / epsilon) / (2.0 * static_cast<double>(n))));
}

ChoiceSets bob_choice_sets(const IndexSet& I, uint64_t n, double alpha1, Rng& rng) {
    if (I.ambient() != n) throw std::invalid_argument("bob_choice_sets: index set over the wrong range");
    ChoiceSets s;
    s.m = m_from_alpha(n, alpha1);
    if (s.m == 0) {
        // No room for two halves at all; keep one position each so that
        // the run still has the shape of a real one.
        s.abort_pending = true;
        s.m = n >= 2 ? 1 : 0;
    }
    const IndexSet comp = I.complement();
    if (I.size() >= s.m) {
        s.I_trunc = I.random_subset(s.m, rng);
    } else {
        s.abort_pending = true;
        s.I_trunc = I.set_union(comp.random_subset(s.m - I.size(), rng));
    }
    if (!s.abort_pending && comp.size() >= s.m) {
        s.I_bad = comp.random_subset(s.m, rng);
    } else {
        s.abort_pending = true;
        s.I_bad = s.I_trunc.complement().random_subset(s.m, rng);
    }
    s.c = rng.bit();
    s.I0 = s.c ? s.I_bad : s.I_trunc;
    s.I1 = s.c ? s.I_trunc : s.I_bad;
    return s;
}

std::size_t ec_dimension(std::size_t m, double e_err, double c_ec) {
    const double md = static_cast<double>(m);
    const double leak = std::ceil(bounds::binary_entropy(e_err) * md + c_ec * std::sqrt(md));
    if (leak >= md) return 0;
    return m - static_cast<std::size_t>(std::max(0.0, leak));
}

EcResult error_correct(const BitString& x_half, const BitString& x_hat_half, const gf2::LinearCode& ec_code) {
    if (x_half.size() != ec_code.n || x_hat_half.size() != ec_code.n)
        throw std::invalid_argument("error_correct: half length differs from the code length");
    const BitString syn = gf2::syndrome(ec_code, x_half);
    return {gf2::coset_decode(ec_code, syn, x_hat_half), ec_code.n - ec_code.k};
}

OtRun ot_run(const OtConfig& cfg, const bounds::RoundPlan& plan, uint64_t seed) {
    const auto& p = cfg.params;
    p.validate();
    OtRun run;
    run.trace = Trace(cfg.keep_trace);
    Rng root(seed);
    auto prep = channel::PrepRngs::from(root);
    Rng alice = root.fork("alice");
    Rng bob = root.fork("bob");
    Rng choice = root.fork("bob.choice");
    Rng pub = root.fork("public");

    run.transcript = channel::run_preparation(cfg.channel_model(), SourceModel::perfect(), SourceModel::perfect(),
                                              channel::PrepMode::until_n(plan.n), prep);
    run.n = run.transcript.n;
    {
        BitString outcomes(run.transcript.rounds.size() * 2);
        for (std::size_t i = 0; i < run.transcript.rounds.size(); ++i) {
            outcomes.set(2 * i, run.transcript.rounds[i].success);
            outcomes.set(2 * i + 1, run.transcript.rounds[i].success && run.transcript.rounds[i].parity);
        }
        run.trace.add("preparation", "station->*", "bell_outcomes", outcomes);
    }
    auto a = channel::alice_strings(run.transcript);
    run.x = std::move(a.x);
    run.theta = std::move(a.theta);
    const auto b = channel::bob_strings(run.transcript);

    run.trace.marker("preparation", "wait_delta_t");
    run.trace.add("preparation", "A->B", "theta_reveal", run.theta);
    const auto sifted = channel::sift(b, run.theta);
    run.I = sifted.I;

    const double alpha1 = bounds::fluctuation_terms(run.n, p).alpha1.value();
    run.sets = bob_choice_sets(run.I, run.n, alpha1, choice);
    run.m = run.sets.m;
    {
        BitString msg = run.sets.I0.mask();
        BitString both(2 * run.n);
        for (std::size_t i = 0; i < run.n; ++i) {
            both.set(i, msg.get(i));
            both.set(run.n + i, run.sets.I1.contains(static_cast<uint32_t>(i)));
        }
        run.trace.add("post", "B->A", "choice_sets", both);
    }

    run.k_m = ec_dimension(run.m, p.e_err, p.c_ec);
    const uint64_t code_seed = pub.next();
    Rng code_rng(code_seed);
    const gf2::LinearCode code = gf2::sample_code(run.m, run.k_m, code_rng);
    {
        BitString s(64);
        for (std::size_t i = 0; i < 64; ++i) s.set(i, (code_seed >> (63 - i)) & 1u);
        run.trace.add("post", "public", "ec_code_seed", s);
    }

    const BitString x0 = run.x.restrict_to(run.sets.I0);
    const BitString x1 = run.x.restrict_to(run.sets.I1);
    run.syn0 = gf2::syndrome(code, x0);
    run.syn1 = gf2::syndrome(code, x1);
    run.leak_bits = run.syn0.size() + run.syn1.size();
    run.trace.add("post", "A->B", "ec_syndrome_0", run.syn0);
    run.trace.add("post", "A->B", "ec_syndrome_1", run.syn1);

    const bool c = run.sets.c;
    const IndexSet& Ic = c ? run.sets.I1 : run.sets.I0;
    const BitString& syn_c = c ? run.syn1 : run.syn0;
    const BitString x_hat_c = b.x_hat.restrict_to(Ic);
    BitString corrected = x_hat_c;
    // With abort pending the halves may hold padding that no code of this
    // size is meant to fix, so Bob skips decoding there.
    if (!run.sets.abort_pending) corrected = gf2::coset_decode(code, syn_c, x_hat_c);

    run.r0 = gf2::ToeplitzSeed::random(run.m, p.l, alice);
    run.r1 = gf2::ToeplitzSeed::random(run.m, p.l, alice);
    run.trace.add("post", "A->B", "extractor_seed_0", run.r0.diagonal);
    run.trace.add("post", "A->B", "extractor_seed_1", run.r1.diagonal);

    auto& res = run.result;
    res.s0_raw = gf2::toeplitz_extract(x0, run.r0);
    res.s1_raw = gf2::toeplitz_extract(x1, run.r1);
    res.s_hat_raw = gf2::toeplitz_extract(corrected, c ? run.r1 : run.r0);
    res.aborted = run.sets.abort_pending;
    if (res.aborted) {
        run.trace.marker("post", "abort_announced");
        res.s0 = BitString::random(p.l, alice);
        res.s1 = BitString::random(p.l, alice);
        res.c = bob.bit();
        res.s_hat = BitString::random(p.l, bob);
    } else {
        res.s0 = res.s0_raw;
        res.s1 = res.s1_raw;
        res.c = c;
        res.s_hat = res.s_hat_raw;
    }
    return run;
}

std::string alice_view_string(const OtRun& run) {
    std::string s = run.transcript.alice_view().serialize();
    auto put = [&](const char* tag, const IndexSet& set) {
        s += tag;
        for (auto i : set.members()) {
            s += std::to_string(i);
            s += ',';
        }
    };
    put("|I0:", run.sets.I0);
    put("|I1:", run.sets.I1);
    return s;
}

}  // namespace mdiotbc::ot
