#include "mdiotbc/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

namespace mdiotbc::bounds {

namespace {

double ln_inv(double eps) { return std::log(1.0 / eps); }

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

}  // namespace

void SecurityParams::validate() const {
    auto bad = [](const std::string& m) { throw std::invalid_argument("SecurityParams: " + m); };
    if (!(epsilon > 0 && epsilon < 1)) bad("epsilon must lie in (0,1)");
    if (l == 0) bad("l must be positive");
    if (!(e_err >= 0 && e_err < 0.5)) bad("e_err must lie in [0,1/2)");
    if (!(gamma >= 0 && gamma <= 0.5)) bad("gamma must lie in [0,1/2]");
    if (!(mu > 0 && mu <= 1)) bad("mu must lie in (0,1]");
    if (!(p_fail >= 0 && p_fail <= 1)) bad("p_fail must lie in [0,1]");
    if (!(delta_t >= 0)) bad("delta_t must be non-negative");
    if (n_max == 0) bad("n_max must be positive");
    if (!(c_ec >= 0)) bad("c_ec must be non-negative");
}

double binary_entropy(double x) {
    if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument("binary_entropy: argument outside [0,1]");
    if (x == 0.0 || x == 1.0) return 0.0;
    return -x * std::log2(x) - (1.0 - x) * std::log2(1.0 - x);
}

double binary_entropy_capped(double x) { return x >= 0.5 ? 1.0 : binary_entropy(std::max(0.0, x)); }

double g_rate(double x) { return binary_entropy(x) + x - 1.0; }

double f_rate(double x) {
    if (x > 1.0) throw std::invalid_argument("f_rate: argument above 1 is outside the definition");
    if (x < -1.0) return 0.0;
    if (x >= 0.5) return x;
    // g is strictly increasing on [0,1/2] from -1 to 1/2.
    double lo = 0.0, hi = 0.5;
    while (hi - lo > 1e-12) {
        const double mid = 0.5 * (lo + hi);
        if (g_rate(mid) < x) lo = mid; else hi = mid;
    }
    return 0.5 * (lo + hi);
}

FluctuationTerms fluctuation_terms(uint64_t n, const SecurityParams& p, const std::optional<DecoyContext>& ctx) {
    if (n == 0) throw std::invalid_argument("fluctuation_terms: n must be positive");
    const double L = ln_inv(p.epsilon);
    const double nn = static_cast<double>(n);
    FluctuationTerms t;
    const double a1 = std::sqrt(L / (2.0 * nn));
    t.alpha1 = a1;
    if (0.5 - a1 <= 0) t.alpha2 = Infeasible{"alpha2", "1/2 - alpha1 = " + fmt(0.5 - a1) + " is not positive"};
    else t.alpha2 = std::sqrt(L / (2.0 * (0.5 - a1) * nn));
    if (!ctx) return t;

    DecoyTerms d;
    auto beta = [&](double count, const char* name) -> Feasible<double> {
        if (!(count > 0)) return Infeasible{name, "no successful signal rounds"};
        return std::sqrt(L / (2.0 * count));
    };
    auto alpha4 = [&](const Feasible<double>& b, double p_other, double f_other, const char* name) -> Feasible<double> {
        if (!b) return Infeasible{name, "depends on " + b.why().factor};
        if (!(p_other > 0)) return Infeasible{name, "signal probability of the other party is zero"};
        if (!(f_other > 0)) return Infeasible{name, "observed signal fraction of the other party is zero"};
        return (2.0 / p_other + 1.0 / f_other) * b.value();
    };
    d.beta_A = beta(ctx->count_A, "beta_A");
    d.beta_B = beta(ctx->count_B, "beta_B");
    d.alpha4_A = alpha4(d.beta_A, ctx->p_bs, ctx->f_bs, "alpha4_A");
    d.alpha4_B = alpha4(d.beta_B, ctx->p_as, ctx->f_as, "alpha4_B");

    // Ordering matters: alpha1'' feeds alpha1', and both feed alpha3.
    if (!d.alpha4_B) {
        const Infeasible why{"alpha4_B", d.alpha4_B.why().detail};
        d.alpha1_dprime = why;
        d.alpha1_prime = why;
        d.alpha3 = why;
        t.decoy = d;
        return t;
    }
    const double gb = p.gamma + d.alpha4_B.value();
    const double keep = 1.0 - gb;
    if (keep <= 0) {
        const Infeasible why{"alpha1_dprime", "1 - gamma - alpha4_B = " + fmt(keep) + " is not positive"};
        d.alpha1_dprime = why;
        d.alpha1_prime = why;
        d.alpha3 = why;
        t.decoy = d;
        return t;
    }
    const double a1dd = std::sqrt(L / (2.0 * keep * nn));
    d.alpha1_dprime = a1dd;
    const double a1p = gb > 0 ? std::min(0.5, (a1 + keep * a1dd) / gb) : 0.5;
    d.alpha1_prime = a1p;
    const double bracket = 0.5 - a1dd - (0.5 + a1p) * gb;
    if (bracket <= 0) d.alpha3 = Infeasible{"alpha3", "bracket " + fmt(bracket) + " is not positive"};
    else d.alpha3 = std::sqrt(L / (2.0 * nn * bracket));
    t.decoy = d;
    return t;
}

DecoyContext expected_decoy_context(uint64_t n, const SourceModel& a, const SourceModel& b) {
    DecoyContext c;
    c.p_as = a.signal_prob();
    c.p_bs = b.signal_prob();
    c.f_as = c.p_as;
    c.f_bs = c.p_bs;
    c.count_A = c.p_bs > 0 ? static_cast<double>(n) / c.p_bs : 0.0;
    c.count_B = c.p_as > 0 ? static_cast<double>(n) / c.p_as : 0.0;
    return c;
}

Feasible<double> decoy_delta(const SecurityParams& p, const FluctuationTerms& t) {
    if (!t.decoy) return Infeasible{"delta", "decoy terms absent"};
    const auto& d = *t.decoy;
    if (!t.alpha2) return t.alpha2.why();
    for (const auto* term : {&d.alpha4_B, &d.alpha1_dprime, &d.alpha1_prime, &d.alpha3})
        if (!*term) return term->why();
    const double a1 = t.alpha1.value(), a2 = t.alpha2.value();
    const double a1p = d.alpha1_prime.value();
    const double gb = p.gamma + d.alpha4_B.value();
    const double den = (0.5 - a1p) * (1.0 - gb);
    if (den <= 0) return Infeasible{"delta", "alpha1_prime reached 1/2, error term unbounded"};
    return 2.0 * ((0.5 + a1p) * gb + d.alpha3.value() + (p.e_err + a2) * (0.5 + a1) / den);
}

const char* mode_name(Mode m) {
    switch (m) {
        case Mode::BcPerfect: return "bc-perfect";
        case Mode::Ot: return "ot";
        case Mode::BcDecoy: return "bc-decoy";
    }
    return "?";
}

double ot_delta_prime(uint64_t n, double epsilon) {
    const double s = std::sqrt(32.0 * ln_inv(epsilon) / static_cast<double>(n));
    return (2.0 - std::log2(s)) * s;
}

Feasible<double> min_entropy_rate(const EntropyRateQuery& q) {
    if (q.n == 0) throw std::invalid_argument("min_entropy_rate: n must be positive");
    const double n = static_cast<double>(q.n);
    const auto& p = q.params;
    double lambda = 0;
    switch (q.mode) {
        case Mode::BcPerfect:
            lambda = f_rate(-static_cast<double>(p.D) / n) - 1.0 / n;
            if (p.lambda_smoothing_term) lambda -= std::log2(2.0 / (p.epsilon * p.epsilon)) / n;
            break;
        case Mode::Ot:
            lambda = 0.5 - 2.0 * ot_delta_prime(q.n, p.epsilon);
            break;
        case Mode::BcDecoy:
            lambda = f_rate(-static_cast<double>(p.D) / n) - q.gamma_plus_alpha4 - 1.0 / n;
            break;
    }
    if (lambda <= 0) return Infeasible{"lambda", "min-entropy rate " + fmt(lambda) + " is not positive"};
    return lambda;
}

double leftover_hash_distance(double h_min, uint32_t l, double eps_smooth) {
    return 2.0 * eps_smooth + 0.5 * std::exp2(-(h_min - static_cast<double>(l)) / 2.0);
}

double g_chernoff(double x, double y) { return std::sqrt(2.0 * x * std::log(1.0 / y)); }

ChernoffDeviation chernoff_fluctuations(double x, double eps_var, double eps_hat) {
    if (x < 0) throw std::invalid_argument("chernoff_fluctuations: negative count");
    if (!(eps_var > 0 && eps_var < 1 && eps_hat > 0 && eps_hat < 1))
        throw std::invalid_argument("chernoff_fluctuations: epsilons must lie in (0,1)");
    return {g_chernoff(x, std::pow(eps_var, 4) / 16.0), g_chernoff(x, std::pow(eps_hat, 1.5))};
}

std::string ChernoffValidity::failing() const {
    if (zeta <= 0) return "zeta_L = " + fmt(zeta) + " is not positive";
    if (!var_ok) return "(2/eps_var)^(1/zeta_L) exceeds exp(3/(4 sqrt 2))^2";
    if (!hat_ok) return "(1/eps_hat)^(1/zeta_L) is not below exp(1/3)";
    return "";
}

ChernoffValidity chernoff_validity(double x, double sum_x, double epsilon, double eps_var, double eps_hat) {
    ChernoffValidity v;
    v.zeta = x - std::sqrt(sum_x / 2.0 * ln_inv(epsilon));
    if (v.zeta <= 0) return v;
    v.var_ok = std::log(2.0 / eps_var) / v.zeta <= 2.0 * 3.0 / (4.0 * std::sqrt(2.0));
    v.hat_ok = std::log(1.0 / eps_hat) / v.zeta < 1.0 / 3.0;
    return v;
}

void require_chernoff_validity(double x, double sum_x, double epsilon, double eps_var, double eps_hat,
                               const std::string& where) {
    const auto v = chernoff_validity(x, sum_x, epsilon, eps_var, eps_hat);
    if (!v.ok()) throw ValidityViolation(where + ": " + v.failing());
}

double code_distance_tail(double R, double delta, uint64_t n) {
    return std::exp2((R - (1.0 - binary_entropy(delta))) * static_cast<double>(n));
}

RoundCheck round_inequality(Mode mode, uint64_t n, const SecurityParams& p, const SourceModel& a,
                            const SourceModel& b) {
    RoundCheck c;
    const double nn = static_cast<double>(n);
    const double L = ln_inv(p.epsilon);
    auto fail = [&](std::string factor) {
        c.defined = false;
        c.factor = std::move(factor);
        return c;
    };

    if (mode == Mode::Ot) {
        const auto t = fluctuation_terms(n, p);
        const auto lam = min_entropy_rate({Mode::Ot, n, p, 0.0});
        if (!lam) return fail("lambda");
        c.lambda = lam.value();
        c.delta = p.e_err;
        const double a1 = t.alpha1.value();
        const double leak = binary_entropy(p.e_err) * nn + p.c_ec * std::sqrt(nn);
        c.lhs = nn * (c.lambda - 2.0 * a1) - leak;
        // 1 - sqrt(1 - eps^2) written without cancellation.
        const double tail = p.epsilon * p.epsilon / (1.0 + std::sqrt(1.0 - p.epsilon * p.epsilon));
        c.rhs = 2.0 * (static_cast<double>(p.l) + static_cast<double>(p.D) + 1.0 - 2.0 * std::log2(tail));
        c.defined = true;
        if (c.lambda - 2.0 * a1 - leak / nn <= 0) return fail("lambda - 2 alpha1 - leak/n");
        return c;
    }

    const double rhs = static_cast<double>(p.l) + 2.0 * std::log2(1.0 / (2.0 * p.epsilon)) + L;
    FluctuationTerms t;
    double gpa4 = 0.0;
    if (mode == Mode::BcDecoy) {
        t = fluctuation_terms(n, p, expected_decoy_context(n, a, b));
        if (!t.alpha2) return fail("alpha2");
        if (!t.decoy->alpha4_A) return fail(t.decoy->alpha4_A.why().factor);
        gpa4 = p.gamma + t.decoy->alpha4_A.value();
        const auto d = decoy_delta(p, t);
        if (!d) return fail(d.why().factor);
        c.delta = d.value();
    } else {
        t = fluctuation_terms(n, p);
        if (!t.alpha2) return fail("alpha2");
        c.delta = 2.0 * p.e_err + 2.0 * t.alpha2.value();
    }
    const auto lam = min_entropy_rate({mode, n, p, gpa4});
    if (!lam) return fail("lambda");
    c.lambda = lam.value();
    c.lhs = (c.lambda - binary_entropy_capped(c.delta)) * nn;
    c.rhs = rhs;
    c.defined = true;
    if (c.lambda - binary_entropy_capped(c.delta) <= 0) return fail("lambda - h(delta)");
    return c;
}

std::optional<uint64_t> solve_total_rounds(uint64_t n_star, double p_keep, double epsilon, uint64_t n_max) {
    if (!(p_keep > 0)) return std::nullopt;
    const double L = ln_inv(epsilon);
    // The left side is below p N, so nothing smaller than n*/p can work.
    uint64_t N = std::max<uint64_t>(1, static_cast<uint64_t>(std::floor(static_cast<double>(n_star) / p_keep)));
    for (; N <= n_max; ++N) {
        const double Nd = static_cast<double>(N);
        if ((p_keep - std::sqrt(L / (2.0 * Nd))) * Nd >= static_cast<double>(n_star)) return N;
    }
    return std::nullopt;
}

Feasible<RoundPlan> solve_rounds(Mode mode, const SecurityParams& p, const SourceModel& a, const SourceModel& b) {
    p.validate();
    a.validate();
    b.validate();
    const double f0 = f_rate(0.0);

    // Limits as n grows without bound. When the limiting margin is already
    // non-positive no finite n can satisfy the inequality.
    if (mode == Mode::BcPerfect && binary_entropy_capped(2.0 * p.e_err) >= f0)
        return Infeasible{"lambda - h(delta)",
                          "h(2 e_err) = " + fmt(binary_entropy_capped(2.0 * p.e_err)) +
                              " is at least sup lambda = f(0) = " + fmt(f0)};
    if (mode == Mode::Ot && binary_entropy(p.e_err) >= 0.5)
        return Infeasible{"lambda - 2 alpha1 - leak/n", "h(e_err) is at least sup lambda = 1/2"};
    if (mode == Mode::BcDecoy && binary_entropy_capped(p.gamma + 2.0 * p.e_err) >= f0 - p.gamma)
        return Infeasible{"lambda - h(delta)", "h(gamma + 2 e_err) is at least f(0) - gamma"};

    // For n <= D, f(-D/n) = 0 and lambda is negative in both BC modes.
    uint64_t n = 1;
    if (mode != Mode::Ot && p.D >= 1) n = p.D + 1;
    if (n > p.n_max) return Infeasible{"lambda", "D >= n_max forces lambda <= 0 at every scanned n"};

    RoundCheck last;
    for (; n <= p.n_max; ++n) {
        last = round_inequality(mode, n, p, a, b);
        if (last.holds()) break;
    }
    if (n > p.n_max) {
        if (!last.defined)
            return Infeasible{last.factor, "not positive at n_max = " + std::to_string(p.n_max)};
        return Infeasible{"n_max", "inequality still short at n_max = " + std::to_string(p.n_max) + " (lhs " +
                                       fmt(last.lhs) + " < rhs " + fmt(last.rhs) + ")"};
    }
    RoundPlan plan{n, std::nullopt, last.lambda, last.delta};
    if (mode == Mode::BcDecoy) {
        const double keep = a.signal_prob() * b.signal_prob() * (1.0 - p.p_fail);
        auto N = solve_total_rounds(n, keep, p.epsilon, std::max<uint64_t>(p.n_max, 1ULL << 50));
        if (!N) return Infeasible{"p", "retention probability p_as p_bs (1 - p_fail) is zero"};
        plan.N = *N;
    }
    return plan;
}

bool source_quality_ok(const SourceModel& a, const SourceModel& b, double gamma) {
    if (a.is_perfect()) return true;
    const double m = a.signal().mean;
    const double p0 = std::exp(-m), p1 = m * std::exp(-m);
    const double multi = 1.0 - p0 - p1;
    return multi / (1.0 - p0) <= b.signal_prob() * gamma;
}

double cond_min_entropy_oracle(const std::vector<JointEntry>& joint) {
    long double total = 0;
    std::unordered_map<uint64_t, double> best;
    for (const auto& e : joint) {
        if (e.p < 0) throw std::invalid_argument("cond_min_entropy_oracle: negative probability");
        total += e.p;
        auto& b = best[e.k];
        b = std::max(b, e.p);
    }
    if (std::fabs(static_cast<double>(total) - 1.0) > 1e-12 + 1e-15 * static_cast<double>(joint.size()))
        throw std::invalid_argument("cond_min_entropy_oracle: pmf does not sum to 1");
    long double guess = 0;
    for (const auto& [k, v] : best) guess += v;
    return -std::log2(static_cast<double>(guess));
}

double cond_min_entropy_oracle(const std::vector<std::vector<double>>& joint) {
    std::vector<JointEntry> flat;
    for (std::size_t x = 0; x < joint.size(); ++x)
        for (std::size_t k = 0; k < joint[x].size(); ++k) flat.push_back({x, k, joint[x][k]});
    return cond_min_entropy_oracle(flat);
}

}  // namespace mdiotbc::bounds
