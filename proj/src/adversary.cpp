#include "mdiotbc/adversary.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "mdiotbc/ot.hpp"
#include "mdiotbc/parallel.hpp"

namespace mdiotbc::adversary {

LeakageRecord sample_leakage(const IndexSet& I, std::size_t n, double gamma, double mu, Rng& rng) {
    if (I.ambient() != n) throw std::invalid_argument("sample_leakage: index set over the wrong range");
    if (gamma < 0 || gamma > 1 || mu < 0 || mu > 1) throw std::invalid_argument("sample_leakage: gamma and mu lie in [0,1]");
    LeakageRecord rec;
    rec.gamma = gamma;
    rec.mu = mu;
    // The small offset keeps floor(gamma n) exact when gamma n is an integer
    // that floating point lands just below.
    const auto count = static_cast<std::size_t>(std::floor(gamma * static_cast<double>(n) + 1e-9));
    const IndexSet leaked = IndexSet::all(n).random_subset(std::min(count, n), rng);
    std::vector<uint32_t> good, bad;
    for (auto i : leaked.members()) {
        const double p_good = I.contains(i) ? 0.5 * (1.0 + mu) : 0.5 * (1.0 - mu);
        (rng.bernoulli(p_good) ? good : bad).push_back(i);
    }
    rec.I_G = IndexSet(n, std::move(good));
    rec.I_B = IndexSet(n, std::move(bad));
    return rec;
}

IndexSet BobKnowledge::known_set() const {
    std::vector<uint32_t> idx;
    for (std::size_t i = 0; i < rounds.size(); ++i)
        if (rounds[i].known) idx.push_back(static_cast<uint32_t>(i));
    return IndexSet(rounds.size(), std::move(idx));
}

double BobKnowledge::guess_probability() const {
    std::size_t unknown = 0;
    for (const auto& r : rounds) unknown += !r.known;
    return std::exp2(-static_cast<double>(unknown));
}

BobKnowledge bounded_bob_view(const BitString& x, const BitString& theta, const BoundedBobStrategy& strategy,
                              const BitString& theta_reveal, Rng& rng) {
    const std::size_t n = x.size();
    if (theta.size() != n || theta_reveal.size() != n) throw std::invalid_argument("bounded_bob_view: length mismatch");
    BobKnowledge k;
    k.rounds.resize(n);
    uint64_t D = strategy.D;
    if (D > n) {
        D = n;
        k.clamped = true;
    }
    std::vector<uint32_t> stored;
    switch (strategy.selection) {
        case BoundedBobStrategy::Selection::First:
            for (uint32_t i = 0; i < D; ++i) stored.push_back(i);
            break;
        case BoundedBobStrategy::Selection::Random:
            stored = IndexSet::all(n).random_subset(D, rng).members();
            break;
        case BoundedBobStrategy::Selection::Adaptive:
            if (!strategy.adaptive) throw std::invalid_argument("adaptive selection without a hook");
            stored = strategy.adaptive(n, D, rng);
            stored = IndexSet(n, stored).members();
            if (stored.size() > D) throw std::invalid_argument("adaptive selection stored more than D rounds");
            break;
    }
    for (auto i : stored) {
        auto& r = k.rounds[i];
        r.stored = true;
        r.basis_matched = true;
        r.known = true;
        r.bit = x.get(i);
    }
    k.stored = stored.size();
    for (std::size_t i = 0; i < n; ++i) {
        auto& r = k.rounds[i];
        if (r.stored) continue;
        const bool basis =
            strategy.immediate == BoundedBobStrategy::ImmediateBasis::Random ? rng.bit() != 0 : strategy.fixed_basis;
        r.basis_matched = basis == theta_reveal.get(i);
        if (basis == theta.get(i)) {
            r.known = true;
            r.bit = x.get(i);
        } else {
            r.bit = rng.bit() != 0;
        }
    }
    return k;
}

std::vector<bounds::JointEntry> restricted_bob_joint(std::size_t n, uint64_t D) {
    if (n > 8) throw ScaleExceeded("restricted_bob_joint: n must be at most 8");
    D = std::min<uint64_t>(D, n);
    // Per measured round the record is (basis matched, outcome): matched
    // with probability 1/2 and then the outcome equals x, otherwise the
    // outcome is a fair coin. Basis values themselves carry no information
    // about x once the match flag is known. Stored rounds reveal x.
    std::vector<bounds::JointEntry> out;
    const uint64_t nx = 1ULL << n;
    const std::size_t free = n - static_cast<std::size_t>(D);
    uint64_t pow3 = 1;
    for (std::size_t i = 0; i < free; ++i) pow3 *= 3;
    for (uint64_t x = 0; x < nx; ++x) {
        // Each measured round takes one of three states: 0 = matched,
        // 1 = mismatched with outcome 0, 2 = mismatched with outcome 1.
        for (uint64_t s = 0; s < pow3; ++s) {
            uint64_t code = 0, t = s;
            double p = 1.0 / static_cast<double>(nx);
            for (std::size_t i = 0; i < n; ++i) {
                const uint64_t xi = (x >> i) & 1u;
                uint64_t sym;
                if (i < D) {
                    sym = xi;  // stored: the bit itself
                } else {
                    const uint64_t st = t % 3;
                    t /= 3;
                    if (st == 0) {
                        p *= 0.5;
                        sym = 2 + xi;  // matched, outcome x
                    } else {
                        p *= 0.25;
                        sym = 4 + (st - 1);  // mismatched, fair outcome
                    }
                }
                code = code * 8 + sym;
            }
            out.push_back({x, code, p});
        }
    }
    return out;
}

namespace {

uint64_t to_int(const BitString& b) {
    uint64_t v = 0;
    for (std::size_t i = 0; i < b.size(); ++i) v |= static_cast<uint64_t>(b.get(i)) << i;
    return v;
}

BitString from_int(uint64_t v, std::size_t n) {
    BitString b(n);
    for (std::size_t i = 0; i < n; ++i) b.set(i, (v >> i) & 1u);
    return b;
}

struct Tables {
    std::vector<uint64_t> syn;               // syn[x]
    std::vector<std::vector<uint32_t>> ext;  // ext[r][x]
};

Tables tabulate(const gf2::LinearCode& code, std::size_t l) {
    const std::size_t n = code.n;
    if (n + (n + l - 1) > 22) throw ScaleExceeded("exact secrecy enumeration is limited to n + (n + l - 1) <= 22");
    const uint64_t nx = 1ULL << n, nr = 1ULL << (n + l - 1);
    Tables t;
    t.syn.resize(nx);
    std::vector<BitString> xs(nx);
    for (uint64_t x = 0; x < nx; ++x) {
        xs[x] = from_int(x, n);
        t.syn[x] = to_int(gf2::syndrome(code, xs[x]));
    }
    t.ext.assign(nr, std::vector<uint32_t>(nx));
    for (uint64_t r = 0; r < nr; ++r) {
        gf2::ToeplitzSeed seed{n, l, from_int(r, n + l - 1)};
        for (uint64_t x = 0; x < nx; ++x) t.ext[r][x] = static_cast<uint32_t>(to_int(gf2::toeplitz_extract(xs[x], seed)));
    }
    return t;
}

// Distance from uniform and guessing probability of C given (x & M, w)
// for one mask and one seed, with X uniform.
void accumulate(const Tables& t, std::size_t n, std::size_t nk, std::size_t l, uint64_t M, uint64_t r, double weight,
                std::vector<double>& scratch, std::vector<uint64_t>& touched, ExactSecrecy& acc) {
    const uint64_t nx = 1ULL << n, L = 1ULL << l;
    const double px = 1.0 / static_cast<double>(nx);
    touched.clear();
    for (uint64_t x = 0; x < nx; ++x) {
        const uint64_t key = ((x & M) << nk) | t.syn[x];
        double* cell = &scratch[key * L];
        bool fresh = true;
        for (uint64_t c = 0; c < L; ++c) fresh = fresh && cell[c] == 0;
        if (fresh) touched.push_back(key);
        cell[t.ext[r][x]] += px;
    }
    for (auto key : touched) {
        double* cell = &scratch[key * L];
        double total = 0, best = 0;
        for (uint64_t c = 0; c < L; ++c) {
            total += cell[c];
            best = std::max(best, cell[c]);
        }
        double td = 0;
        for (uint64_t c = 0; c < L; ++c) td += std::fabs(cell[c] - total / static_cast<double>(L));
        acc.trace_distance += weight * 0.5 * td;
        acc.p_guess += weight * best;
        std::fill(cell, cell + L, 0.0);
    }
}

}  // namespace

namespace {

// Incremental GF(2) row basis over at most 64 columns, one pivot per row.
struct XorBasis {
    std::array<uint64_t, 64> row{};  // row[b] has its highest set bit at b, or is 0
    std::size_t rank = 0;

    bool insert(uint64_t v) {
        while (v) {
            const int b = 63 - std::countl_zero(v);
            if (!row[b]) {
                row[b] = v;
                ++rank;
                return true;
            }
            v ^= row[b];
        }
        return false;
    }
};

}  // namespace

ExactSecrecy bc_hiding_exact(const gf2::LinearCode& code, std::size_t l) {
    const std::size_t n = code.n;
    if (n > 14 || l == 0 || n + l - 1 > 26) throw ScaleExceeded("rank-counting hiding limited to n <= 14, n + l - 1 <= 26");
    const uint64_t nx = 1ULL << n, nr = 1ULL << (n + l - 1);
    XorBasis h;
    for (std::size_t i = 0; i < code.parity_check.rows(); ++i) h.insert(to_int(code.parity_check.row(i)));
    std::vector<uint64_t> unit(n);
    for (std::size_t i = 0; i < n; ++i) {
        BitString e(n);
        e.set(i, true);
        unit[i] = to_int(e);
    }
    // Rows of T for every seed, in the same integer encoding as x.
    std::vector<uint64_t> trows(nr * l);
    for (uint64_t r = 0; r < nr; ++r) {
        const gf2::ToeplitzSeed seed{n, l, from_int(r, n + l - 1)};
        for (std::size_t i = 0; i < l; ++i) {
            BitString row(n);
            for (std::size_t j = 0; j < n; ++j) row.set(j, seed.entry(i, j));
            trows[r * l + i] = to_int(row);
        }
    }

    ExactSecrecy acc;
    long double keys = 0;  // sum over M of 2^rank(A_M)
    const double w = 1.0 / static_cast<double>(nx * nr);
    for (uint64_t M = 0; M < nx; ++M) {
        XorBasis a = h;
        for (std::size_t i = 0; i < n; ++i)
            if (M & unit[i]) a.insert(unit[i]);
        keys += std::ldexp(1.0L, static_cast<int>(a.rank));
        for (uint64_t r = 0; r < nr; ++r) {
            XorBasis b = a;
            std::size_t rho = 0;
            for (std::size_t i = 0; i < l; ++i) rho += b.insert(trows[r * l + i]);
            acc.trace_distance += w * (1.0 - std::ldexp(1.0, static_cast<int>(rho) - static_cast<int>(l)));
            acc.p_guess += w * std::ldexp(1.0, -static_cast<int>(rho));
        }
    }
    acc.h_min = static_cast<double>(n) - std::log2(static_cast<double>(keys / static_cast<long double>(nx)));
    return acc;
}

ExactSecrecy bc_hiding_enumerated(const gf2::LinearCode& code, std::size_t l) {
    const std::size_t n = code.n, nk = n - code.k;
    const Tables t = tabulate(code, l);
    const uint64_t nx = 1ULL << n, nr = 1ULL << (n + l - 1), L = 1ULL << l;
    std::vector<double> scratch((1ULL << (n + nk)) * L, 0.0);
    std::vector<uint64_t> touched;
    ExactSecrecy acc;
    const double w = 1.0 / static_cast<double>(nx * nr);
    for (uint64_t M = 0; M < nx; ++M)
        for (uint64_t r = 0; r < nr; ++r) accumulate(t, n, nk, l, M, r, w, scratch, touched, acc);
    acc.h_min = bc_hiding_hmin_oracle(code);
    return acc;
}

double bc_hiding_hmin_oracle(const gf2::LinearCode& code) {
    const std::size_t n = code.n, nk = n - code.k;
    if (n > 11) throw ScaleExceeded("explicit hiding joint limited to n <= 11");
    const uint64_t nx = 1ULL << n;
    std::vector<uint64_t> syn(nx);
    for (uint64_t x = 0; x < nx; ++x) syn[x] = to_int(gf2::syndrome(code, from_int(x, n)));
    std::vector<bounds::JointEntry> joint;
    joint.reserve(nx * nx);
    for (uint64_t M = 0; M < nx; ++M)
        for (uint64_t x = 0; x < nx; ++x) {
            const uint64_t k = (((M << n) | (x & M)) << nk) | syn[x];
            joint.push_back({x, k, 1.0 / static_cast<double>(nx * nx)});
        }
    return bounds::cond_min_entropy_oracle(joint);
}

ExactSecrecy extract_secrecy_exact(const gf2::LinearCode& code, std::size_t l, const IndexSet& known) {
    const std::size_t n = code.n, nk = n - code.k;
    if (known.ambient() != n) throw std::invalid_argument("extract_secrecy_exact: known set over the wrong range");
    const Tables t = tabulate(code, l);
    const uint64_t nx = 1ULL << n, nr = 1ULL << (n + l - 1), L = 1ULL << l;
    const uint64_t M = to_int(known.mask());
    std::vector<double> scratch((1ULL << (n + nk)) * L, 0.0);
    std::vector<uint64_t> touched;
    ExactSecrecy acc;
    for (uint64_t r = 0; r < nr; ++r) accumulate(t, n, nk, l, M, r, 1.0 / static_cast<double>(nr), scratch, touched, acc);

    std::vector<bounds::JointEntry> joint;
    for (uint64_t x = 0; x < nx; ++x) joint.push_back({x, ((x & M) << nk) | t.syn[x], 1.0 / static_cast<double>(nx)});
    acc.h_min = bounds::cond_min_entropy_oracle(joint);
    return acc;
}

GuessResult alice_guess(const IndexSet& I0, const IndexSet& I1, const LeakageRecord& leak, Rng& rng) {
    if (I0.ambient() != I1.ambient() || leak.I_G.ambient() != I0.ambient() || leak.I_B.ambient() != I0.ambient())
        throw std::invalid_argument("alice_guess: sets over different ranges");
    if (!leak.I_G.intersect(leak.I_B).empty()) throw std::invalid_argument("alice_guess: I_G and I_B overlap");
    const IndexSet L = leak.leaked();
    const IndexSet A[2] = {I0.minus(I1).intersect(L), I1.minus(I0).intersect(L)};
    GuessResult g;
    g.kappa = std::min(A[0].size(), A[1].size());
    g.omega = g.kappa >= 1;
    if (!g.omega) {
        g.b = rng.bit() != 0;
        return g;
    }
    g.r = rng.bit() != 0;
    const IndexSet& Ar = A[g.r ? 1 : 0];
    const uint32_t i = Ar[static_cast<std::size_t>(rng.below(Ar.size()))];
    g.i_r_in_good = leak.I_G.contains(i);
    g.b = g.i_r_in_good ? g.r : !g.r;
    return g;
}

Interval wilson(uint64_t successes, uint64_t trials, double z) {
    if (trials == 0) return {0.0, 1.0};
    const double n = static_cast<double>(trials);
    const double p = static_cast<double>(successes) / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double centre = (p + z2 / (2.0 * n)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
    return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

AttackStats estimate_attack_advantage(const ot::OtConfig& cfg, const bounds::RoundPlan& plan,
                                      const AttackConfig& attack, uint64_t trials, uint64_t seed, unsigned threads,
                                      std::vector<AttackTrial>* rows) {
    if (trials == 0) throw std::invalid_argument("estimate_attack_advantage: trials must be positive");
    std::vector<AttackTrial> out(trials);
    parallel_for(trials, threads, [&](uint64_t t) {
        const uint64_t s = derive_seed(seed, "attack", t);
        const auto run = ot::ot_run(cfg, plan, s);
        Rng base(s);
        Rng leak_rng = base.fork("leakage");
        Rng guess_rng = base.fork("guess");
        const auto leak = sample_leakage(run.I, run.n, attack.gamma, attack.mu, leak_rng);
        const auto g = alice_guess(run.sets.I0, run.sets.I1, leak, guess_rng);
        AttackTrial row;
        row.trial = t;
        row.c = run.sets.c;
        row.b = g.b;
        row.kappa = g.kappa;
        row.omega = g.omega;
        row.aborted = run.result.aborted;
        const IndexSet& other = run.sets.c ? run.sets.I0 : run.sets.I1;
        const IndexSet& mine = run.sets.c ? run.sets.I1 : run.sets.I0;
        const IndexSet S = other.minus(mine).intersect(leak.leaked());
        row.alpha = S.empty() ? std::numeric_limits<double>::quiet_NaN()
                              : static_cast<double>(S.minus(run.I).size()) / static_cast<double>(S.size());
        out[t] = row;
    });

    AttackStats st;
    st.trials = trials;
    double alpha_sum = 0;
    for (const auto& r : out) {
        const bool ok = r.b == r.c;
        st.correct += ok;
        st.aborted += r.aborted;
        if (r.omega) {
            ++st.omega;
            st.correct_given_omega += ok;
            if (!std::isnan(r.alpha)) st.min_alpha_on_omega = std::min(st.min_alpha_on_omega, r.alpha);
        }
        if (!std::isnan(r.alpha)) {
            alpha_sum += r.alpha;
            ++st.alpha_count;
        }
    }
    st.p_guess_hat = static_cast<double>(st.correct) / static_cast<double>(trials);
    st.p_guess_ci = wilson(st.correct, trials);
    st.p_omega_hat = static_cast<double>(st.omega) / static_cast<double>(trials);
    st.p_omega_ci = wilson(st.omega, trials);
    st.alpha_hat = st.alpha_count ? alpha_sum / static_cast<double>(st.alpha_count) : 0.0;
    st.conditional_guess_hat =
        st.omega ? static_cast<double>(st.correct_given_omega) / static_cast<double>(st.omega) : 0.0;
    st.conditional_ci = wilson(st.correct_given_omega, st.omega);
    if (rows) *rows = std::move(out);
    return st;
}

}  // namespace mdiotbc::adversary
