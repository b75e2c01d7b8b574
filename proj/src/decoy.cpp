#include "mdiotbc/decoy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "mdiotbc/bounds.hpp"
#include "mdiotbc/common.hpp"

namespace mdiotbc::decoy {

void ChernoffEps::validate() const {
    for (double e : {epsilon, eps_var, eps_hat, eps1})
        if (!(e > 0 && e < 1)) throw std::invalid_argument("Chernoff epsilons must lie in (0,1)");
}

DecoyObservation::DecoyObservation(std::vector<std::string> intensity_labels)
    : labels(std::move(intensity_labels)), counts(4 * labels.size(), 0) {}

std::vector<uint64_t> DecoyObservation::cell(int o, int theta) const {
    std::vector<uint64_t> x(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) x[i] = at(o, theta, i);
    return x;
}

uint64_t DecoyObservation::total() const {
    uint64_t s = 0;
    for (auto c : counts) s += c;
    return s;
}

std::string DecoyObservation::to_csv() const {
    std::ostringstream os;
    os << "outcome,basis,intensity,count\n";
    for (int o = 0; o < 2; ++o)
        for (int t = 0; t < 2; ++t)
            for (std::size_t i = 0; i < labels.size(); ++i) os << o << ',' << t << ',' << labels[i] << ',' << at(o, t, i) << '\n';
    return os.str();
}

DecoyObservation tally(const channel::PartyView& view, const std::vector<std::string>& own_labels, const RoundFilter& keep) {
    DecoyObservation obs(own_labels);
    for (const auto& r : view.rounds) {
        if (!r.success) continue;
        if (keep && !keep(r)) continue;
        if (r.own_intensity >= own_labels.size()) throw std::invalid_argument("tally: intensity index out of range");
        ++obs.at(r.parity, r.basis, r.own_intensity);
    }
    return obs;
}

CondIntensityProbs intensity_given_count(const std::vector<double>& probs, const std::vector<double>& mu) {
    if (probs.size() != mu.size() || probs.empty()) throw std::invalid_argument("intensity_given_count: size mismatch");
    CondIntensityProbs c;
    double z1 = 0, z2 = 0;
    for (std::size_t i = 0; i < mu.size(); ++i) {
        const double e = std::exp(-mu[i]);
        const double p1 = mu[i] * e;
        const double p2 = 1.0 - e - mu[i] * e;
        c.given_1.push_back(probs[i] * p1);
        c.given_multi.push_back(probs[i] * p2);
        z1 += c.given_1.back();
        z2 += c.given_multi.back();
    }
    if (!(z1 > 0) || !(z2 > 0)) throw std::invalid_argument("intensity_given_count: zero normaliser");
    for (auto& v : c.given_1) v /= z1;
    for (auto& v : c.given_multi) v /= z2;
    return c;
}

CondIntensityProbs intensity_given_count(const SourceModel& src) {
    std::vector<double> p, m;
    for (const auto& lv : src.levels) {
        p.push_back(lv.prob);
        m.push_back(lv.mean);
    }
    return intensity_given_count(p, m);
}

namespace {

struct Line {
    double a, b, c;  // a S1 + b S2 = c
};

S1Bound closed_form(const std::vector<double>& lo, const std::vector<double>& hi, const std::vector<double>& p1,
                    const std::vector<double>& p2) {
    if (lo.size() != 2) throw std::invalid_argument("closed form needs exactly two decoy intensities");
    const double den = p1[0] * p2[1] - p2[0] * p1[1];
    const double scale = std::max({std::fabs(p1[0] * p2[1]), std::fabs(p2[0] * p1[1]), 1e-300});
    if (std::fabs(den) <= 1e-12 * scale) throw DegenerateIntensities("decoy intensities give a singular 2x2 system");
    // Cramer's rule for S1 on each corner of the two strips.
    double best = std::numeric_limits<double>::infinity();
    for (double y1 : {hi[0], lo[0]})
        for (double y2 : {hi[1], lo[1]}) best = std::min(best, (p2[1] * y1 - p2[0] * y2) / den);
    S1Bound r;
    r.value = best;
    if (best < 0) {
        r.value = 0;
        r.clamped = true;
    }
    return r;
}

S1Bound vertex_enum(const std::vector<double>& lo, const std::vector<double>& hi, const std::vector<double>& p1,
                    const std::vector<double>& p2) {
    std::vector<Line> lines;
    double scale = 1.0;
    for (std::size_t j = 0; j < lo.size(); ++j) {
        lines.push_back({p1[j], p2[j], hi[j]});
        lines.push_back({p1[j], p2[j], lo[j]});
        scale = std::max({scale, std::fabs(hi[j]), std::fabs(lo[j])});
    }
    lines.push_back({1, 0, 0});
    lines.push_back({0, 1, 0});
    const double tol = 1e-9 * scale;

    auto feasible = [&](double s1, double s2) {
        if (s1 < -tol || s2 < -tol) return false;
        for (std::size_t j = 0; j < lo.size(); ++j) {
            const double v = p1[j] * s1 + p2[j] * s2;
            if (v < lo[j] - tol || v > hi[j] + tol) return false;
        }
        return true;
    };

    double best = std::numeric_limits<double>::infinity();
    for (std::size_t u = 0; u < lines.size(); ++u)
        for (std::size_t v = u + 1; v < lines.size(); ++v) {
            const auto& A = lines[u];
            const auto& B = lines[v];
            const double det = A.a * B.b - A.b * B.a;
            const double sc = std::max(std::fabs(A.a * B.b), std::fabs(A.b * B.a));
            if (sc == 0 || std::fabs(det) <= 1e-14 * sc) continue;
            const double s1 = (A.c * B.b - A.b * B.c) / det;
            const double s2 = (A.a * B.c - A.c * B.a) / det;
            if (feasible(s1, s2)) best = std::min(best, s1);
        }
    S1Bound r;
    if (!std::isfinite(best)) {
        r.empty_region = true;
        return r;
    }
    r.value = std::max(0.0, best);
    return r;
}

}  // namespace

S1Bound s1_lower_bound_strips(const std::vector<double>& lower, const std::vector<double>& upper,
                              const std::vector<double>& p1, const std::vector<double>& p2, Method method) {
    if (lower.size() != upper.size() || lower.size() != p1.size() || lower.size() != p2.size())
        throw std::invalid_argument("s1_lower_bound: inconsistent constraint sizes");
    if (lower.size() < 2) throw std::invalid_argument("s1_lower_bound: at least two decoy intensities required");
    return method == Method::ClosedFormQ2 ? closed_form(lower, upper, p1, p2) : vertex_enum(lower, upper, p1, p2);
}

S1Bound s1_lower_bound(const std::vector<uint64_t>& x, const CondIntensityProbs& cond, const ChernoffEps& eps,
                       Method method) {
    if (x.size() != cond.given_1.size()) throw std::invalid_argument("s1_lower_bound: count/probability size mismatch");
    std::vector<double> lo, hi, p1, p2;
    for (std::size_t i = 1; i < x.size(); ++i) {
        const double xi = static_cast<double>(x[i]);
        const auto d = bounds::chernoff_fluctuations(xi, eps.eps_var, eps.eps_hat);
        hi.push_back(xi + d.delta);
        lo.push_back(xi - d.delta_hat);
        p1.push_back(cond.given_1[i]);
        p2.push_back(cond.given_multi[i]);
    }
    return s1_lower_bound_strips(lo, hi, p1, p2, method);
}

L1Result single_photon_lower_bound(const DecoyObservation& obs, const CondIntensityProbs& cond, const ChernoffEps& eps,
                                   Method method) {
    eps.validate();
    L1Result res;
    const double ps1 = cond.given_1.at(0);
    for (int o = 0; o < 2; ++o)
        for (int t = 0; t < 2; ++t) {
            const auto x = obs.cell(o, t);
            double sum = 0;
            for (auto v : x) sum += static_cast<double>(v);
            const int c = o * 2 + t;
            if (sum == 0) continue;  // nothing observed, nothing to bound
            for (std::size_t i = 1; i < x.size(); ++i)
                bounds::require_chernoff_validity(static_cast<double>(x[i]), sum, eps.epsilon, eps.eps_var, eps.eps_hat,
                                                  "cell (o=" + std::to_string(o) + ", theta=" + std::to_string(t) +
                                                      ", intensity=" + obs.labels[i] + ")");
            res.cell_bounds[c] = s1_lower_bound(x, cond, eps, method);
            const double s = ps1 * res.cell_bounds[c].value;
            res.per_cell[c] = std::max(0.0, s - bounds::g_chernoff(s, eps.eps1));
            res.L1 += res.per_cell[c];
        }
    return res;
}

AbortDecision multiphoton_abort_check(double L1, uint64_t n_signal_success, double f, double gamma, double alpha4) {
    AbortDecision d;
    if (n_signal_success == 0) {
        d.abort = true;
        d.diagnostic = "no successful signal rounds";
        return d;
    }
    if (!(f > 0)) throw std::invalid_argument("multiphoton_abort_check: retained fraction must be positive");
    const double n = static_cast<double>(n_signal_success);
    const double U2 = n - L1;
    d.ratio = U2 / (f * n);
    d.abort = d.ratio >= gamma + alpha4;
    if (d.abort) d.diagnostic = "multiphoton upper bound ratio reached gamma + alpha4";
    return d;
}

}  // namespace mdiotbc::decoy
