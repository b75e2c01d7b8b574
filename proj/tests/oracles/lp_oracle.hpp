#pragma once
// Grid-search reference for min S1 over
//   lower_j <= p1_j S1 + p2_j S2 <= upper_j,  S1, S2 >= 0.
// For fixed S2 the feasible S1 values form an interval, so the problem
// reduces to a one-dimensional search over S2. The lower end of that
// interval is convex in S2; a dense grid locates the feasible S2 range and
// a ternary search refines the minimum.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

namespace oracle {

struct Strips {
    std::vector<double> lo, hi, p1, p2;
};

// Smallest feasible S1 for this S2, or nullopt.
inline std::optional<double> min_s1_at(const Strips& s, double s2) {
    double a = 0.0, b = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < s.lo.size(); ++j) {
        a = std::max(a, (s.lo[j] - s.p2[j] * s2) / s.p1[j]);
        b = std::min(b, (s.hi[j] - s.p2[j] * s2) / s.p1[j]);
    }
    if (a > b + 1e-12 * std::max(1.0, std::fabs(b))) return std::nullopt;
    return a;
}

inline std::optional<double> grid_min_s1(const Strips& s, int grid = 20000) {
    double s2max = 0;
    for (std::size_t j = 0; j < s.lo.size(); ++j) s2max = std::max(s2max, s.hi[j] / s.p2[j]);
    double best = std::numeric_limits<double>::infinity();
    double best_s2 = -1;
    for (int g = 0; g <= grid; ++g) {
        const double s2 = s2max * g / grid;
        if (auto v = min_s1_at(s, s2); v && *v < best) {
            best = *v;
            best_s2 = s2;
        }
    }
    if (best_s2 < 0) return std::nullopt;
    // The feasible S2 values form an interval (b - a is concave). Locate its
    // ends by bisection from the feasible grid point, then ternary-search the
    // convex lower envelope inside it.
    auto feasible = [&](double s2) { return min_s1_at(s, s2).has_value(); };
    double l_in = best_s2, l_out = 0.0;
    if (feasible(0.0)) l_in = 0.0;
    else
        for (int it = 0; it < 200; ++it) {
            const double m = 0.5 * (l_in + l_out);
            if (feasible(m)) l_in = m; else l_out = m;
        }
    double r_in = best_s2, r_out = s2max;
    if (feasible(s2max)) r_in = s2max;
    else
        for (int it = 0; it < 200; ++it) {
            const double m = 0.5 * (r_in + r_out);
            if (feasible(m)) r_in = m; else r_out = m;
        }
    double lo = l_in, hi = r_in;
    auto val = [&](double s2) { return *min_s1_at(s, s2); };
    for (int it = 0; it < 300; ++it) {
        const double m1 = lo + (hi - lo) / 3, m2 = hi - (hi - lo) / 3;
        if (val(m1) <= val(m2)) hi = m2; else lo = m1;
    }
    return std::min({best, val(0.5 * (lo + hi)), val(l_in), val(r_in)});
}

}  // namespace oracle
