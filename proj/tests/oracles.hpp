#ifndef BJL_TESTS_ORACLES_HPP
#define BJL_TESTS_ORACLES_HPP

// Independent oracles used by the test suites: closed forms for the circle
// billiard and finite-difference derivatives of the numerical map. These are
// deliberately implemented without the jet machinery they are checking.

#include <cmath>
#include <functional>
#include <vector>

#include "bjl/billiard.hpp"
#include "bjl/domain.hpp"

namespace oracles {

// Circle of unit perimeter: f(s, phi) = (s + phi/pi mod 1, phi).
inline bjl::PhasePoint circle_next_hit(const bjl::PhasePoint& p) {
    return {bjl::wrap_unit(p.s + p.phi / M_PI), p.phi};
}

inline double circle_chord(double s0, double s1) {
    double r = 1.0 / (2.0 * M_PI);
    double dpsi = 2.0 * M_PI * (s1 - s0);
    return 2.0 * r * std::abs(std::sin(0.5 * dpsi));
}

using Map2 = std::function<std::array<double, 2>(double, double)>;

// a-th s-derivative and b-th phi-derivative by nested central differences.
inline double fd_partial_at(const Map2& f, double s, double phi, int a, int b, int comp,
                            double hs, double hp) {
    auto binom = [](int n, int k) {
        double r = 1;
        for (int i = 0; i < k; ++i) r = r * (n - i) / (i + 1);
        return r;
    };
    double acc = 0.0;
    for (int i = 0; i <= a; ++i)
        for (int j = 0; j <= b; ++j) {
            double sign = (((i + j) % 2) == 0) ? 1.0 : -1.0;
            double ss = s + (0.5 * a - i) * hs;
            double pp = phi + (0.5 * b - j) * hp;
            acc += sign * binom(a, i) * binom(b, j) * f(ss, pp)[comp];
        }
    return acc / (std::pow(hs, a) * std::pow(hp, b));
}

// plateau search over a geometric step sweep
inline double fd_partial(const Map2& f, double s, double phi, int a, int b, int comp) {
    if (a == 0 && b == 0) return f(s, phi)[comp];
    std::vector<double> hs;
    for (double h = 3e-2; h >= 3e-5; h /= 2.0) hs.push_back(h);
    std::vector<double> est(hs.size());
    for (std::size_t k = 0; k < hs.size(); ++k)
        est[k] = fd_partial_at(f, s, phi, a, b, comp, hs[k], hs[k]);
    double best = est[0];
    double best_gap = 1e300;
    for (std::size_t k = 0; k + 1 < hs.size(); ++k) {
        double gap = std::abs(est[k] - est[k + 1]);
        if (gap < best_gap) {
            best_gap = gap;
            best = 0.5 * (est[k] + est[k + 1]);
        }
    }
    return best;
}

}  // namespace oracles

#endif
