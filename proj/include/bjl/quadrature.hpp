#ifndef BJL_QUADRATURE_HPP
#define BJL_QUADRATURE_HPP

#include <cmath>
#include <functional>
#include <vector>

namespace bjl {

// 32-point Gauss-Legendre nodes/weights on [-1, 1], computed once by Newton
// iteration on the Legendre recurrence.
struct GaussRule {
    std::vector<double> x, w;

    static const GaussRule& get() {
        static GaussRule rule = make(32);
        return rule;
    }

    static GaussRule make(int n) {
        GaussRule r;
        r.x.resize(n);
        r.w.resize(n);
        for (int i = 0; i < n; ++i) {
            double t = std::cos(M_PI * (i + 0.75) / (n + 0.5));
            for (int it = 0; it < 100; ++it) {
                double p0 = 1.0, p1 = t;
                for (int k = 2; k <= n; ++k) {
                    double p2 = ((2 * k - 1) * t * p1 - (k - 1) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                double dp = n * (t * p1 - p0) / (t * t - 1.0);
                double dt = p1 / dp;
                t -= dt;
                if (std::abs(dt) < 1e-16) break;
            }
            double p0 = 1.0, p1 = t;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2 * k - 1) * t * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            double dp = n * (t * p1 - p0) / (t * t - 1.0);
            r.x[i] = t;
            r.w[i] = 2.0 / ((1.0 - t * t) * dp * dp);
        }
        return r;
    }
};

// Composite Gauss on [a, b]; panel count doubles until the change is below
// tol (absolute + relative). Integrand assumed smooth.
inline double integrate(const std::function<double(double)>& f, double a, double b,
                        double tol = 1e-13, int start_panels = 4, int max_panels = 512) {
    if (a == b) return 0.0;
    const GaussRule& g = GaussRule::get();
    auto compute = [&](int panels) {
        double total = 0.0;
        double h = (b - a) / panels;
        for (int p = 0; p < panels; ++p) {
            double lo = a + p * h, mid = lo + 0.5 * h, half = 0.5 * h;
            double acc = 0.0;
            for (std::size_t i = 0; i < g.x.size(); ++i) acc += g.w[i] * f(mid + half * g.x[i]);
            total += acc * half;
        }
        return total;
    };
    double prev = compute(start_panels);
    for (int panels = start_panels * 2; panels <= max_panels; panels *= 2) {
        double cur = compute(panels);
        if (std::abs(cur - prev) <= tol * (1.0 + std::abs(cur))) return cur;
        prev = cur;
    }
    return prev;
}

}  // namespace bjl

#endif
