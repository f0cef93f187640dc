#include "bjl/lazutkin.hpp"

#include <cmath>

#include "bjl/quadrature.hpp"

namespace bjl {

namespace {
// psi(u) = (2/pi) asin(pi u / 2): identity + O(u^3), exact on the circle
double psi(double u) { return (2.0 / M_PI) * std::asin(0.5 * M_PI * u); }
double psi_inv(double v) { return (2.0 / M_PI) * std::sin(0.5 * M_PI * v); }
}  // namespace

LazutkinChart::LazutkinChart(const Domain& domain) : domain_(&domain) {
    // int kappa^(2/3) ds = int rho^(1/3) dtheta
    C_ = integrate([&](double t) { return std::cbrt(domain.rho(t)); }, 0.0, 2.0 * M_PI);
}

double LazutkinChart::x_of_s(double s) const {
    double theta = domain_->theta_of_s(s);
    double v = integrate([&](double t) { return std::cbrt(domain_->rho(t)); }, 0.0, theta);
    return v / C_;
}

double LazutkinChart::y_of_phi(double s, double phi) const {
    double theta = domain_->theta_of_s(s);
    double rho = domain_->rho(theta);
    double u = 4.0 * std::cbrt(rho) * std::sin(0.5 * phi) / C_;
    return psi(u);
}

double LazutkinChart::phi_of_y(double s, double y) const {
    double theta = domain_->theta_of_s(s);
    double rho = domain_->rho(theta);
    double u = psi_inv(y);
    double arg = u * C_ / (4.0 * std::cbrt(rho));
    return 2.0 * std::asin(arg);
}

std::array<double, 2> LazutkinChart::step_residuals(const Domain& domain, double s,
                                                    double y) const {
    double phi = phi_of_y(s, y);
    PhasePoint p{s, phi};
    PhasePoint q = next_hit(domain, p);
    double x0 = x_of_s(s), x1 = x_of_s(q.s);
    double y1 = y_of_phi(q.s, q.phi);
    double dx = x1 - x0;
    if (dx < 0) dx += 1.0;
    double r1 = dx - y;
    double r2 = y1 - y;
    return {r1, r2};
}

LazutkinReport lazutkin_check(const Domain& domain, double y_min, double y_max, int n_y,
                              int n_x) {
    LazutkinChart chart(domain);
    LazutkinReport rep;
    std::vector<double> logy, logr1, logr2;
    for (int i = 0; i < n_y; ++i) {
        double y = y_min * std::pow(y_max / y_min, static_cast<double>(i) / (n_y - 1));
        double m1 = 0, m2 = 0;
        for (int j = 0; j < n_x; ++j) {
            double s = (j + 0.31) / n_x;
            auto r = chart.step_residuals(domain, s, y);
            m1 = std::max(m1, std::abs(r[0]));
            m2 = std::max(m2, std::abs(r[1]));
        }
        rep.samples.push_back({y, m1, m2});
        rep.max_r1 = std::max(rep.max_r1, m1);
        rep.max_r2 = std::max(rep.max_r2, m2);
        if (m1 > 1e-15 && m2 > 1e-15) {
            logy.push_back(std::log(y));
            logr1.push_back(std::log(m1));
            logr2.push_back(std::log(m2));
        }
    }
    if (logy.size() >= 4) {
        // least-squares slope
        double n = static_cast<double>(logy.size());
        double sx = 0, sx2 = 0, s1 = 0, s2 = 0, sx1 = 0, sx2y = 0;
        for (std::size_t i = 0; i < logy.size(); ++i) {
            sx += logy[i];
            sx2 += logy[i] * logy[i];
            s1 += logr1[i];
            s2 += logr2[i];
            sx1 += logy[i] * logr1[i];
            sx2y += logy[i] * logr2[i];
        }
        double den = n * sx2 - sx * sx;
        rep.x_residual_exponent = (n * sx1 - sx * s1) / den;
        rep.y_residual_exponent = (n * sx2y - sx * s2) / den;
        rep.exponent_gap = rep.y_residual_exponent - rep.x_residual_exponent;
    }
    return rep;
}

}  // namespace bjl
