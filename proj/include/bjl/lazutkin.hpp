#ifndef BJL_LAZUTKIN_HPP
#define BJL_LAZUTKIN_HPP

#include <array>
#include <vector>

#include "bjl/billiard.hpp"
#include "bjl/domain.hpp"

namespace bjl {

// Near-boundary coordinates x = int kappa^(2/3) ds (normalized to [0,1)) and
// y = psi(4 rho^(1/3) sin(phi/2) / C) with C = int kappa^(2/3) ds and
// psi(u) = (2/pi) asin(pi u / 2). The reparameterization psi makes the circle
// map exactly integrable, (x, y) -> (x + y, y), and changes nothing at the
// y^3 order where the generic residuals live.
class LazutkinChart {
  public:
    explicit LazutkinChart(const Domain& domain);

    double x_of_s(double s) const;
    double y_of_phi(double s, double phi) const;
    double phi_of_y(double s, double y) const;
    double normalization() const { return C_; }

    // residuals of one billiard step against the integrable shear:
    // r1 = x' - x - y (mod 1), r2 = y' - y
    std::array<double, 2> step_residuals(const Domain& domain, double s, double y) const;

  private:
    const Domain* domain_;
    double C_;
};

struct LazutkinReport {
    double x_residual_exponent = 0;  // fitted slope of log max|r1| vs log y
    double y_residual_exponent = 0;  // same for r2
    double exponent_gap = 0;         // y exponent minus x exponent
    double max_r1 = 0, max_r2 = 0;   // largest residuals seen (top of the y range)
    std::vector<std::array<double, 3>> samples;  // (y, max|r1|, max|r2|)
};

LazutkinReport lazutkin_check(const Domain& domain, double y_min = 1e-3, double y_max = 1e-1,
                              int n_y = 14, int n_x = 8);

}  // namespace bjl

#endif
