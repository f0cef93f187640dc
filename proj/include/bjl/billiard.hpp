#ifndef BJL_BILLIARD_HPP
#define BJL_BILLIARD_HPP

#include <string>
#include <vector>

#include "bjl/domain.hpp"
#include "bjl/jets.hpp"

namespace bjl {

struct ChordData {
    double l = 0;         // chord length
    double beta_in = 0;   // sin(phi) at departure
    double beta_out = 0;  // sin(phi) at arrival
    double kappa_in = 0;
    double kappa_out = 0;
};

class BilliardError : public std::runtime_error {
  public:
    enum class Code { grazing, no_convergence, coincident_points, order_too_large };
    BilliardError(Code code, const std::string& msg) : std::runtime_error(msg), code_(code) {}
    Code code() const { return code_; }

  private:
    Code code_;
};

constexpr double kGrazingPhiMin = 1e-6;
constexpr int kMaxMapJetOrder = 8;

// One billiard step. The outgoing ray leaves gamma(s) at angle phi from the
// positively oriented tangent; the return value is the next impact with its
// arrival angle. Root finding is a 64-sample bracketing scan plus a
// bisection/secant hybrid on the chord-direction residual.
PhasePoint next_hit(const Domain& domain, const PhasePoint& p,
                    double phi_min = kGrazingPhiMin);

// Time reversal: conjugate next_hit by (s, phi) -> (s, pi - phi).
PhasePoint billiard_inverse(const Domain& domain, const PhasePoint& p,
                            double phi_min = kGrazingPhiMin);

PhasePoint iterate(const Domain& domain, PhasePoint p, int steps,
                   double phi_min = kGrazingPhiMin);

ChordData chord_data(const Domain& domain, const PhasePoint& p);

// Closed-form one-step differential:
//   ds1/ds0   = (k0 l - b0)/b1        ds1/dphi0   = l/b1
//   dphi1/ds0 = (k0 k1 l - k0 b1 - k1 b0)/b1
//   dphi1/dphi0 = (k1 l - b1)/b1
Mat2 one_step_differential(const Domain& domain, const PhasePoint& p);

// Truncated Taylor expansion of one step around p, solved implicitly in jet
// space; order-1 block agrees with one_step_differential.
JetMap2 map_jet(const Domain& domain, const PhasePoint& p, int order);

JetMap2 iterate_jet(const Domain& domain, const PhasePoint& p, int steps, int order);

struct GeneratingLength {
    double L = 0, dL_ds0 = 0, dL_ds1 = 0;
};
GeneratingLength generating_length(const Domain& domain, double s0, double s1);

// Bivariate jet of the chord length L(s0, s1) around (s0, s1).
Jet2 generating_length_jet(const Domain& domain, double s0, double s1, int order);

std::string orbit_csv(const Domain& domain, const std::vector<PhasePoint>& points);

}  // namespace bjl

#endif
