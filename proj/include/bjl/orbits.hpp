#ifndef BJL_ORBITS_HPP
#define BJL_ORBITS_HPP

#include <optional>
#include <string>
#include <vector>

#include "bjl/billiard.hpp"
#include "bjl/domain.hpp"
#include "bjl/jets.hpp"

namespace bjl {

enum class OrbitClass { hyperbolic, elliptic, parabolic };

struct EigenData {
    OrbitClass cls = OrbitClass::parabolic;
    double trace = 0, det = 1;
    double lambda = 0;          // eigenvalue with |lambda| > 1 (hyperbolic)
    double rotation_angle = 0;  // elliptic case, cos(angle) = trace/2
    double omega1 = 0, omega2 = 0;  // eigenvector angles with the s-axis
    double min_vertical_angle = 0;  // smaller angle either eigenvector makes with vertical
};

struct PeriodicOrbit {
    std::vector<PhasePoint> points;  // impacts, length q
    int q = 0;
    int p = 0;  // rotation number p/q
    double residual = 0;  // max reflection-law violation |cos phi_in - cos phi_out|
    std::optional<JetMap2> monodromy_jet;
    std::optional<EigenData> eigen;
};

class OrbitError : public std::runtime_error {
  public:
    enum class Code { bad_rotation, stagnation, degenerate, singular_jacobian, residual_too_large };
    OrbitError(Code code, const std::string& msg) : std::runtime_error(msg), code_(code) {}
    Code code() const { return code_; }

  private:
    Code code_;
};

// Critical points of the total chord length over cyclically ordered
// configurations of rotation number p/q. Gradient ascent from equally spaced
// seeds followed by Newton; on degenerate families (the circle) the Newton
// step pins the first impact and solves the reduced system.
PeriodicOrbit find_birkhoff_orbit(const Domain& domain, int p, int q, double seed_s0 = 0.0);

// Newton refinement from an explicit configuration seed (used to land on
// saddles of the length functional as well as maxima).
PeriodicOrbit orbit_from_seed(const Domain& domain, int p, int q,
                              const std::vector<double>& seed_s);

// Newton on the reflection-law system. With allow_gauge_fix the first impact
// is pinned when the full Jacobian is singular (degenerate orbit families);
// without it a singular Jacobian is an error.
PeriodicOrbit refine_newton(const Domain& domain, const PeriodicOrbit& orbit,
                            bool allow_gauge_fix = true, double target_residual = 1e-12);

// Composition of q one-step jets around the loop.
JetMap2 monodromy(const Domain& domain, const PeriodicOrbit& orbit, int order);

// Per-step differentials df(x_i) for i = 0..q-1.
std::vector<Mat2> step_differentials(const Domain& domain, const PeriodicOrbit& orbit);

EigenData classify(PeriodicOrbit& orbit, const Domain& domain, double trace_tol = 1e-7);

// Bivariate jet of the loop length L(s0, phi0) = sum of chord lengths along
// the orbit of (s0, phi0), expanded at orbit.points[0].
Jet2 orbit_length_jet(const Domain& domain, const PeriodicOrbit& orbit, int order);

struct AbsolutePeriodicityReport {
    int order = -1;  // largest k <= n with the jet equal to the identity through degree k
    double dL_ds0_identity_error = 0;   // |dL/ds0 - (cos(phi_q) ds_q/ds0 - cos(phi_0))|
    double dL_dphi0_identity_error = 0; // |dL/dphi0 - cos(phi_q) ds_q/dphi0|
    double max_low_order_L_partial = 0; // max |partial L| over orders 1..max(order,0)
    double jet_identity_defect = 0;     // max coefficient deviation at the first failing degree
};

AbsolutePeriodicityReport check_absolute_periodicity_order(const Domain& domain,
                                                           const PeriodicOrbit& orbit, int n,
                                                           double tol = 1e-9);

std::string orbit_to_json_text(const PeriodicOrbit& orbit);
PeriodicOrbit orbit_from_json_text(const std::string& text);

}  // namespace bjl

#endif
