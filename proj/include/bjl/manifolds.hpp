#ifndef BJL_MANIFOLDS_HPP
#define BJL_MANIFOLDS_HPP

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "bjl/linalg.hpp"
#include "bjl/orbits.hpp"

namespace bjl {

class ManifoldError : public std::runtime_error {
  public:
    enum class Code {
        not_hyperbolic,
        vertical_eigenvector,
        seed_failure,
        point_budget,
        left_region,
        no_overlap,
        fit_failure,
        strip_entered,
    };
    ManifoldError(Code code, const std::string& msg) : std::runtime_error(msg), code_(code) {}
    Code code() const { return code_; }

  private:
    Code code_;
};

// A saddle map abstraction: the q-fold billiard map at a hyperbolic periodic
// point, or a synthetic test map.
struct SaddleMap {
    std::function<PhasePoint(const PhasePoint&)> forward;
    std::function<PhasePoint(const PhasePoint&)> backward;
    std::function<JetMap2(const PhasePoint&, int)> jet_at;  // expansion at a point
    PhasePoint fixed_point;
    double lambda = 0;  // expanding eigenvalue, > 1
};

SaddleMap billiard_saddle_map(const Domain& domain, const PeriodicOrbit& orbit);
SaddleMap linear_saddle(double lambda, const PhasePoint& fixed_point = {0.5, M_PI / 2});
// saddle built from an explicit polynomial jet fixed at `fixed_point`
SaddleMap polynomial_saddle(const JetMap2& jet);

// Local invariant manifold as a Taylor curve c(t) with F(c(t)) = c(sigma t),
// sigma the corresponding eigenvalue. Points beyond the validated radius are
// reached by iterating the map.
struct ManifoldArc {
    bool unstable = true;
    int branch_sign = +1;
    PhasePoint anchor;
    double sigma = 0;                               // lambda or 1/lambda
    std::vector<std::array<double, 2>> coeffs;      // c_k, k = 1..local_order
    int local_order = 0;
    double seed_radius = 0;
    double seed_defect = 0;
};

ManifoldArc local_manifold(const SaddleMap& map, bool unstable, int branch_sign, int order,
                           double defect_tol = 1e-10);

PhasePoint eval_manifold(const SaddleMap& map, const ManifoldArc& arc, double t);

// Adaptive polyline of the arc over t in [t_min, t_max] (same sign as the
// branch). Throws point_budget when the refinement cannot reach chord_tol.
struct GlobalArc {
    ManifoldArc seed;
    std::vector<double> params;
    std::vector<PhasePoint> points;
    double chord_error = 0;
    double arclength = 0;
};
GlobalArc globalize(const SaddleMap& map, const ManifoldArc& seed, double t_min, double t_max,
                    int max_points = 4000, double chord_tol = 1e-6);

double invariance_defect(const SaddleMap& map, const ManifoldArc& arc, double t_max,
                         int samples = 16);

// Signed normal distance from a point to the (locally graph-like) arc; the
// sign follows the arc's left normal rot90(tangent).
struct FootResult {
    double t = 0;         // arc parameter of the foot
    double distance = 0;  // signed
};
FootResult signed_distance_to_arc(const SaddleMap& map, const ManifoldArc& arc, const PhasePoint& p,
                                  double t_guess, double t_lo, double t_hi);

// Splitting function samples: Phi(t) = signed distance of Wu(t) to Ws.
struct SplittingSamples {
    std::vector<double> t;
    std::vector<double> phi;
    std::vector<double> foot;  // Ws parameters of the projections
};
SplittingSamples splitting_function(const SaddleMap& map, const ManifoldArc& wu,
                                    const ManifoldArc& ws, double t_lo, double t_hi,
                                    int n_samples = 128, double ws_lo = 0, double ws_hi = 0);

struct TangencyRecord {
    bool found = false;
    double t = 0;
    double phi_value = 0;
    double dphi_value = 0;
    int order_estimate = 0;  // n with Phi ... Phi^(n) ~ 0, Phi^(n+1) != 0
    double fit_residual = 0;
};

struct Crossing {
    double t = 0;
    double slope = 0;
};

struct TangencyScan {
    std::vector<Crossing> crossings;   // transverse zeros
    std::optional<TangencyRecord> tangency;
    std::vector<double> fit_coeffs;    // in the normalized window variable
};

TangencyScan detect_tangency(const std::vector<double>& ts, const std::vector<double>& phis,
                             double value_tol = 1e-8, double slope_tol = 1e-6);

// Least-squares polynomial fit helpers shared by the scan machinery.
std::vector<double> polyfit(const std::vector<double>& xs, const std::vector<double>& ys,
                            int degree);
double polyval(const std::vector<double>& c, double x);
std::vector<double> polyder(const std::vector<double>& c);

// Gamma_j(eps) = (d/dt)^j Phi_eps at the tracked tangency parameter; the
// family is supplied as a sample evaluator so both model families and the
// full billiard pipeline fit the same machinery.
using PhiFamily =
    std::function<std::vector<double>(const std::vector<double>& eps, const std::vector<double>& ts)>;

struct SplittingFamilyReport {
    std::vector<double> gamma0;  // at eps = 0
    Matrix jacobian;             // d Gamma_j / d eps_i
    double genericity_det = 0;   // after column scaling, when square
};

SplittingFamilyReport unfolding_jacobian(const PhiFamily& family, int n_eps,
                                         const std::vector<double>& ts_window, double t_star,
                                         int n_gamma, double step);

// Lemma-1.2.2-style cascade: given channels whose leading response is
// eps * t^k plus higher-order contamination g_{j}(eps) t^j, back-substitute to
// build effective parameters with nearly diagonal (Gamma_j) response.
struct CascadeChannel {
    int k = 0;
    std::function<double(double eps, double t)> delta_phi;
};
SplittingFamilyReport cascade_diagonalize(const std::vector<CascadeChannel>& channels,
                                          const std::vector<double>& ts_window, double t_star,
                                          double eps_scale);

// Injectivity condition: a point is injective when no point of any other
// considered orbit lies within delta of its vertical line.
struct InjectivityVerdict {
    std::size_t orbit = 0, index = 0;
    bool injective = false;
    double nearest_foreign = 0;
};
struct InjectivityReport {
    std::vector<InjectivityVerdict> points;
    std::vector<bool> orbit_pass;  // at least three injective points
};
InjectivityReport injectivity_check(const std::vector<std::vector<PhasePoint>>& orbits,
                                    double delta);

// Displacement decay of the manifold under a one-parameter family of maps
// (the angle-change perturbation): measured at the images of a reference
// manifold point toward the fixed point, fitted against -log(lambda).
struct TangencyLiftReport {
    double lambda = 0;
    double tau = 0;                     // applied parameter
    double k0_displacement = 0;
    std::vector<double> displacements;  // k = 0..K
    double fitted_slope = 0;            // of log displacement vs k
    double slope_rel_error = 0;         // vs -log(lambda)
};

// Displacement of the perturbed unstable manifold measured at the images of a
// reference point, k map applications per step. A strip-localized
// perturbation transports its displacement with the area-preserving dynamics,
// so it decays like lambda^{-k} moving outward along the manifold
// (outward = true); a global rotation of the manifold decays toward the
// fixed point instead (outward = false).
TangencyLiftReport tangency_lift_scaling(const SaddleMap& base,
                                         const std::function<SaddleMap(double)>& family,
                                         double tau, double t_ref, int iterates, bool outward,
                                         double strip_halfwidth = 0.0);

// Billiard instance: curvature bump of size tau in a strip of angular width
// sigma around the orbit's base impact, with the orbit held fixed.
TangencyLiftReport verify_tangency_lift(const Domain& domain, const PeriodicOrbit& orbit,
                                        double t_ref, int iterates, double tau, double sigma);

}  // namespace bjl

#endif
