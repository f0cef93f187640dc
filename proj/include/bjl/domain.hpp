#ifndef BJL_DOMAIN_HPP
#define BJL_DOMAIN_HPP

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "bjl/jets.hpp"

namespace bjl {

// Convex domains encoded by the radius of curvature rho(theta) as a function
// of the tangent angle theta: a constant term, cosine/sine harmonics with
// k >= 2, and compactly supported bump patches. Closure of the curve is the
// vanishing of the first harmonic of rho; total length is the integral of rho.

struct Harmonic {
    int k = 2;
    double cos_coef = 0.0;
    double sin_coef = 0.0;
};

// A localized change of rho supported in (center_theta - half_width,
// center_theta + half_width), expressed over a fixed basis of scaled
// derivatives of the C-infinity mollifier exp(-1/(1-u^2)).
struct BumpPatch {
    double center_theta = 0.0;
    double half_width = 0.1;
    std::vector<double> weights;
    std::vector<double> target_jet;  // prescribed (d/ds)^j kappa increments at the center

    bool contains_theta(double theta) const;
};

struct RadiusProfile {
    double mean_radius = 1.0 / (2.0 * M_PI);
    std::vector<Harmonic> harmonics;
    std::vector<BumpPatch> bumps;
    int resolution = 4096;
};

struct BoundaryPoint {
    double s = 0.0;
    double theta = 0.0;
    std::array<double, 2> position{0.0, 0.0};
    std::vector<double> curvature_jet;  // kappa, kappa', ... with respect to arc length
};

struct AdmissibilityReport {
    double min_rho = 0.0;
    double first_harmonic_residual = 0.0;
    double length_error = 0.0;
    bool pass = false;
};

class DomainError : public std::runtime_error {
  public:
    enum class Code {
        order_too_large,
        positivity,
        support_collision,
        ill_conditioned_basis,
        not_admissible,
    };
    DomainError(Code code, const std::string& msg) : std::runtime_error(msg), code_(code) {}
    Code code() const { return code_; }

  private:
    Code code_;
};

// Immutable evaluation wrapper around a RadiusProfile. Harmonic parts of all
// boundary integrals are closed-form; bump parts go through quadrature.
class Domain {
  public:
    static constexpr int kMaxJetOrder = 10;

    explicit Domain(RadiusProfile profile);

    const RadiusProfile& profile() const { return profile_; }

    double rho(double theta) const;
    Jet1 rho_theta_jet(double theta, int order) const;

    double total_length() const { return total_length_; }
    double s_of_theta(double theta) const;      // theta in [0, 2pi)
    double theta_of_s(double s) const;          // s in [0, 1)
    std::array<double, 2> position_of_theta(double theta) const;

    // Univariate jets in arc length at s: tangent angle, position, curvature.
    struct BoundaryJets {
        Jet1 theta, x, y, kappa;
    };
    BoundaryJets boundary_jets(double s, int order) const;

    BoundaryPoint eval_boundary(double s, int order) const;

  private:
    RadiusProfile profile_;
    double total_length_;
    std::vector<double> s_grid_;  // s at uniformly spaced theta, for inversion seeds

    // per-patch cumulative integrals of (1, cos, sin)-weighted values over
    // u in [-1, 1], sampled at panel boundaries; partial panels are finished
    // with a fixed Gauss rule
    struct PatchCache {
        double center = 0, half_width = 0;
        std::vector<double> cum_plain, cum_cos, cum_sin;  // size panels + 1
        std::size_t patch_index = 0;
    };
    std::vector<PatchCache> caches_;

    void build_patch_caches();
    double cache_partial(const PatchCache& c, double u_hi, int kind) const;  // from u = -1
    double bump_rho(double theta) const;
    double bump_integral_prefix(double theta) const;                 // int_0^theta of bump part
    std::array<double, 2> bump_position_prefix(double theta) const;  // same for (cos, sin) moments
};

AdmissibilityReport check_admissibility(const Domain& domain,
                                        double rho_tol = 1e-9,
                                        double harmonic_tol = 1e-9,
                                        double length_tol = 1e-9);
inline AdmissibilityReport check_admissibility(const RadiusProfile& profile) {
    return check_admissibility(Domain(profile));
}

// Bump basis over u = (theta - center)/half_width in (-1, 1), built from the
// mollifier psi(u) = exp(-1/(1-u^2)): indices 0..7 are sup-normalized
// derivatives psi^(i)(u) (these carry the prescribed jet at the center),
// indices 8..15 are narrow translates psi((u - c_j)/0.13) with c_j = +-0.25,
// +-0.45, +-0.65, +-0.85 (supports avoid u = 0; these absorb the closure and
// position moments without touching the center jet).
namespace bump_basis {
constexpr int kDerivCount = 8;
constexpr int kShiftCount = 8;
constexpr int kSize = kDerivCount + kShiftCount;
double eval(int i, double u);            // value at u
Jet1 u_jet(int i, double u, int order);  // derivative values in u
double sup_norm(int i);
// weighted combination of the whole basis in one mollifier pass
double combo_eval(const std::vector<double>& weights, double u);
Jet1 combo_u_jet(const std::vector<double>& weights, double u, int order);
}  // namespace bump_basis

// Construct a patch whose curvature jet increment at s_point equals
// target_jet (derivatives with respect to arc length), with the boundary
// point, tangent line and arc-length coordinate at s_point unchanged and the
// boundary untouched outside the support. Throws on support collisions with
// the exclusion set or existing patches, and if the basis solve fails to
// verify.
BumpPatch make_bump(const Domain& domain, double s_point,
                    const std::vector<double>& target_jet, double half_width,
                    const std::vector<double>& exclusion_s = {});

// Merge patches into the profile. When constrained == true (an orbit-freezing
// experiment is active) the length is not renormalized and the drift is
// reported via *length_drift.
RadiusProfile apply_and_renormalize(const RadiusProfile& profile,
                                    const std::vector<BumpPatch>& patches,
                                    bool constrained = false,
                                    double* length_drift = nullptr);

RadiusProfile profile_from_json_text(const std::string& text);
std::string profile_to_json_text(const RadiusProfile& profile);
RadiusProfile load_profile(const std::string& path);
void save_profile(const RadiusProfile& profile, const std::string& path);

// Reference shapes used throughout the tests and scenarios.
RadiusProfile circle_profile();
RadiusProfile ellipse_like_profile(double eps = 0.3);

}  // namespace bjl

#endif
