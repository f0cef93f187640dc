#include "bjl/domain.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "bjl/linalg.hpp"
#include "bjl/quadrature.hpp"
#include "json.hpp"

namespace bjl {

namespace {

constexpr double kTwoPi = 2.0 * M_PI;

double factorial(int n) {
    double f = 1;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
}

// support of a patch as up to two segments inside [0, 2pi)
std::vector<std::array<double, 2>> support_segments(const BumpPatch& p) {
    double lo = p.center_theta - p.half_width;
    double hi = p.center_theta + p.half_width;
    std::vector<std::array<double, 2>> segs;
    if (lo < 0.0) {
        segs.push_back({0.0, hi});
        segs.push_back({lo + kTwoPi, kTwoPi});
    } else if (hi > kTwoPi) {
        segs.push_back({lo, kTwoPi});
        segs.push_back({0.0, hi - kTwoPi});
    } else {
        segs.push_back({lo, hi});
    }
    return segs;
}

double patch_value(const BumpPatch& p, double theta) {
    double u = wrap_angle_pm_pi(theta - p.center_theta) / p.half_width;
    if (std::abs(u) >= 1.0) return 0.0;
    return bump_basis::combo_eval(p.weights, u);
}

Jet1 patch_theta_jet(const BumpPatch& p, double theta, int order) {
    double u = wrap_angle_pm_pi(theta - p.center_theta) / p.half_width;
    Jet1 acc(order, 0.0);
    if (std::abs(u) >= 1.0) return acc;
    Jet1 bj = bump_basis::combo_u_jet(p.weights, u, order);
    // d/dtheta = (1/half_width) d/du
    double scale = 1.0;
    for (int k = 0; k <= order; ++k) {
        acc.at(k) = bj[k] * scale;
        scale /= p.half_width;
    }
    return acc;
}

}  // namespace

bool BumpPatch::contains_theta(double theta) const {
    return std::abs(wrap_angle_pm_pi(theta - center_theta)) < half_width;
}

// ------------------------------------------------------------- bump basis

namespace bump_basis {

namespace {
constexpr double kShiftWidth = 0.13;
constexpr double kShiftCenters[kShiftCount] = {-0.85, -0.65, -0.45, -0.25,
                                               0.25, 0.45, 0.65, 0.85};
}  // namespace

// Taylor jet of psi(u) = exp(-1/(1-u^2)) at u, |u| < 1.
static Jet1 mollifier_jet(double u, int order) {
    Jet1 uj = Jet1::variable(order, u);
    Jet1 v = -(uj * uj) + 1.0;
    Jet1 w = -reciprocal(v);
    return exp(w);
}

double eval(int i, double u) {
    if (std::abs(u) >= 1.0) return 0.0;
    if (i < kDerivCount) {
        Jet1 j = mollifier_jet(u, i);
        return j[i] * factorial(i) / sup_norm(i);
    }
    double w = (u - kShiftCenters[i - kDerivCount]) / kShiftWidth;
    if (std::abs(w) >= 1.0) return 0.0;
    return mollifier_jet(w, 0)[0] / sup_norm(i);
}

Jet1 u_jet(int i, double u, int order) {
    Jet1 out(order, 0.0);
    if (std::abs(u) >= 1.0) return out;
    if (i < kDerivCount) {
        Jet1 j = mollifier_jet(u, i + order);
        double ni = sup_norm(i);
        for (int k = 0; k <= order; ++k)
            out.at(k) = j[i + k] * factorial(i + k) / ni;  // derivative values
        return out;
    }
    double w = (u - kShiftCenters[i - kDerivCount]) / kShiftWidth;
    if (std::abs(w) >= 1.0) return out;
    Jet1 j = mollifier_jet(w, order);
    double scale = 1.0 / sup_norm(i);
    for (int k = 0; k <= order; ++k) {
        out.at(k) = j[k] * factorial(k) * scale;
        scale /= kShiftWidth;
    }
    return out;
}

double sup_norm(int i) {
    if (i >= kDerivCount) return std::exp(-1.0);  // sup of the translate itself
    static std::vector<double> cache;
    if (i < static_cast<int>(cache.size())) return cache[i];
    for (int n = static_cast<int>(cache.size()); n <= i; ++n) {
        double sup = 0.0;
        const int grid = 2001;
        for (int g = 1; g < grid; ++g) {
            double u = -1.0 + 2.0 * g / grid;
            Jet1 j = mollifier_jet(u, n);
            sup = std::max(sup, std::abs(j[n] * factorial(n)));
        }
        cache.push_back(sup > 0 ? sup : 1.0);
    }
    return cache[i];
}

double combo_eval(const std::vector<double>& weights, double u) {
    if (std::abs(u) >= 1.0 || weights.empty()) return 0.0;
    int max_deriv = -1;
    for (int i = 0; i < kDerivCount && i < static_cast<int>(weights.size()); ++i)
        if (weights[i] != 0.0) max_deriv = i;
    double acc = 0.0;
    if (max_deriv >= 0) {
        Jet1 j = mollifier_jet(u, max_deriv);
        for (int i = 0; i <= max_deriv; ++i)
            if (weights[i] != 0.0) acc += weights[i] * j[i] * factorial(i) / sup_norm(i);
    }
    for (int i = kDerivCount; i < static_cast<int>(weights.size()); ++i) {
        if (weights[i] == 0.0) continue;
        double w = (u - kShiftCenters[i - kDerivCount]) / kShiftWidth;
        if (std::abs(w) >= 1.0) continue;
        acc += weights[i] * std::exp(-1.0 / (1.0 - w * w)) / sup_norm(i);
    }
    return acc;
}

Jet1 combo_u_jet(const std::vector<double>& weights, double u, int order) {
    Jet1 acc(order, 0.0);
    if (std::abs(u) >= 1.0 || weights.empty()) return acc;
    int max_deriv = -1;
    for (int i = 0; i < kDerivCount && i < static_cast<int>(weights.size()); ++i)
        if (weights[i] != 0.0) max_deriv = i;
    if (max_deriv >= 0) {
        Jet1 j = mollifier_jet(u, max_deriv + order);
        for (int i = 0; i <= max_deriv; ++i) {
            if (weights[i] == 0.0) continue;
            double ni = sup_norm(i);
            for (int k = 0; k <= order; ++k)
                acc.at(k) += weights[i] * j[i + k] * factorial(i + k) / ni;
        }
    }
    bool any_shift = false;
    for (int i = kDerivCount; i < static_cast<int>(weights.size()); ++i)
        if (weights[i] != 0.0) any_shift = true;
    if (any_shift) {
        for (int i = kDerivCount; i < static_cast<int>(weights.size()); ++i) {
            if (weights[i] == 0.0) continue;
            double w = (u - kShiftCenters[i - kDerivCount]) / kShiftWidth;
            if (std::abs(w) >= 1.0) continue;
            Jet1 j = mollifier_jet(w, order);
            double scale = weights[i] / sup_norm(i);
            for (int k = 0; k <= order; ++k) {
                acc.at(k) += j[k] * factorial(k) * scale;
                scale /= kShiftWidth;
            }
        }
    }
    return acc;
}

}  // namespace bump_basis

// ------------------------------------------------------------------ Domain

Domain::Domain(RadiusProfile profile) : profile_(std::move(profile)) {
    for (const auto& h : profile_.harmonics)
        if (h.k < 1) throw DomainError(DomainError::Code::not_admissible, "harmonic k must be >= 1");
    build_patch_caches();
    int n = std::max(profile_.resolution, 64);
    s_grid_.assign(n + 1, 0.0);
    double dtheta = kTwoPi / n;
    double harmonic_at_0 = 0.0;  // antiderivative offsets cancel in differences
    (void)harmonic_at_0;
    for (int i = 0; i < n; ++i) {
        double a = i * dtheta, b = a + dtheta;
        double ds = profile_.mean_radius * dtheta;
        for (const auto& h : profile_.harmonics) {
            ds += h.cos_coef * (std::sin(h.k * b) - std::sin(h.k * a)) / h.k;
            ds += h.sin_coef * (std::cos(h.k * a) - std::cos(h.k * b)) / h.k;
        }
        ds += bump_integral_prefix(b) - bump_integral_prefix(a);
        s_grid_[i + 1] = s_grid_[i] + ds;
    }
    total_length_ = s_grid_[n];
}

void Domain::build_patch_caches() {
    const int panels = 64;
    const GaussRule& g = GaussRule::get();
    caches_.clear();
    caches_.reserve(profile_.bumps.size());
    for (const auto& p : profile_.bumps) {
        PatchCache c;
        c.center = p.center_theta;
        c.half_width = p.half_width;
        c.patch_index = caches_.size();
        c.cum_plain.assign(panels + 1, 0.0);
        c.cum_cos.assign(panels + 1, 0.0);
        c.cum_sin.assign(panels + 1, 0.0);
        double du = 2.0 / panels;
        for (int k = 0; k < panels; ++k) {
            double lo = -1.0 + k * du, mid = lo + 0.5 * du, half = 0.5 * du;
            double ip = 0, ic = 0, is = 0;
            for (std::size_t i = 0; i < g.x.size(); ++i) {
                double u = mid + half * g.x[i];
                double v = bump_basis::combo_eval(p.weights, u);
                double theta = p.center_theta + p.half_width * u;
                ip += g.w[i] * v;
                ic += g.w[i] * v * std::cos(theta);
                is += g.w[i] * v * std::sin(theta);
            }
            // d theta = half_width * du
            double scale = half * p.half_width;
            c.cum_plain[k + 1] = c.cum_plain[k] + ip * scale;
            c.cum_cos[k + 1] = c.cum_cos[k] + ic * scale;
            c.cum_sin[k + 1] = c.cum_sin[k] + is * scale;
        }
        caches_.push_back(std::move(c));
    }
}

double Domain::cache_partial(const PatchCache& c, double u_hi, int kind) const {
    if (u_hi <= -1.0) return 0.0;
    const std::vector<double>& cum =
        kind == 0 ? c.cum_plain : (kind == 1 ? c.cum_cos : c.cum_sin);
    if (u_hi >= 1.0) return cum.back();
    int panels = static_cast<int>(cum.size()) - 1;
    double du = 2.0 / panels;
    int k = std::min(panels - 1, static_cast<int>((u_hi + 1.0) / du));
    double lo = -1.0 + k * du;
    double acc = cum[k];
    const GaussRule& g = GaussRule::get();
    double mid = 0.5 * (lo + u_hi), half = 0.5 * (u_hi - lo);
    double ip = 0;
    for (std::size_t i = 0; i < g.x.size(); ++i) {
        double u = mid + half * g.x[i];
        double v = bump_basis::combo_eval(profile_.bumps[c.patch_index].weights, u);
        if (kind == 1) v *= std::cos(c.center + c.half_width * u);
        if (kind == 2) v *= std::sin(c.center + c.half_width * u);
        ip += g.w[i] * v;
    }
    return acc + ip * half * c.half_width;
}

double Domain::rho(double theta) const {
    double r = profile_.mean_radius;
    for (const auto& h : profile_.harmonics)
        r += h.cos_coef * std::cos(h.k * theta) + h.sin_coef * std::sin(h.k * theta);
    r += bump_rho(theta);
    return r;
}

double Domain::bump_rho(double theta) const {
    double r = 0.0;
    for (const auto& p : profile_.bumps) r += patch_value(p, theta);
    return r;
}

Jet1 Domain::rho_theta_jet(double theta, int order) const {
    Jet1 r(order, profile_.mean_radius);
    for (const auto& h : profile_.harmonics) {
        Jet1 arg = Jet1::variable(order, theta) * static_cast<double>(h.k);
        r = r + cos(arg) * h.cos_coef + sin(arg) * h.sin_coef;
    }
    for (const auto& p : profile_.bumps) {
        Jet1 pd = patch_theta_jet(p, theta, order);
        // convert derivative values to Taylor coefficients
        for (int k = 0; k <= order; ++k) r.at(k) += pd[k] / factorial(k);
    }
    return r;
}

double Domain::bump_integral_prefix(double theta) const {
    double acc = 0.0;
    for (const auto& c : caches_) {
        for (const auto& seg : support_segments(profile_.bumps[c.patch_index])) {
            double lo = seg[0], hi = std::min(seg[1], theta);
            if (lo >= hi) continue;
            double u_lo = wrap_angle_pm_pi(lo - c.center) / c.half_width;
            double u_hi = wrap_angle_pm_pi(hi - c.center) / c.half_width;
            acc += cache_partial(c, u_hi, 0) - cache_partial(c, u_lo, 0);
        }
    }
    return acc;
}

std::array<double, 2> Domain::bump_position_prefix(double theta) const {
    std::array<double, 2> acc{0.0, 0.0};
    for (const auto& c : caches_) {
        for (const auto& seg : support_segments(profile_.bumps[c.patch_index])) {
            double lo = seg[0], hi = std::min(seg[1], theta);
            if (lo >= hi) continue;
            double u_lo = wrap_angle_pm_pi(lo - c.center) / c.half_width;
            double u_hi = wrap_angle_pm_pi(hi - c.center) / c.half_width;
            acc[0] += cache_partial(c, u_hi, 1) - cache_partial(c, u_lo, 1);
            acc[1] += cache_partial(c, u_hi, 2) - cache_partial(c, u_lo, 2);
        }
    }
    return acc;
}

double Domain::s_of_theta(double theta) const {
    double s = profile_.mean_radius * theta;
    for (const auto& h : profile_.harmonics) {
        s += h.cos_coef * std::sin(h.k * theta) / h.k;
        s += h.sin_coef * (1.0 - std::cos(h.k * theta)) / h.k;
    }
    return s + bump_integral_prefix(theta);
}

double Domain::theta_of_s(double s) const {
    s = wrap_unit(s / total_length_) * total_length_;
    auto it = std::upper_bound(s_grid_.begin(), s_grid_.end(), s);
    std::size_t idx = (it == s_grid_.begin()) ? 0 : (it - s_grid_.begin() - 1);
    int n = static_cast<int>(s_grid_.size()) - 1;
    double dtheta = kTwoPi / n;
    double theta = idx * dtheta;
    if (idx < static_cast<std::size_t>(n) && s_grid_[idx + 1] > s_grid_[idx])
        theta += dtheta * (s - s_grid_[idx]) / (s_grid_[idx + 1] - s_grid_[idx]);
    for (int it2 = 0; it2 < 60; ++it2) {
        double f = s_of_theta(theta) - s;
        double step = f / rho(theta);
        theta -= step;
        if (std::abs(step) < 1e-15) break;
    }
    return theta;
}

std::array<double, 2> Domain::position_of_theta(double theta) const {
    // x(theta) = int_0^theta rho(t) cos t dt, y likewise with sin t
    double r0 = profile_.mean_radius;
    double x = r0 * std::sin(theta);
    double y = r0 * (1.0 - std::cos(theta));
    for (const auto& h : profile_.harmonics) {
        int k = h.k;
        if (k == 1) {
            // cos t cos t -> (t + sin t cos t)/2 etc.; only used by fail-path profiles
            x += h.cos_coef * 0.5 * (theta + std::sin(theta) * std::cos(theta));
            x += h.sin_coef * 0.5 * std::sin(theta) * std::sin(theta);
            y += h.cos_coef * 0.5 * std::sin(theta) * std::sin(theta);
            y += h.sin_coef * 0.5 * (theta - std::sin(theta) * std::cos(theta));
            continue;
        }
        double kp = k + 1.0, km = k - 1.0;
        x += h.cos_coef * 0.5 * (std::sin(kp * theta) / kp + std::sin(km * theta) / km);
        x += h.sin_coef * 0.5 * ((1.0 - std::cos(kp * theta)) / kp + (1.0 - std::cos(km * theta)) / km);
        y += h.cos_coef * 0.5 * ((1.0 - std::cos(kp * theta)) / kp - (1.0 - std::cos(km * theta)) / km);
        y += h.sin_coef * 0.5 * (std::sin(km * theta) / km - std::sin(kp * theta) / kp);
    }
    auto bp = bump_position_prefix(theta);
    return {x + bp[0], y + bp[1]};
}

namespace {

// theta(s) jet from a rho jet in theta, via dtheta/ds = 1/rho(theta).
Jet1 theta_jet_from_rho(const Jet1& rho_jet, double theta0, int order) {
    Jet1 tj(order, theta0);
    for (int pass = 0; pass < order; ++pass) {
        Jet1 dtheta = tj - theta0;
        Jet1 g = reciprocal(compose(rho_jet, dtheta));
        tj = (antiderivative_jet(g) + theta0).truncated(order);
    }
    return tj;
}

}  // namespace

Domain::BoundaryJets Domain::boundary_jets(double s, int order) const {
    if (order > kMaxJetOrder)
        throw DomainError(DomainError::Code::order_too_large, "jet order exceeds configured maximum");
    double theta0 = theta_of_s(s);
    Jet1 rj = rho_theta_jet(theta0, order);
    BoundaryJets out;
    out.theta = theta_jet_from_rho(rj, theta0, order);
    Jet1 dtheta = out.theta - theta0;
    out.kappa = reciprocal(compose(rj, dtheta)).truncated(order);
    auto pos = position_of_theta(theta0);
    out.x = (antiderivative_jet(cos(out.theta)) + pos[0]).truncated(order);
    out.y = (antiderivative_jet(sin(out.theta)) + pos[1]).truncated(order);
    return out;
}

BoundaryPoint Domain::eval_boundary(double s, int order) const {
    auto jets = boundary_jets(s, order);
    BoundaryPoint bp;
    bp.s = wrap_unit(s / total_length_) * total_length_;
    bp.theta = jets.theta.value();
    bp.position = {jets.x.value(), jets.y.value()};
    bp.curvature_jet.resize(order + 1);
    for (int k = 0; k <= order; ++k) bp.curvature_jet[k] = jets.kappa.derivative(k);
    return bp;
}

AdmissibilityReport check_admissibility(const Domain& domain, double rho_tol,
                                        double harmonic_tol, double length_tol) {
    const auto& prof = domain.profile();
    AdmissibilityReport rep;
    int n = std::max(prof.resolution, 64);
    double min_rho = 1e300;
    for (int i = 0; i < n; ++i) min_rho = std::min(min_rho, domain.rho(kTwoPi * i / n));
    rep.min_rho = min_rho;

    // first harmonic: harmonic k == 1 contributes pi * coefficient exactly,
    // bumps by quadrature over their supports
    double c1 = 0.0, s1 = 0.0;
    for (const auto& h : prof.harmonics)
        if (h.k == 1) {
            c1 += M_PI * h.cos_coef;
            s1 += M_PI * h.sin_coef;
        }
    for (const auto& p : prof.bumps) {
        // patch_value handles wrap, integrate over the raw support interval
        double lo = p.center_theta - p.half_width, hi = p.center_theta + p.half_width;
        c1 += integrate([&](double t) { return patch_value(p, t) * std::cos(t); }, lo, hi);
        s1 += integrate([&](double t) { return patch_value(p, t) * std::sin(t); }, lo, hi);
    }
    rep.first_harmonic_residual = std::max(std::abs(c1), std::abs(s1));
    rep.length_error = std::abs(domain.total_length() - 1.0);
    rep.pass = (rep.min_rho > rho_tol) && (rep.first_harmonic_residual < harmonic_tol) &&
               (rep.length_error < length_tol);
    return rep;
}

// ---------------------------------------------------------------- make_bump

namespace {

// kappa(s) jet at the patch center for a prospective rho jet in theta there.
Jet1 kappa_s_jet_from_rho(const Jet1& rho_jet, int order) {
    Jet1 tj = theta_jet_from_rho(rho_jet, 0.0, order);
    return reciprocal(compose(rho_jet, tj)).truncated(order);
}

BumpPatch try_make_bump(const Domain& domain, double s_point,
                        const std::vector<double>& target_jet, double half_width,
                        const std::vector<double>& exclusion_s) {
    int m = static_cast<int>(target_jet.size()) - 1;
    if (m < 0) throw DomainError(DomainError::Code::ill_conditioned_basis, "empty target jet");
    if (m + 1 > bump_basis::kDerivCount)
        throw DomainError(DomainError::Code::order_too_large,
                          "target jet longer than the bump basis supports");
    double theta0 = domain.theta_of_s(s_point);

    // injectivity: the support must avoid every excluded impact
    for (double se : exclusion_s) {
        if (s_distance(se, s_point) < 1e-12) continue;  // the targeted point itself
        double te = domain.theta_of_s(se);
        if (std::abs(wrap_angle_pm_pi(te - theta0)) <= half_width)
            throw DomainError(DomainError::Code::support_collision,
                              "bump support would contain an excluded impact point");
    }
    for (const auto& other : domain.profile().bumps) {
        double gap = std::abs(wrap_angle_pm_pi(other.center_theta - theta0));
        // a co-centered patch of the same width is mergeable, not a collision
        if (gap < 1e-9 && std::abs(other.half_width - half_width) < 1e-12) continue;
        if (gap < other.half_width + half_width)
            throw DomainError(DomainError::Code::support_collision,
                              "bump supports must be disjoint");
    }

    // required new rho jet in theta at the center (triangular solve; each
    // kappa^(j) is affine in the j-th rho coefficient)
    Jet1 rho_old = domain.rho_theta_jet(theta0, m);
    Jet1 kappa_old = kappa_s_jet_from_rho(rho_old, m);
    std::vector<double> kappa_target(m + 1);
    for (int j = 0; j <= m; ++j)
        kappa_target[j] = kappa_old[j] + target_jet[j] / factorial(j);

    Jet1 rho_new = rho_old;
    rho_new.at(0) = 1.0 / kappa_target[0];  // kappa(s0) = 1/rho(theta0)
    for (int j = 1; j <= m; ++j) {
        // kappa^(j) is affine in the j-th rho coefficient once the lower ones are set
        Jet1 probe = rho_new;
        probe.at(j) = 0.0;
        double k0 = kappa_s_jet_from_rho(probe, j)[j];
        probe.at(j) = 1.0;
        double k1 = kappa_s_jet_from_rho(probe, j)[j];
        rho_new.at(j) = (kappa_target[j] - k0) / (k1 - k0);
    }

    std::vector<double> drho(m + 1);
    bool all_zero = true;
    for (int j = 0; j <= m; ++j) {
        drho[j] = rho_new[j] - rho_old[j];
        if (std::abs(drho[j]) > 0.0) all_zero = false;
    }

    BumpPatch patch;
    patch.center_theta = wrap_unit(theta0 / kTwoPi) * kTwoPi;
    patch.half_width = half_width;
    patch.target_jet = target_jet;
    if (all_zero) {
        patch.weights.clear();
        return patch;
    }

    int dim = bump_basis::kSize;
    // rows: jet constraints (Taylor coefficients), then per-half moments
    // (1, cos, sin) on each side of the center
    Matrix A(m + 7, dim);
    std::vector<double> rhs(m + 7, 0.0);
    for (int i = 0; i < dim; ++i) {
        Jet1 bj = bump_basis::u_jet(i, 0.0, m);  // derivative values in u at the center
        double hpow = 1.0;
        for (int j = 0; j <= m; ++j) {
            A(j, i) = bj[j] / (hpow * factorial(j));
            hpow *= half_width;
        }
        auto column_moments = [&](double ulo, double uhi, int row) {
            A(row + 0, i) = integrate(
                [&](double u) { return bump_basis::eval(i, u); }, ulo, uhi);
            A(row + 1, i) = integrate(
                [&](double u) { return bump_basis::eval(i, u) * std::cos(theta0 + half_width * u); },
                ulo, uhi);
            A(row + 2, i) = integrate(
                [&](double u) { return bump_basis::eval(i, u) * std::sin(theta0 + half_width * u); },
                ulo, uhi);
        };
        column_moments(-1.0, 0.0, m + 1);
        column_moments(0.0, 1.0, m + 4);
    }
    for (int j = 0; j <= m; ++j) rhs[j] = drho[j];

    patch.weights = min_norm_solve(A, rhs);
    return patch;
}

}  // namespace

BumpPatch make_bump(const Domain& domain, double s_point,
                    const std::vector<double>& target_jet, double half_width,
                    const std::vector<double>& exclusion_s) {
    double scale = 1.0;
    for (double t : target_jet) scale = std::max(scale, std::abs(t));
    BumpPatch patch = try_make_bump(domain, s_point, target_jet, half_width, exclusion_s);
    if (patch.weights.empty()) return patch;  // zero target
    // verify end to end on the patched profile
    RadiusProfile patched = domain.profile();
    patched.bumps.push_back(patch);
    Domain dp(patched);
    int m = static_cast<int>(target_jet.size()) - 1;
    auto old_bp = domain.eval_boundary(s_point, m);
    auto new_bp = dp.eval_boundary(s_point, m);
    double err = 0.0;
    for (int j = 0; j <= m; ++j)
        err = std::max(err, std::abs(new_bp.curvature_jet[j] - old_bp.curvature_jet[j] -
                                     target_jet[j]));
    double pos_err = std::hypot(new_bp.position[0] - old_bp.position[0],
                                new_bp.position[1] - old_bp.position[1]);
    if (err <= 1e-9 * scale && pos_err < 1e-10) return patch;
    throw DomainError(DomainError::Code::ill_conditioned_basis,
                      "bump basis solve failed verification; enlarge basis or widen support");
}

RadiusProfile apply_and_renormalize(const RadiusProfile& profile,
                                    const std::vector<BumpPatch>& patches,
                                    bool constrained, double* length_drift) {
    RadiusProfile out = profile;
    for (const auto& p : patches) out.bumps.push_back(p);
    Domain d(out);
    double drift = d.total_length() - 1.0;
    if (length_drift) *length_drift = drift;

    int n = std::max(out.resolution, 64);
    double min_rho = 1e300;
    for (int i = 0; i < n; ++i) min_rho = std::min(min_rho, d.rho(kTwoPi * i / n));
    if (min_rho <= 0.0)
        throw DomainError(DomainError::Code::positivity,
                          "perturbation too large: rho loses positivity");

    if (!constrained && std::abs(drift) > 0.0) {
        double scale = 1.0 / d.total_length();
        out.mean_radius *= scale;
        for (auto& h : out.harmonics) {
            h.cos_coef *= scale;
            h.sin_coef *= scale;
        }
        for (auto& b : out.bumps)
            for (auto& w : b.weights) w *= scale;
    }
    return out;
}

// --------------------------------------------------------------------- JSON

RadiusProfile profile_from_json_text(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    RadiusProfile p;
    p.mean_radius = j.value("mean_radius", 1.0 / kTwoPi);
    if (j.contains("harmonics"))
        for (const auto& h : j["harmonics"])
            p.harmonics.push_back({h.at("k").get<int>(), h.value("cos", 0.0), h.value("sin", 0.0)});
    if (j.contains("bumps"))
        for (const auto& b : j["bumps"]) {
            BumpPatch bp;
            bp.center_theta = b.at("center_theta").get<double>();
            bp.half_width = b.at("half_width").get<double>();
            if (b.contains("weights")) bp.weights = b["weights"].get<std::vector<double>>();
            if (b.contains("target_jet")) bp.target_jet = b["target_jet"].get<std::vector<double>>();
            p.bumps.push_back(std::move(bp));
        }
    p.resolution = j.value("resolution", 4096);
    return p;
}

std::string profile_to_json_text(const RadiusProfile& p) {
    nlohmann::json j;
    j["mean_radius"] = p.mean_radius;
    j["harmonics"] = nlohmann::json::array();
    for (const auto& h : p.harmonics)
        j["harmonics"].push_back({{"k", h.k}, {"cos", h.cos_coef}, {"sin", h.sin_coef}});
    j["bumps"] = nlohmann::json::array();
    for (const auto& b : p.bumps)
        j["bumps"].push_back({{"center_theta", b.center_theta},
                              {"half_width", b.half_width},
                              {"weights", b.weights},
                              {"target_jet", b.target_jet}});
    j["resolution"] = p.resolution;
    return j.dump(2);
}

RadiusProfile load_profile(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open domain file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return profile_from_json_text(ss.str());
}

void save_profile(const RadiusProfile& profile, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write domain file: " + path);
    out << profile_to_json_text(profile) << "\n";
}

RadiusProfile circle_profile() {
    RadiusProfile p;
    p.mean_radius = 1.0 / kTwoPi;
    return p;
}

RadiusProfile ellipse_like_profile(double eps) {
    RadiusProfile p;
    p.mean_radius = 1.0 / kTwoPi;
    p.harmonics.push_back({2, eps / kTwoPi, 0.0});
    return p;
}

}  // namespace bjl
