#include "bjl/manifolds.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "bjl/perturb.hpp"

namespace bjl {

namespace {

PhasePoint eval_poly(const ManifoldArc& arc, double t) {
    double x = 0, y = 0;
    double tp = t;
    for (int k = 1; k <= arc.local_order; ++k) {
        x += arc.coeffs[k - 1][0] * tp;
        y += arc.coeffs[k - 1][1] * tp;
        tp *= t;
    }
    return {arc.anchor.s + x, arc.anchor.phi + y};
}

}  // namespace

// ---------------------------------------------------------------- saddles

SaddleMap billiard_saddle_map(const Domain& domain, const PeriodicOrbit& orbit) {
    PeriodicOrbit copy = orbit;
    EigenData e = orbit.eigen ? *orbit.eigen : classify(copy, domain);
    if (e.cls != OrbitClass::hyperbolic || e.lambda <= 1.0)
        throw ManifoldError(ManifoldError::Code::not_hyperbolic,
                            "manifolds need a hyperbolic orbit with lambda > 1");
    SaddleMap m;
    int q = orbit.q;
    const Domain* dom = &domain;
    m.forward = [dom, q](const PhasePoint& p) { return iterate(*dom, p, q); };
    m.backward = [dom, q](const PhasePoint& p) { return iterate(*dom, p, -q); };
    m.jet_at = [dom, q](const PhasePoint& p, int order) { return iterate_jet(*dom, p, q, order); };
    m.fixed_point = orbit.points[0];
    m.lambda = e.lambda;
    return m;
}

SaddleMap polynomial_saddle(const JetMap2& jet) {
    SaddleMap m;
    m.fixed_point = jet.base_in;
    Mat2 A = jet.linear();
    double tr = A.trace();
    double disc = std::sqrt(std::max(0.0, tr * tr - 4 * A.det()));
    m.lambda = (tr + disc) / 2.0;
    JetMap2 inv = invert_map(jet);
    m.forward = [jet](const PhasePoint& p) {
        double u = p.s - jet.base_in.s, v = p.phi - jet.base_in.phi;
        return PhasePoint{jet.s_out.eval(u, v), jet.phi_out.eval(u, v)};
    };
    m.backward = [inv](const PhasePoint& p) {
        double u = p.s - inv.base_in.s, v = p.phi - inv.base_in.phi;
        return PhasePoint{inv.s_out.eval(u, v), inv.phi_out.eval(u, v)};
    };
    m.jet_at = [jet](const PhasePoint& p, int order) {
        Jet2 u = Jet2::variable_u(order, 0.0), v = Jet2::variable_v(order, 0.0);
        double du = p.s - jet.base_in.s, dv = p.phi - jet.base_in.phi;
        JetMap2 out;
        out.order = order;
        out.base_in = p;
        Jet2 fs = jet.s_out.truncated(order);
        Jet2 fp = jet.phi_out.truncated(order);
        fs.at(0, 0) -= jet.base_out.s;
        fp.at(0, 0) -= jet.base_out.phi;
        out.s_out = compose_bivariate(fs, u + du, v + dv) + jet.base_out.s;
        out.phi_out = compose_bivariate(fp, u + du, v + dv) + jet.base_out.phi;
        out.base_out = {out.s_out.value(), out.phi_out.value()};
        return out;
    };
    return m;
}

SaddleMap linear_saddle(double lambda, const PhasePoint& fixed_point) {
    JetMap2 jet = JetMap2::identity(3, fixed_point);
    jet.s_out.at(1, 0) = lambda;
    jet.phi_out.at(0, 1) = 1.0 / lambda;
    return polynomial_saddle(jet);
}

// ----------------------------------------------------------- local seeds

ManifoldArc local_manifold(const SaddleMap& map, bool unstable, int branch_sign, int order,
                           double defect_tol) {
    JetMap2 jet = map.jet_at(map.fixed_point, std::max(order, 1));
    Mat2 A = jet.linear();
    double tr = A.trace();
    if (std::abs(tr) <= 2.0)
        throw ManifoldError(ManifoldError::Code::not_hyperbolic, "fixed point is not a saddle");
    double disc = std::sqrt(tr * tr - 4 * A.det());
    double lam = (tr + (tr > 0 ? disc : -disc)) / 2.0;
    if (lam <= 1.0)
        throw ManifoldError(ManifoldError::Code::not_hyperbolic,
                            "orientation-reversing saddle not supported");
    double sigma = unstable ? lam : 1.0 / lam;

    std::array<double, 2> v{A.b, sigma - A.a};
    if (std::hypot(v[0], v[1]) < 1e-13) v = {sigma - A.d, A.c};
    double norm = std::hypot(v[0], v[1]);
    if (std::abs(v[0]) / norm < 1e-10)
        throw ManifoldError(ManifoldError::Code::vertical_eigenvector,
                            "eigenvector parallel to the vertical axis");
    v = {branch_sign * v[0] / norm, branch_sign * v[1] / norm};

    ManifoldArc arc;
    arc.unstable = unstable;
    arc.branch_sign = branch_sign;
    arc.anchor = map.fixed_point;
    arc.sigma = sigma;
    arc.local_order = order;
    arc.coeffs.assign(order, {0.0, 0.0});
    arc.coeffs[0] = v;

    // invariance F(c(t)) = c(sigma t) order by order: with c_k = 0 the degree-k
    // coefficient of F(c) is the known part N_k, so (A - sigma^k) c_k = -N_k
    Jet2 fs = jet.s_out, fp = jet.phi_out;
    fs.at(0, 0) = 0.0;
    fp.at(0, 0) = 0.0;
    for (int k = 2; k <= order; ++k) {
        Jet1 cx(order, 0.0), cy(order, 0.0);
        for (int j = 1; j <= order; ++j) {
            cx.at(j) = arc.coeffs[j - 1][0];
            cy.at(j) = arc.coeffs[j - 1][1];
        }
        Jet1 Fx = compose_with_curve(fs, cx, cy);
        Jet1 Fy = compose_with_curve(fp, cx, cy);
        Mat2 lhs{A.a - std::pow(sigma, k), A.b, A.c, A.d - std::pow(sigma, k)};
        Mat2 inv = lhs.inverse();
        arc.coeffs[k - 1] = {-(inv.a * Fx[k] + inv.b * Fy[k]),
                             -(inv.c * Fx[k] + inv.d * Fy[k])};
    }

    double radius = 0.3;
    for (int shrink = 0; shrink < 80; ++shrink) {
        double defect = 0;
        try {
            for (double frac : {1.0, 0.7, 0.4}) {
                double t = branch_sign >= 0 ? radius * frac : -radius * frac;
                PhasePoint c = eval_poly(arc, t);
                PhasePoint Fc = map.forward(c);
                PhasePoint cs = eval_poly(arc, sigma * t);
                defect = std::max(defect, std::hypot(Fc.s - cs.s, Fc.phi - cs.phi));
            }
        } catch (const std::exception&) {
            defect = 1e300;  // polynomial left the valid region; shrink
        }
        if (defect < defect_tol) {
            arc.seed_radius = radius;
            arc.seed_defect = defect;
            return arc;
        }
        radius *= 0.75;
    }
    throw ManifoldError(ManifoldError::Code::seed_failure,
                        "local manifold seed never reached the defect tolerance");
}

PhasePoint eval_manifold(const SaddleMap& map, const ManifoldArc& arc, double t) {
    if (std::abs(t) <= arc.seed_radius) return eval_poly(arc, t);
    // c(t) = F^k(c(t / lambda^k)) on the unstable side and
    // c(t) = F^{-k}(c(sigma^k t)) with sigma = 1/lambda on the stable side:
    // both pull the parameter in by 1/lambda per application
    int k = 0;
    double tt = t;
    while (std::abs(tt) > arc.seed_radius && k < 300) {
        tt /= map.lambda;
        ++k;
    }
    PhasePoint p = eval_poly(arc, tt);
    for (int i = 0; i < k; ++i) p = arc.unstable ? map.forward(p) : map.backward(p);
    return p;
}

GlobalArc globalize(const SaddleMap& map, const ManifoldArc& seed, double t_min, double t_max,
                    int max_points, double chord_tol) {
    GlobalArc g;
    g.seed = seed;
    if (t_min >= t_max)
        throw ManifoldError(ManifoldError::Code::no_overlap, "empty parameter window");
    int init = 33;
    for (int i = 0; i < init; ++i) {
        double t = t_min + (t_max - t_min) * i / (init - 1);
        g.params.push_back(t);
        g.points.push_back(eval_manifold(map, seed, t));
    }
    bool changed = true;
    while (changed) {
        changed = false;
        std::vector<double> np;
        std::vector<PhasePoint> npts;
        double worst = 0;
        for (std::size_t i = 0; i + 1 < g.params.size(); ++i) {
            np.push_back(g.params[i]);
            npts.push_back(g.points[i]);
            double tm = 0.5 * (g.params[i] + g.params[i + 1]);
            PhasePoint pm = eval_manifold(map, seed, tm);
            double mx = 0.5 * (g.points[i].s + g.points[i + 1].s);
            double my = 0.5 * (g.points[i].phi + g.points[i + 1].phi);
            double dev = std::hypot(pm.s - mx, pm.phi - my);
            worst = std::max(worst, dev);
            if (dev > chord_tol) {
                np.push_back(tm);
                npts.push_back(pm);
                changed = true;
            }
        }
        np.push_back(g.params.back());
        npts.push_back(g.points.back());
        if (static_cast<int>(np.size()) > max_points)
            throw ManifoldError(ManifoldError::Code::point_budget,
                                "point budget exhausted while refining the arc");
        g.params = std::move(np);
        g.points = std::move(npts);
        g.chord_error = worst;
    }
    g.arclength = 0;
    for (std::size_t i = 0; i + 1 < g.points.size(); ++i)
        g.arclength += std::hypot(g.points[i + 1].s - g.points[i].s,
                                  g.points[i + 1].phi - g.points[i].phi);
    return g;
}

double invariance_defect(const SaddleMap& map, const ManifoldArc& arc, double t_max, int samples) {
    double defect = 0;
    for (int i = 1; i <= samples; ++i) {
        double t = t_max * i / samples;
        PhasePoint a = map.forward(eval_manifold(map, arc, t));
        PhasePoint b = eval_manifold(map, arc, arc.sigma * t);
        defect = std::max(defect, std::hypot(a.s - b.s, a.phi - b.phi));
    }
    return defect;
}

// ------------------------------------------------------------- distances

FootResult signed_distance_to_arc(const SaddleMap& map, const ManifoldArc& arc, const PhasePoint& p,
                                  double t_guess, double t_lo, double t_hi) {
    auto d2 = [&](double t) {
        PhasePoint w = eval_manifold(map, arc, t);
        return (w.s - p.s) * (w.s - p.s) + (w.phi - p.phi) * (w.phi - p.phi);
    };
    int nscan = 48;
    double best_t = std::clamp(t_guess, t_lo, t_hi);
    double best = d2(best_t);
    for (int i = 0; i <= nscan; ++i) {
        double t = t_lo + (t_hi - t_lo) * i / nscan;
        double val = d2(t);
        if (val < best) {
            best = val;
            best_t = t;
        }
    }
    double h = (t_hi - t_lo) / nscan;
    double a = std::max(t_lo, best_t - h), b = std::min(t_hi, best_t + h);
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    double f1 = d2(x1), f2 = d2(x2);
    for (int it = 0; it < 90; ++it) {
        if (f1 < f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - gr * (b - a);
            f1 = d2(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + gr * (b - a);
            f2 = d2(x2);
        }
    }
    FootResult r;
    r.t = 0.5 * (a + b);
    PhasePoint foot = eval_manifold(map, arc, r.t);
    double dt = std::max(1e-7, 1e-6 * std::abs(r.t));
    PhasePoint fwd = eval_manifold(map, arc, r.t + dt);
    PhasePoint bck = eval_manifold(map, arc, r.t - dt);
    double tx = fwd.s - bck.s, ty = fwd.phi - bck.phi;
    double tn = std::hypot(tx, ty);
    tx /= tn;
    ty /= tn;
    double dx = p.s - foot.s, dy = p.phi - foot.phi;
    r.distance = -ty * dx + tx * dy;  // left normal rot90(tangent)
    return r;
}

SplittingSamples splitting_function(const SaddleMap& map, const ManifoldArc& wu,
                                    const ManifoldArc& ws, double t_lo, double t_hi,
                                    int n_samples, double ws_lo, double ws_hi) {
    if (ws_lo == 0 && ws_hi == 0) {
        ws_hi = ws.seed_radius * std::pow(map.lambda, 6);
        ws_lo = -ws_hi;
    }
    SplittingSamples out;
    double guess = 0.5 * (ws_lo + ws_hi);
    for (int i = 0; i < n_samples; ++i) {
        double t = t_lo + (t_hi - t_lo) * i / (n_samples - 1);
        PhasePoint p = eval_manifold(map, wu, t);
        FootResult f = signed_distance_to_arc(map, ws, p, guess, ws_lo, ws_hi);
        guess = f.t;
        out.t.push_back(t);
        out.phi.push_back(f.distance);
        out.foot.push_back(f.t);
    }
    return out;
}

// ------------------------------------------------------------- poly fits

std::vector<double> polyfit(const std::vector<double>& xs, const std::vector<double>& ys,
                            int degree) {
    Matrix A(xs.size(), degree + 1);
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double p = 1.0;
        for (int j = 0; j <= degree; ++j) {
            A(i, j) = p;
            p *= xs[i];
        }
    }
    return least_squares(A, ys);
}

double polyval(const std::vector<double>& c, double x) {
    double r = 0;
    for (std::size_t k = c.size(); k-- > 0;) r = r * x + c[k];
    return r;
}

std::vector<double> polyder(const std::vector<double>& c) {
    std::vector<double> d;
    for (std::size_t k = 1; k < c.size(); ++k) d.push_back(k * c[k]);
    if (d.empty()) d.push_back(0.0);
    return d;
}

TangencyScan detect_tangency(const std::vector<double>& ts, const std::vector<double>& phis,
                             double value_tol, double slope_tol) {
    if (ts.size() < 64)
        throw ManifoldError(ManifoldError::Code::fit_failure,
                            "tangency detection needs at least 64 samples per window");
    double lo = ts.front(), hi = ts.back();
    double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
    std::vector<double> xs(ts.size());
    for (std::size_t i = 0; i < ts.size(); ++i) xs[i] = (ts[i] - mid) / half;
    int degree = static_cast<int>(std::min<std::size_t>(8, ts.size() - 1));
    std::vector<double> c = polyfit(xs, phis, degree);

    TangencyScan scan;
    scan.fit_coeffs = c;
    double resid = 0;
    for (std::size_t i = 0; i < xs.size(); ++i)
        resid = std::max(resid, std::abs(polyval(c, xs[i]) - phis[i]));

    std::vector<double> dc = polyder(c);
    auto bisect = [](const std::vector<double>& poly, double a, double b) {
        double fa = polyval(poly, a);
        for (int it = 0; it < 80; ++it) {
            double m = 0.5 * (a + b);
            double fm = polyval(poly, m);
            if (fa * fm <= 0) {
                b = m;
            } else {
                a = m;
                fa = fm;
            }
        }
        return 0.5 * (a + b);
    };

    for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
        double fa = polyval(c, xs[i]), fb = polyval(c, xs[i + 1]);
        if (fa == 0.0) fa = 1e-300;
        if (fa * fb < 0) {
            double x0 = bisect(c, xs[i], xs[i + 1]);
            scan.crossings.push_back({mid + half * x0, polyval(dc, x0) / half});
        }
    }

    // near-tangency: a point where both the fit and its slope are below
    // tolerance; a dense scan of the fitted polynomial also catches
    // inflection-type contacts where the slope does not change sign
    TangencyRecord best;
    double best_score = 1e300;
    const int dense = 2000;
    auto consider = [&](double x0) {
        double val = polyval(c, x0);
        double slope = polyval(dc, x0) / half;
        double score = std::abs(val) / value_tol + std::abs(slope) / slope_tol;
        if (std::abs(val) < value_tol && std::abs(slope) < slope_tol && score < best_score) {
            best_score = score;
            best.found = true;
            best.t = mid + half * x0;
            best.phi_value = val;
            best.dphi_value = slope;
            best.fit_residual = resid;
            // order n: Phi through Phi^(n) below noise, Phi^(n+1) significant;
            // judge each Taylor term's contribution across the window against
            // the dominant one and the fit noise
            std::vector<double> term(degree + 1, 0.0);
            std::vector<double> cur = c;
            double fact = 1.0, max_term = 0.0;
            for (int j = 1; j <= degree; ++j) {
                cur = polyder(cur);
                fact *= j;
                term[j] = std::abs(polyval(cur, x0)) / fact;
                max_term = std::max(max_term, term[j]);
            }
            double noise = std::max(50.0 * std::max(resid, 1e-13), 1e-2 * max_term);
            best.order_estimate = degree;
            for (int j = 1; j <= degree; ++j)
                if (term[j] > noise) {
                    best.order_estimate = j - 1;
                    break;
                }
        }
    };
    for (int i = 0; i <= dense; ++i) {
        double x0 = -1.0 + 2.0 * i / dense;
        consider(x0);
    }
    for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
        double fa = polyval(dc, xs[i]), fb = polyval(dc, xs[i + 1]);
        if (fa == 0.0) fa = 1e-300;
        if (fa * fb < 0) consider(bisect(dc, xs[i], xs[i + 1]));
    }
    if (best.found) scan.tangency = best;
    return scan;
}

SplittingFamilyReport unfolding_jacobian(const PhiFamily& family, int n_eps,
                                         const std::vector<double>& ts_window, double t_star,
                                         int n_gamma, double step) {
    auto gammas = [&](const std::vector<double>& eps) {
        std::vector<double> phis = family(eps, ts_window);
        double lo = ts_window.front(), hi = ts_window.back();
        double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
        std::vector<double> xs(ts_window.size());
        for (std::size_t i = 0; i < xs.size(); ++i) xs[i] = (ts_window[i] - mid) / half;
        std::vector<double> c =
            polyfit(xs, phis, static_cast<int>(std::min<std::size_t>(8, xs.size() - 1)));
        std::vector<double> out;
        double x0 = (t_star - mid) / half;
        std::vector<double> cur = c;
        double hp = 1.0;
        for (int j = 0; j <= n_gamma; ++j) {
            out.push_back(polyval(cur, x0) / hp);
            cur = polyder(cur);
            hp *= half;
        }
        return out;
    };

    SplittingFamilyReport rep;
    std::vector<double> zero(n_eps, 0.0);
    rep.gamma0 = gammas(zero);
    rep.jacobian = Matrix(n_gamma + 1, n_eps);
    for (int i = 0; i < n_eps; ++i) {
        std::vector<double> ep = zero, em = zero;
        ep[i] += step;
        em[i] -= step;
        auto gp = gammas(ep);
        auto gm = gammas(em);
        for (int j = 0; j <= n_gamma; ++j) rep.jacobian(j, i) = (gp[j] - gm[j]) / (2 * step);
    }
    if (rep.jacobian.rows() == rep.jacobian.cols()) {
        Matrix S = rep.jacobian;
        for (std::size_t col = 0; col < S.cols(); ++col) {
            double m = 0;
            for (std::size_t r = 0; r < S.rows(); ++r) m = std::max(m, std::abs(S(r, col)));
            if (m > 0)
                for (std::size_t r = 0; r < S.rows(); ++r) S(r, col) /= m;
        }
        rep.genericity_det = lu_det(S);
    }
    return rep;
}

SplittingFamilyReport cascade_diagonalize(const std::vector<CascadeChannel>& channels,
                                          const std::vector<double>& ts_window, double t_star,
                                          double eps_scale) {
    int n = static_cast<int>(channels.size()) - 1;
    // leading coefficients of each channel near eps_scale
    std::vector<double> alpha(channels.size(), 1.0);
    for (std::size_t j = 0; j < channels.size(); ++j) {
        std::vector<double> resp(ts_window.size());
        for (std::size_t i = 0; i < ts_window.size(); ++i)
            resp[i] = channels[j].delta_phi(eps_scale, ts_window[i]);
        std::vector<double> cf = polyfit(ts_window, resp, n + 1);
        alpha[j] = cf[channels[j].k] / eps_scale;
    }

    PhiFamily family = [&, alpha](const std::vector<double>& eps, const std::vector<double>& ts) {
        std::vector<double> applied(channels.size(), 0.0);
        for (std::size_t j = 0; j < eps.size() && j < applied.size(); ++j)
            applied[j] = eps[j] / alpha[j];
        auto total_at = [&](const std::vector<double>& amps, double t) {
            double acc = 0;
            for (std::size_t l = 0; l < channels.size(); ++l)
                if (amps[l] != 0.0) acc += channels[l].delta_phi(amps[l], t);
            return acc;
        };
        // ascending cascade: cancel the residual coefficient at each degree
        // with the channel owning that degree
        for (int lvl = 0; lvl <= n; ++lvl) {
            std::vector<double> resp(ts.size());
            for (std::size_t i = 0; i < ts.size(); ++i) resp[i] = total_at(applied, ts[i]);
            std::vector<double> cf = polyfit(ts, resp, n + 1);
            double want = (lvl < static_cast<int>(eps.size())) ? eps[lvl] : 0.0;
            double residual = cf[channels[lvl].k] - want;
            applied[lvl] -= residual / alpha[lvl];
        }
        std::vector<double> out(ts.size());
        for (std::size_t i = 0; i < ts.size(); ++i) out[i] = total_at(applied, ts[i]);
        return out;
    };
    return unfolding_jacobian(family, static_cast<int>(channels.size()), ts_window, t_star, n,
                              eps_scale);
}

InjectivityReport injectivity_check(const std::vector<std::vector<PhasePoint>>& orbits,
                                    double delta) {
    InjectivityReport rep;
    for (std::size_t oi = 0; oi < orbits.size(); ++oi) {
        int count = 0;
        for (std::size_t pi = 0; pi < orbits[oi].size(); ++pi) {
            double nearest = 1e300;
            for (std::size_t oj = 0; oj < orbits.size(); ++oj)
                for (std::size_t pj = 0; pj < orbits[oj].size(); ++pj) {
                    if (oi == oj && pi == pj) continue;
                    nearest =
                        std::min(nearest, s_distance(orbits[oi][pi].s, orbits[oj][pj].s));
                }
            InjectivityVerdict v;
            v.orbit = oi;
            v.index = pi;
            v.nearest_foreign = nearest;
            v.injective = nearest > delta;
            if (v.injective) ++count;
            rep.points.push_back(v);
        }
        rep.orbit_pass.push_back(count >= 3);
    }
    return rep;
}

// --------------------------------------------------------- lambda scaling

TangencyLiftReport tangency_lift_scaling(const SaddleMap& base,
                                         const std::function<SaddleMap(double)>& family,
                                         double tau, double t_ref, int iterates, bool outward,
                                         double strip_halfwidth) {
    TangencyLiftReport rep;
    rep.lambda = base.lambda;
    rep.tau = tau;
    int sign = t_ref >= 0 ? 1 : -1;
    ManifoldArc wu0 = local_manifold(base, true, sign, 8, 1e-12);
    SaddleMap pert = family(tau);
    ManifoldArc wu1 = local_manifold(pert, true, sign, 8, 1e-12);

    double ta = std::abs(t_ref);
    if (ta == 0.0) ta = 0.9 * std::min(wu0.seed_radius, wu1.seed_radius);
    for (int k = 0; k <= iterates; ++k) {
        double t = sign * (outward ? ta * std::pow(base.lambda, k)
                                   : ta / std::pow(base.lambda, k));
        PhasePoint r = eval_manifold(base, wu0, t);
        if (strip_halfwidth > 0 && s_distance(r.s, base.fixed_point.s) < strip_halfwidth)
            throw ManifoldError(ManifoldError::Code::strip_entered,
                                "reference images enter the perturbation strip");
        double lo = sign > 0 ? 0.2 * std::abs(t) : -3 * std::abs(t);
        double hi = sign > 0 ? 3 * std::abs(t) : -0.2 * std::abs(t);
        FootResult f = signed_distance_to_arc(pert, wu1, r, t, lo, hi);
        rep.displacements.push_back(std::abs(f.distance));
    }
    rep.k0_displacement = rep.displacements[0];
    std::vector<double> xs, ys;
    for (int k = 0; k <= iterates; ++k) {
        if (rep.displacements[k] <= 0) continue;
        xs.push_back(k);
        ys.push_back(std::log(rep.displacements[k]));
    }
    std::vector<double> line = polyfit(xs, ys, 1);
    rep.fitted_slope = line[1];
    rep.slope_rel_error =
        std::abs(rep.fitted_slope + std::log(base.lambda)) / std::abs(std::log(base.lambda));
    return rep;
}

TangencyLiftReport verify_tangency_lift(const Domain& domain, const PeriodicOrbit& orbit,
                                        double t_ref, int iterates, double tau, double sigma) {
    SaddleMap base = billiard_saddle_map(domain, orbit);
    const Domain* dom = &domain;
    PeriodicOrbit o = orbit;
    auto family = [dom, o, sigma](double t) -> SaddleMap {
        if (t == 0.0) return billiard_saddle_map(*dom, o);
        // angle-change perturbation: curvature bump of size t in a strip
        // around the base impact; the orbit itself stays fixed
        std::vector<double> exclusion;
        for (const auto& p : o.points) exclusion.push_back(p.s);
        BumpPatch patch = make_bump(*dom, o.points[0].s, {t}, sigma, exclusion);
        RadiusProfile prof = dom->profile();
        prof.bumps.push_back(patch);
        auto dptr = std::make_shared<Domain>(prof);
        PeriodicOrbit op = refine_newton(*dptr, o, true, 1e-12);
        SaddleMap m;
        int q = op.q;
        m.forward = [dptr, q](const PhasePoint& p) { return iterate(*dptr, p, q); };
        m.backward = [dptr, q](const PhasePoint& p) { return iterate(*dptr, p, -q); };
        m.jet_at = [dptr, q](const PhasePoint& p, int order) {
            return iterate_jet(*dptr, p, q, order);
        };
        m.fixed_point = op.points[0];
        EigenData e = classify(op, *dptr);
        m.lambda = e.lambda;
        return m;
    };
    // At desk scale the outward transport window is contaminated by lobe
    // re-entries into the strip, so the certified measurement is the inward
    // decay of the seed rotation within the linear region of both arcs.
    return tangency_lift_scaling(base, family, tau, t_ref, iterates, /*outward=*/false, 0.0);
}

}  // namespace bjl
