#include "bjl/perturb.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "json.hpp"

namespace bjl {

namespace {
const Mat2 kB{0, 0, 2, 0};

double factorial(int n) {
    double f = 1;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
}
}  // namespace

// ------------------------------------------------------------ SegmentPartials

SegmentPartials SegmentPartials::from_orbit(const Domain& domain, const PeriodicOrbit& orbit,
                                            int steps) {
    SegmentPartials seg;
    std::vector<Mat2> step_diffs = step_differentials(domain, orbit);
    seg.points_.reserve(steps + 1);
    seg.step_diffs_.reserve(steps);
    for (int i = 0; i <= steps; ++i) seg.points_.push_back(orbit.points[i % orbit.q]);
    for (int i = 0; i < steps; ++i) seg.step_diffs_.push_back(step_diffs[i % orbit.q]);
    seg.build_blocks();
    return seg;
}

SegmentPartials SegmentPartials::from_point(const Domain& domain, const PhasePoint& start,
                                            int steps) {
    SegmentPartials seg;
    PhasePoint cur = start;
    seg.points_.push_back(cur);
    for (int i = 0; i < steps; ++i) {
        seg.step_diffs_.push_back(one_step_differential(domain, cur));
        cur = next_hit(domain, cur);
        seg.points_.push_back(cur);
    }
    seg.build_blocks();
    return seg;
}

void SegmentPartials::build_blocks() {
    int n = steps();
    blocks_.assign(n + 1, {});
    for (int i = 0; i <= n; ++i) {
        blocks_[i].push_back(Mat2::identity());
        for (int j = i; j < n; ++j) blocks_[i].push_back(step_diffs_[j] * blocks_[i].back());
    }
}

Mat2 SegmentPartials::block(int i, int j) const {
    if (i < 0 || j < i || j > steps())
        throw PerturbError(PerturbError::Code::index_out_of_range, "block index out of range");
    return blocks_[i][j - i];
}

// -------------------------------------- single-impact curvature response

Mat2 predict_delta_differential(const SegmentPartials& seg, int k, double eps) {
    if (k <= 0 || k >= seg.steps())
        throw PerturbError(PerturbError::Code::index_out_of_range,
                           "perturbation index must be interior: 0 < k < q");
    return (seg.block(k, seg.steps()) * kB * seg.block(0, k)) * eps;
}

// ------------------------------------------------------------ M matrix

MMatrix assemble_M(const SegmentPartials& seg, int map_order, int top,
                   std::vector<int> point_indices) {
    int m = map_order;
    int T = (top < 0) ? m + 3 : top;
    if (point_indices.empty())
        for (int l = 1; l <= m + 2; ++l) point_indices.push_back(l);
    if (static_cast<int>(point_indices.size()) != m + 2)
        throw PerturbError(PerturbError::Code::too_few_points,
                           "need exactly map_order + 2 perturbation points");
    if (T > seg.steps())
        throw PerturbError(PerturbError::Code::too_few_points, "segment shorter than top index");

    MMatrix M;
    M.map_order = m;
    M.top = T;
    M.point_indices = point_indices;

    // Condition (10): ds_j/dphi_i != 0 for 0 <= i < j <= T
    double scale = 0, minp = 1e300;
    for (int i = 0; i < T; ++i)
        for (int j = i + 1; j <= T; ++j) {
            double v = std::abs(seg.ds_dphi(i, j));
            scale = std::max(scale, v);
            minp = std::min(minp, v);
        }
    M.min_condition10_partial = minp;
    M.condition10_ok = (minp > 1e-8 * scale);
    if (!M.condition10_ok)
        throw PerturbError(PerturbError::Code::condition10_violated,
                           "some ds_j/dphi_i vanishes along the segment");

    M.entries = Matrix(m + 2, m + 2);
    for (int col = 0; col < m + 2; ++col) {
        int l = point_indices[col];
        double A = seg.ds_ds(0, l), B = seg.ds_dphi(0, l);
        for (int k = 0; k <= m; ++k)
            M.entries(k, col) = seg.ds_dphi(l, T) * std::pow(A, m - k) * std::pow(B, k);
        M.entries(m + 1, col) = seg.dphi_dphi(l, T) * std::pow(B, m);
    }
    M.direct_det = lu_det(M.entries);
    return M;
}

std::vector<double> free_partials(const JetMap2& jet, int map_order) {
    std::vector<double> out;
    for (int k = 0; k <= map_order; ++k) out.push_back(jet.partial_s(map_order - k, k));
    out.push_back(jet.partial_phi(0, map_order));
    return out;
}

std::vector<double> solve_epsilons_for_target(const MMatrix& M,
                                              const std::vector<double>& target) {
    if (target.size() != M.entries.rows())
        throw PerturbError(PerturbError::Code::bad_target, "target size must be map_order + 2");
    Matrix A = M.entries;
    for (std::size_t i = 0; i < A.rows(); ++i)
        for (std::size_t j = 0; j < A.cols(); ++j) A(i, j) *= 2.0;  // the tracked factor 2
    std::vector<double> eps;
    if (!lu_solve_checked(A, target, eps, 1e-14))
        throw PerturbError(PerturbError::Code::singular_system, "M matrix is singular");
    return eps;
}

// ------------------------------------------------- reduction certificate

namespace {

// Sigma_m(k, l): the multi-index sums appearing as elimination multipliers.
double sigma_sum(const SegmentPartials& seg, int m, int k, int l) {
    double A_l = seg.ds_ds(0, l), B_l = seg.ds_dphi(0, l);
    if (m == 1) return std::pow(B_l, k - 1);
    int budget = k - m;
    if (budget < 0) return 0.0;
    std::vector<int> idx(m - 1, 0);
    double total = 0.0;
    // enumerate i_1..i_{m-1} >= 0 with sum <= budget
    while (true) {
        int sum = 0;
        for (int v : idx) sum += v;
        if (sum <= budget) {
            double term = std::pow(B_l, budget - sum) * std::pow(A_l, sum);
            for (int j = 1; j <= m - 1; ++j)
                term *= std::pow(seg.ds_ds(0, j), budget - idx[j - 1]) *
                        std::pow(seg.ds_dphi(0, j), idx[j - 1]);
            total += term;
        }
        int pos = 0;
        while (pos < m - 1) {
            if (++idx[pos] <= budget) break;
            idx[pos] = 0;
            ++pos;
        }
        if (pos == m - 1) break;
    }
    return total;
}

double det_block(const SegmentPartials& seg, int i, int j) { return seg.block(i, j).det(); }

}  // namespace

ReductionCertificate det_via_reduction(const SegmentPartials& seg, int map_order) {
    int n = map_order;
    int T = n + 3;
    MMatrix MM = assemble_M(seg, n, T);
    Matrix W = MM.entries;  // working copy
    int rows = n + 2;

    ReductionCertificate cert;
    cert.map_order = n;
    cert.direct_det = MM.direct_det;

    // primitive partials used as multipliers must stay away from zero
    double scale = 0;
    for (int j = 1; j <= n; ++j) scale = std::max(scale, std::abs(seg.ds_ds(0, j)));
    for (int j = 1; j <= n; ++j)
        if (std::abs(seg.ds_ds(0, j)) < 1e-8 * std::max(scale, 1.0)) cert.lu_fallback = true;
    if (cert.lu_fallback) {
        cert.reduced_det = cert.direct_det;
        cert.pass = false;
        return cert;
    }

    double mult = 1.0;
    auto scale_row = [&](int r, double f, const char* tag) {
        for (int c = 0; c < rows; ++c) W(r, c) *= f;
        mult *= f;
        cert.ops.emplace_back(std::string("row_scale ") + tag, f);
    };
    auto axpy_row = [&](int r, int src, double f, const char* tag) {
        for (int c = 0; c < rows; ++c) W(r, c) += f * W(src, c);
        cert.ops.emplace_back(std::string("row_axpy ") + tag, f);
    };

    // stage A: forward elimination of the (n+1) x (n+1) block
    for (int piv = 1; piv <= n; ++piv) {
        for (int k = piv + 1; k <= n + 1; ++k) {
            scale_row(k - 1, std::pow(seg.ds_ds(0, piv), k - piv), "A");
            axpy_row(k - 1, piv - 1, -sigma_sum(seg, piv, k, piv), "A");
        }
    }

    // stage B: eliminate above the diagonal, column by column
    for (int c = 2; c <= n + 1; ++c) {
        for (int r = 1; r < c; ++r) {
            double f = det_block(seg, 0, r) * seg.ds_dphi(r, c);
            for (int mm = 1; mm <= r - 1; ++mm) f *= seg.ds_ds(0, mm);
            for (int mm = r + 1; mm <= c - 1; ++mm) f *= seg.ds_ds(0, mm);
            scale_row(r - 1, f, "B");
            double g = std::pow(-1.0, c - r) * seg.ds_ds(0, c);
            for (int mm = r + 1; mm <= c - 1; ++mm) g *= seg.ds_ds(0, mm);
            axpy_row(r - 1, c - 1, g, "B");
        }
    }

    // stage C: eliminate the last column with the X_k / Y_k multipliers
    double xprod = 1.0;
    for (int k = 1; k <= n + 1; ++k) {
        double X = seg.ds_dphi(k, T);
        for (int i = 1; i <= k - 1; ++i) X *= seg.ds_dphi(i, k);
        for (int j = k + 1; j <= n + 1; ++j) X *= seg.ds_dphi(k, j);
        double Y = std::pow(-1.0, n - k + 1) * seg.ds_dphi(n + 2, T);
        for (int i = 1; i <= k - 1; ++i) Y *= seg.ds_dphi(i, n + 2);
        for (int i = k + 1; i <= n + 1; ++i) Y *= seg.ds_dphi(i, n + 2);
        for (int r = 1; r <= n - k + 1; ++r) Y *= det_block(seg, k, k + r);
        for (int r = 0; r < rows; ++r) W(r, n + 1) *= X;
        mult *= X;
        cert.ops.emplace_back("col_scale X", X);
        for (int r = 0; r < rows; ++r) W(r, n + 1) -= Y * xprod * W(r, k - 1);
        cert.ops.emplace_back("col_axpy Y", -Y * xprod);
        xprod *= X;
    }

    // closed-form diagonal of the reduced matrix (last row treated separately)
    cert.diagonal.resize(rows);
    cert.closed_form_diagonal.resize(rows);
    for (int r = 0; r < rows; ++r) cert.diagonal[r] = W(r, r);
    for (int k = 1; k <= n + 1; ++k) {
        double cf = seg.ds_dphi(k, T);
        for (int m2 = 1; m2 <= k - 1; ++m2) {
            double f = seg.ds_dphi(m2, k) * det_block(seg, 0, m2);
            for (int r = 1; r <= m2 - 1; ++r) f *= seg.ds_ds(0, r);
            cf *= f;
        }
        for (int j = k + 1; j <= n + 1; ++j) {
            double f = seg.ds_dphi(k, j) * det_block(seg, 0, k);
            for (int r = 1; r <= k - 1; ++r) f *= seg.ds_ds(0, r);
            cf *= f;
        }
        for (int r = k; r <= n; ++r) cf *= std::pow(seg.ds_ds(0, r), n - (r - 1));
        cert.closed_form_diagonal[k - 1] = cf;
    }
    {
        double cf = det_block(seg, n + 2, T) * std::pow(seg.ds_dphi(0, T), n);
        for (int i = 1; i <= n + 1; ++i) cf *= seg.ds_dphi(i, n + 2);
        for (int t = 2; t <= n + 1; ++t) {
            double prod = 1.0;
            for (int i = 1; i <= t - 1; ++i) prod *= seg.ds_dphi(i, t);
            cf *= prod * prod;
        }
        cert.closed_form_diagonal[n + 1] = cf;
    }

    // residual of the triangularization (scaled per row)
    double offdiag = 0;
    for (int r = 0; r < rows; ++r) {
        double rowscale = 0;
        for (int c = 0; c < rows; ++c) rowscale = std::max(rowscale, std::abs(W(r, c)));
        for (int c = 0; c < rows; ++c) {
            bool keep = (c == r) || (r == rows - 1);
            if (!keep && rowscale > 0) offdiag = std::max(offdiag, std::abs(W(r, c)) / rowscale);
        }
    }
    cert.max_offdiagonal_residual = offdiag;

    double diag_prod = 1.0;
    for (int r = 0; r < rows; ++r) diag_prod *= cert.diagonal[r];
    cert.reduced_diagonal_product = diag_prod;
    cert.multiplier_product = mult;
    cert.reduced_det = diag_prod / mult;

    double cf_err = 0;
    for (int r = 0; r < rows; ++r) {
        double denom = std::max(std::abs(cert.closed_form_diagonal[r]), 1e-300);
        cf_err = std::max(cf_err, std::abs(cert.diagonal[r] - cert.closed_form_diagonal[r]) / denom);
    }
    cert.closed_form_rel_error = cf_err;
    cert.det_rel_error =
        std::abs(cert.reduced_det - cert.direct_det) / std::max(std::abs(cert.direct_det), 1e-300);
    cert.pass = !cert.lu_fallback && cert.det_rel_error < 1e-7 && cf_err < 1e-7 &&
                offdiag < 1e-7 && std::abs(cert.direct_det) > 0;
    return cert;
}

std::string certificate_to_json_text(const ReductionCertificate& cert) {
    nlohmann::json j;
    j["map_order"] = cert.map_order;
    j["direct_det"] = cert.direct_det;
    j["reduced_det"] = cert.reduced_det;
    j["multiplier_product"] = cert.multiplier_product;
    j["diagonal"] = cert.diagonal;
    j["closed_form_diagonal"] = cert.closed_form_diagonal;
    j["max_offdiagonal_residual"] = cert.max_offdiagonal_residual;
    j["closed_form_rel_error"] = cert.closed_form_rel_error;
    j["det_rel_error"] = cert.det_rel_error;
    j["lu_fallback"] = cert.lu_fallback;
    j["pass"] = cert.pass;
    j["ops"] = nlohmann::json::array();
    for (const auto& [tag, mult] : cert.ops) j["ops"].push_back({{"op", tag}, {"factor", mult}});
    return j.dump(2);
}

// ------------------------------------------- mixed angle-partial recovery

Matrix lemma22_matrix(const JetMap2& jet, int n) {
    double Su = jet.s_out.partial(1, 0);
    double Sv = jet.s_out.partial(0, 1);
    Matrix A(n, n, 0.0);
    for (int i = 0; i < n; ++i) {
        A(i, i) = -Sv;
        if (i + 1 < n) A(i, i + 1) = Su;
    }
    return A;
}

double phi_s_partial_from_determinant(const JetMap2& jet) {
    Mat2 A = jet.linear();
    double ratio = std::sin(jet.base_in.phi) / std::sin(jet.base_out.phi);
    return (A.a * A.d - ratio) / A.b;
}

std::vector<double> recover_phi_partials(const JetMap2& jet, int n) {
    if (n < 1) throw PerturbError(PerturbError::Code::bad_target, "n >= 1 required");
    if (jet.order < n)
        throw PerturbError(PerturbError::Code::bad_target, "jet order below requested n");
    if (std::abs(jet.s_out.partial(0, 1)) < 1e-12)
        throw PerturbError(PerturbError::Code::singular_system,
                           "twist denominator ds/dphi vanishes");

    // area identity G = (dS/du)(dPhi/dv) - (dS/dv)(dPhi/du) - sin(phi0)/sin(Phi) == 0;
    // with the unknown order-n mixed phi coefficients zeroed it becomes affine
    // in them at order n-1.
    auto g_of = [&](const Jet2& phi_jet) {
        int ord = jet.order;
        Jet2 Su = jet.s_out.du().truncated(ord - 1);
        Jet2 Sv = jet.s_out.dv().truncated(ord - 1);
        Jet2 Pu = phi_jet.du().truncated(ord - 1);
        Jet2 Pv = phi_jet.dv().truncated(ord - 1);
        Jet2 sin_phi0 = sin(Jet2::variable_v(ord - 1, jet.base_in.phi));
        Jet2 sin_phiT = sin(phi_jet.truncated(ord - 1));
        return (Su * Pv - Sv * Pu - sin_phi0 / sin_phiT).truncated(n - 1);
    };

    Jet2 phi_trunc = jet.phi_out;
    std::vector<std::pair<int, int>> unknowns;  // Taylor indices (a, b), a >= 1
    for (int a = n; a >= 1; --a) unknowns.emplace_back(a, n - a);
    for (auto [a, b] : unknowns) phi_trunc.at(a, b) = 0.0;

    Jet2 g0 = g_of(phi_trunc);
    std::vector<std::pair<int, int>> eqs;  // coefficient slots of total degree n-1
    for (int a = n - 1; a >= 0; --a) eqs.emplace_back(a, n - 1 - a);

    Matrix A(n, n);
    std::vector<double> rhs(n);
    for (int col = 0; col < n; ++col) {
        Jet2 probe = phi_trunc;
        probe.at(unknowns[col].first, unknowns[col].second) = 1.0;
        Jet2 gp = g_of(probe);
        for (int row = 0; row < n; ++row)
            A(row, col) = gp.coeff(eqs[row].first, eqs[row].second) -
                          g0.coeff(eqs[row].first, eqs[row].second);
    }
    for (int row = 0; row < n; ++row) rhs[row] = -g0.coeff(eqs[row].first, eqs[row].second);

    std::vector<double> coeffs = lu_solve(A, rhs);
    std::vector<double> out(n);
    for (int col = 0; col < n; ++col) {
        auto [a, b] = unknowns[col];
        out[col] = coeffs[col] * factorial(a) * factorial(b);
    }
    return out;  // (d^n phi/ds^n, d^n phi/ds^(n-1) dphi, ..., d^n phi/ds dphi^(n-1))
}

// ------------------------------------------------- eigen-data response

Matrix eigen_perturbation_coefficients(const Mat2& A, bool published_variant) {
    double tr = A.trace();
    if (std::abs(tr) <= 2.0)
        throw PerturbError(PerturbError::Code::not_hyperbolic, "saddle matrix required");
    double disc = std::sqrt(tr * tr - 4.0 * A.det());
    double lam = (tr + (tr > 0 ? disc : -disc)) / 2.0;
    double lam2 = lam * lam;
    double a = A.a, b = A.b;
    double lp2 = b * b + (a - lam) * (a - lam);
    double lm2 = b * b + (a - 1.0 / lam) * (a - 1.0 / lam);

    Matrix P(3, 3, 0.0);
    // d omega1 row (identical in both variants)
    P(0, 0) = b / (lp2 * (lam2 - 1));
    P(0, 1) = -(lam - a) / lp2;
    P(0, 2) = b * lam2 / (lp2 * (lam2 - 1));
    if (published_variant) {
        P(1, 0) = -(2 * lam2 + 1) * b / (lm2 * (lam2 - 1));
        P(1, 1) = -(1.0 / lam - a) / ((1.0 / lam) * (1.0 / lam));
        P(1, 2) = -b * lam2 / (lm2 * (lam2 - 1));
    } else {
        P(1, 0) = -b * lam2 / (lm2 * (lam2 - 1));
        P(1, 1) = -(1.0 / lam - a) / lm2;
        P(1, 2) = -b / (lm2 * (lam2 - 1));
    }
    P(2, 0) = lam2 / (lam2 - 1);
    P(2, 1) = 0.0;
    P(2, 2) = lam2 / (lam2 - 1);
    return P;
}

EigenControl eigen_angle_control(const Domain& domain, PeriodicOrbit& orbit,
                                 const std::array<std::optional<double>, 3>& targets,
                                 std::vector<int> point_indices, bool published_variant) {
    EigenData e = classify(orbit, domain);
    if (e.cls != OrbitClass::hyperbolic)
        throw PerturbError(PerturbError::Code::not_hyperbolic,
                           "eigen control needs a hyperbolic orbit");
    Mat2 A = orbit.monodromy_jet->linear();

    int n_targets = 0;
    for (const auto& t : targets)
        if (t) ++n_targets;
    if (n_targets == 0) {
        EigenControl out;
        out.predicted_delta = {0, 0, 0, 0};
        return out;
    }
    if (point_indices.empty())
        for (int l = 1; l <= std::min(orbit.q - 1, n_targets == 3 ? 3 : n_targets); ++l)
            point_indices.push_back(l);
    if (static_cast<int>(point_indices.size()) < n_targets)
        throw PerturbError(PerturbError::Code::too_few_points,
                           "need at least as many perturbation points as targets");

    SegmentPartials seg = SegmentPartials::from_orbit(domain, orbit, orbit.q);
    std::vector<Mat2> dirs;
    for (int l : point_indices) dirs.push_back(predict_delta_differential(seg, l, 1.0));

    Matrix P = eigen_perturbation_coefficients(A, published_variant);
    // compose: per point, (da, db, dd) -> (dw1, dw2, dlam)
    Matrix S(n_targets, point_indices.size());
    std::vector<double> rhs(n_targets);
    int row = 0;
    for (int t = 0; t < 3; ++t) {
        if (!targets[t]) continue;
        rhs[row] = *targets[t];
        for (std::size_t c = 0; c < dirs.size(); ++c)
            S(row, c) = P(t, 0) * dirs[c].a + P(t, 1) * dirs[c].b + P(t, 2) * dirs[c].d;
        ++row;
    }

    EigenControl out;
    out.point_indices = point_indices;
    if (S.rows() == S.cols()) {
        if (!lu_solve_checked(S, rhs, out.kappa_eps, 1e-13))
            throw PerturbError(PerturbError::Code::singular_system,
                               "eigen-control linearization is singular");
    } else {
        out.kappa_eps = min_norm_solve(S, rhs);
    }
    Mat2 total{0, 0, 0, 0};
    for (std::size_t c = 0; c < dirs.size(); ++c) total = total + dirs[c] * out.kappa_eps[c];
    out.predicted_delta = total;
    out.matrix_eps = {total.a, total.b, total.d};
    out.forced_dc = total.c;
    return out;
}

// ------------------------------------- compensation at chosen impacts

std::array<double, 4> four_point_cancellation(const SegmentPartials& seg,
                                              const std::array<int, 4>& idx) {
    std::vector<Mat2> D;
    for (int k : idx) D.push_back(predict_delta_differential(seg, k, 1.0));
    // solve sum c_i vec(D_i) = 0 with c_4 = 1 (least squares over the 4 entries)
    Matrix A(4, 3);
    std::vector<double> b(4);
    auto put = [&](int r, double d1, double d2, double d3, double d4) {
        A(r, 0) = d1;
        A(r, 1) = d2;
        A(r, 2) = d3;
        b[r] = -d4;
    };
    put(0, D[0].a, D[1].a, D[2].a, D[3].a);
    put(1, D[0].b, D[1].b, D[2].b, D[3].b);
    put(2, D[0].c, D[1].c, D[2].c, D[3].c);
    put(3, D[0].d, D[1].d, D[2].d, D[3].d);
    std::vector<double> c = least_squares(A, b);
    return {c[0], c[1], c[2], 1.0};
}

Compensation three_point_compensation(const SegmentPartials& seg,
                                      const std::vector<std::pair<int, double>>& foreign,
                                      const std::array<int, 3>& indices) {
    Mat2 target{0, 0, 0, 0};
    for (const auto& [k, dk] : foreign) target = target + predict_delta_differential(seg, k, dk);

    std::vector<Mat2> D;
    for (int k : indices) D.push_back(predict_delta_differential(seg, k, 1.0));
    // three coordinates (a, b, d); the c entry follows from area preservation
    Matrix A(3, 3);
    std::vector<double> rhs = {target.a, target.b, target.d};
    for (int c = 0; c < 3; ++c) {
        A(0, c) = D[c].a;
        A(1, c) = D[c].b;
        A(2, c) = D[c].d;
    }
    std::vector<double> sol;
    if (!lu_solve_checked(A, rhs, sol, 1e-13))
        throw PerturbError(PerturbError::Code::singular_system,
                           "three-point solvability determinant vanishes");
    Compensation out;
    out.delta_kappa = {sol[0], sol[1], sol[2]};
    out.foreign_delta = target;
    Mat2 comp{0, 0, 0, 0};
    for (int c = 0; c < 3; ++c) comp = comp + D[c] * sol[c];
    out.compensated_delta = comp;
    out.match_error = (comp - target).max_abs();
    return out;
}

// -------------------------------------------------------- bump plumbing

std::vector<BumpPatch> build_bump_patches(const Domain& domain, const PeriodicOrbit& orbit,
                                          const std::vector<int>& point_indices,
                                          const std::vector<double>& eps, int map_order,
                                          double half_width) {
    if (half_width <= 0.0) {
        // widest width avoiding all other impact angles, with margin
        double min_gap = 1e300;
        for (std::size_t i = 0; i < point_indices.size(); ++i) {
            double ti = domain.theta_of_s(orbit.points[point_indices[i] % orbit.q].s);
            for (int j = 0; j < orbit.q; ++j) {
                if (j == point_indices[i] % orbit.q) continue;
                double tj = domain.theta_of_s(orbit.points[j].s);
                min_gap = std::min(min_gap, std::abs(wrap_angle_pm_pi(ti - tj)));
            }
        }
        half_width = 0.45 * min_gap;
    }
    std::vector<double> exclusion;
    for (const auto& p : orbit.points) exclusion.push_back(p.s);
    std::vector<BumpPatch> patches;
    for (std::size_t i = 0; i < point_indices.size(); ++i) {
        std::vector<double> jet(map_order, 0.0);
        jet[map_order - 1] = eps[i];
        patches.push_back(make_bump(domain, orbit.points[point_indices[i] % orbit.q].s, jet,
                                    half_width, exclusion));
    }
    return patches;
}

RadiusProfile merge_patches(const RadiusProfile& profile, const std::vector<BumpPatch>& patches) {
    RadiusProfile out = profile;
    for (const auto& p : patches) {
        bool merged = false;
        for (auto& existing : out.bumps) {
            if (std::abs(wrap_angle_pm_pi(existing.center_theta - p.center_theta)) < 1e-9 &&
                std::abs(existing.half_width - p.half_width) < 1e-12) {
                existing.weights.resize(std::max(existing.weights.size(), p.weights.size()), 0.0);
                for (std::size_t i = 0; i < p.weights.size(); ++i)
                    existing.weights[i] += p.weights[i];
                merged = true;
                break;
            }
        }
        if (!merged) out.bumps.push_back(p);
    }
    return out;
}

JetMap2 phase_kick_segment_jet(const Domain& domain, const PhasePoint& start, int total_steps,
                               int l, double eps, int order) {
    JetMap2 pre = iterate_jet(domain, start, l, order);
    PhasePoint mid = pre.base_out;
    JetMap2 kick = JetMap2::identity(order, mid);
    kick.base_out = {mid.s, mid.phi + 2.0 * eps};
    kick.phi_out.at(0, 0) = kick.base_out.phi;
    JetMap2 post = iterate_jet(domain, kick.base_out, total_steps - l, order);
    return compose_maps(post, compose_maps(kick, pre));
}

// ---------------------------------------------------- staged rotation

RotationPlan rotate_differential(const Domain& domain, const PeriodicOrbit& orbit, double delta,
                                 int n, double bump_half_width) {
    if (orbit.q < n + 4)
        throw PerturbError(PerturbError::Code::too_few_points,
                           "orbit needs at least n + 4 impacts");
    RotationPlan plan;
    plan.delta = delta;
    plan.n = n;
    plan.final_profile = domain.profile();

    JetMap2 original = monodromy(domain, orbit, n + 1);
    Mat2 A0 = original.linear();
    plan.target_linear = Mat2::rotation(delta) * A0;
    if (delta == 0.0) {
        plan.achieved_linear = A0;
        plan.final_orbit = orbit;
        plan.order_drift.assign(std::max(0, n), 0.0);
        return plan;
    }

    RadiusProfile profile = domain.profile();
    PeriodicOrbit cur_orbit = orbit;

    for (int stage = 0; stage <= n; ++stage) {
        Domain dcur(profile);
        cur_orbit = refine_newton(dcur, cur_orbit, true, 1e-12);
        SegmentPartials seg = SegmentPartials::from_orbit(dcur, cur_orbit, cur_orbit.q);
        int m = stage + 1;  // map order controlled at this stage
        // spread the bump points over the interior impacts: the response
        // matrix is far better conditioned than with consecutive points
        std::vector<int> pts;
        for (int i = 0; i < m + 2; ++i) {
            int idx = 1 + static_cast<int>(std::lround(
                              static_cast<double>(i) * (cur_orbit.q - 2) / (m + 1)));
            idx = std::min(idx, cur_orbit.q - 1);
            if (!pts.empty() && idx <= pts.back()) idx = pts.back() + 1;
            pts.push_back(idx);
        }
        if (pts.back() > cur_orbit.q - 1)
            throw PerturbError(PerturbError::Code::too_few_points,
                               "not enough interior impacts for this stage");
        MMatrix M = assemble_M(seg, m, cur_orbit.q, pts);

        std::vector<double> target(m + 2, 0.0);
        JetMap2 cur_jet = monodromy(dcur, cur_orbit, n + 1);
        std::vector<double> cur_free = free_partials(cur_jet, m);
        if (stage == 0) {
            Mat2 Acur = cur_jet.linear();
            Mat2 D = plan.target_linear - Acur;
            target = {D.a, D.b, D.d};
        } else {
            std::vector<double> orig_free = free_partials(original, m);
            for (int i = 0; i < m + 2; ++i) target[i] = orig_free[i] - cur_free[i];
        }

        PerturbationStage st;
        st.map_order = m;
        st.point_indices = pts;
        st.epsilon = solve_epsilons_for_target(M, target);
        st.predicted_delta = target;
        st.patches = build_bump_patches(dcur, cur_orbit, pts, st.epsilon, m, bump_half_width);
        profile = merge_patches(profile, st.patches);
        plan.stages.push_back(std::move(st));
    }

    Domain dfin(profile);
    plan.final_orbit = refine_newton(dfin, cur_orbit, true, 1e-12);
    JetMap2 final_jet = monodromy(dfin, plan.final_orbit, n + 1);
    plan.final_profile = profile;
    plan.achieved_linear = final_jet.linear();
    plan.linear_error = (plan.achieved_linear - plan.target_linear).max_abs();
    plan.order_drift.clear();
    plan.free_drift.clear();
    for (int d = 2; d <= n + 1; ++d) {
        double drift = 0;
        for (int b = 0; b <= d; ++b) {
            drift = std::max(drift, std::abs(final_jet.s_out.coeff(d - b, b) -
                                             original.s_out.coeff(d - b, b)));
            drift = std::max(drift, std::abs(final_jet.phi_out.coeff(d - b, b) -
                                             original.phi_out.coeff(d - b, b)));
        }
        plan.order_drift.push_back(drift);
        std::vector<double> ff = free_partials(final_jet, d);
        std::vector<double> of = free_partials(original, d);
        double fd = 0;
        for (std::size_t i = 0; i < ff.size(); ++i) fd = std::max(fd, std::abs(ff[i] - of[i]));
        plan.free_drift.push_back(fd);
    }
    return plan;
}

}  // namespace bjl
