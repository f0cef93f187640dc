#include "bjl/linalg.hpp"

#include <cmath>
#include <stdexcept>

namespace bjl {

LuResult lu_factor(Matrix& a, std::vector<int>& piv) {
    std::size_t n = a.rows();
    if (n != a.cols()) throw std::runtime_error("lu_factor: square matrix required");
    piv.resize(n);
    LuResult res;
    res.det = 1.0;
    double maxp = 0.0, minp = 1e300;
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t p = k;
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::abs(a(i, k)) > std::abs(a(p, k))) p = i;
        piv[k] = static_cast<int>(p);
        if (p != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(a(k, j), a(p, j));
            res.det = -res.det;
        }
        double pivot = a(k, k);
        maxp = std::max(maxp, std::abs(pivot));
        minp = std::min(minp, std::abs(pivot));
        res.det *= pivot;
        if (pivot == 0.0) {
            res.singular = true;
            res.rcond = 0.0;
            return res;
        }
        for (std::size_t i = k + 1; i < n; ++i) {
            a(i, k) /= pivot;
            double f = a(i, k);
            if (f != 0.0)
                for (std::size_t j = k + 1; j < n; ++j) a(i, j) -= f * a(k, j);
        }
    }
    res.rcond = (maxp > 0) ? minp / maxp : 0.0;
    return res;
}

double lu_det(Matrix a) {
    std::vector<int> piv;
    LuResult r = lu_factor(a, piv);
    return r.singular ? 0.0 : r.det;
}

static std::vector<double> lu_back_substitute(const Matrix& a, const std::vector<int>& piv,
                                              std::vector<double> b) {
    std::size_t n = a.rows();
    // rows were swapped in full during factorization: permute first, then solve
    for (std::size_t k = 0; k < n; ++k) std::swap(b[k], b[static_cast<std::size_t>(piv[k])]);
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = k + 1; i < n; ++i) b[i] -= a(i, k) * b[k];
    for (std::size_t i = n; i-- > 0;) {
        for (std::size_t j = i + 1; j < n; ++j) b[i] -= a(i, j) * b[j];
        b[i] /= a(i, i);
    }
    return b;
}

std::vector<double> lu_solve(Matrix a, std::vector<double> b) {
    std::vector<int> piv;
    LuResult r = lu_factor(a, piv);
    if (r.singular) throw std::runtime_error("lu_solve: singular matrix");
    return lu_back_substitute(a, piv, std::move(b));
}

bool lu_solve_checked(Matrix a, std::vector<double> b, std::vector<double>& x,
                      double rcond_floor) {
    std::vector<int> piv;
    LuResult r = lu_factor(a, piv);
    if (r.singular || r.rcond < rcond_floor) return false;
    x = lu_back_substitute(a, piv, std::move(b));
    return true;
}

std::vector<double> mat_vec(const Matrix& a, const std::vector<double>& x) {
    std::vector<double> y(a.rows(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) y[i] += a(i, j) * x[j];
    return y;
}

namespace {

// in-place Householder QR; returns the reflectors in the lower part of a and
// the diagonal of R separately
void householder_qr(Matrix& a, std::vector<double>& rdiag) {
    std::size_t m = a.rows(), n = a.cols();
    rdiag.assign(n, 0.0);
    for (std::size_t k = 0; k < n && k < m; ++k) {
        double nrm = 0;
        for (std::size_t i = k; i < m; ++i) nrm = std::hypot(nrm, a(i, k));
        if (nrm == 0.0) {
            rdiag[k] = 0.0;
            continue;
        }
        if (a(k, k) < 0) nrm = -nrm;
        for (std::size_t i = k; i < m; ++i) a(i, k) /= nrm;
        a(k, k) += 1.0;
        for (std::size_t j = k + 1; j < n; ++j) {
            double s = 0;
            for (std::size_t i = k; i < m; ++i) s += a(i, k) * a(i, j);
            s = -s / a(k, k);
            for (std::size_t i = k; i < m; ++i) a(i, j) += s * a(i, k);
        }
        rdiag[k] = -nrm;
    }
}

// apply Q^T (stored reflectors) to vector
void apply_qt(const Matrix& qr, std::vector<double>& v) {
    std::size_t m = qr.rows(), n = qr.cols();
    for (std::size_t k = 0; k < n && k < m; ++k) {
        if (qr(k, k) == 0.0) continue;
        double s = 0;
        for (std::size_t i = k; i < m; ++i) s += qr(i, k) * v[i];
        s = -s / qr(k, k);
        for (std::size_t i = k; i < m; ++i) v[i] += s * qr(i, k);
    }
}

// apply Q to vector (reflectors in reverse order)
void apply_q(const Matrix& qr, std::vector<double>& v) {
    std::size_t m = qr.rows(), n = qr.cols();
    std::size_t kmax = std::min(m, n);
    for (std::size_t k = kmax; k-- > 0;) {
        if (qr(k, k) == 0.0) continue;
        double s = 0;
        for (std::size_t i = k; i < m; ++i) s += qr(i, k) * v[i];
        s = -s / qr(k, k);
        for (std::size_t i = k; i < m; ++i) v[i] += s * qr(i, k);
    }
}

}  // namespace

std::vector<double> least_squares(const Matrix& a, const std::vector<double>& b) {
    std::size_t m = a.rows(), n = a.cols();
    Matrix qr = a;
    std::vector<double> rdiag;
    householder_qr(qr, rdiag);
    std::vector<double> v = b;
    apply_qt(qr, v);
    std::vector<double> x(n, 0.0);
    for (std::size_t i = std::min(m, n); i-- > 0;) {
        double s = v[i];
        for (std::size_t j = i + 1; j < n; ++j) s -= qr(i, j) * x[j];
        if (rdiag[i] == 0.0) throw std::runtime_error("least_squares: rank deficient");
        x[i] = s / rdiag[i];
    }
    return x;
}

std::vector<double> min_norm_solve(const Matrix& a, const std::vector<double>& b) {
    // QR of A^T: A = R^T Q^T, solve R^T y = b forward, then x = Q y.
    std::size_t m = a.rows(), n = a.cols();
    Matrix at(n, m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) at(j, i) = a(i, j);
    std::vector<double> rdiag;
    householder_qr(at, rdiag);
    std::vector<double> y(n, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        double s = b[i];
        for (std::size_t j = 0; j < i; ++j) s -= at(j, i) * y[j];
        if (rdiag[i] == 0.0) throw std::runtime_error("min_norm_solve: rank deficient");
        y[i] = s / rdiag[i];
    }
    apply_q(at, y);
    return y;
}

}  // namespace bjl
