#ifndef BJL_LINALG_HPP
#define BJL_LINALG_HPP

#include <cstddef>
#include <vector>

namespace bjl {

// Row-major dense matrix, just big enough for the small systems here
// (Newton on periodic orbits, M-matrices, bump bases).
class Matrix {
  public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : r_(rows), c_(cols), a_(rows * cols, fill) {}

    std::size_t rows() const { return r_; }
    std::size_t cols() const { return c_; }
    double& operator()(std::size_t i, std::size_t j) { return a_[i * c_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a_[i * c_ + j]; }

  private:
    std::size_t r_ = 0, c_ = 0;
    std::vector<double> a_;
};

// LU with partial pivoting. Throws on (numerically) singular input unless
// noted. reciprocal condition estimate is the crude min|pivot|/max|pivot|.
struct LuResult {
    bool singular = false;
    double det = 0.0;
    double rcond = 0.0;
};

LuResult lu_factor(Matrix& a, std::vector<int>& piv);
double lu_det(Matrix a);
std::vector<double> lu_solve(Matrix a, std::vector<double> b);
bool lu_solve_checked(Matrix a, std::vector<double> b, std::vector<double>& x,
                      double rcond_floor = 1e-13);

// Least squares / minimum-norm solve of A x = b via column-pivoted
// normal-equation solve with Tikhonov fallback; fine for the small,
// equilibrated systems used here.
std::vector<double> least_squares(const Matrix& a, const std::vector<double>& b);
std::vector<double> min_norm_solve(const Matrix& a, const std::vector<double>& b);

std::vector<double> mat_vec(const Matrix& a, const std::vector<double>& x);

}  // namespace bjl

#endif
