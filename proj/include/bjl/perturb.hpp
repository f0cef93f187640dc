#ifndef BJL_PERTURB_HPP
#define BJL_PERTURB_HPP

#include <array>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bjl/linalg.hpp"
#include "bjl/orbits.hpp"

namespace bjl {

class PerturbError : public std::runtime_error {
  public:
    enum class Code {
        index_out_of_range,
        condition10_violated,
        singular_system,
        multiplier_vanishes,
        not_hyperbolic,
        too_few_points,
        bad_target,
    };
    PerturbError(Code code, const std::string& msg) : std::runtime_error(msg), code_(code) {}
    Code code() const { return code_; }

  private:
    Code code_;
};

// Differentials df^{j-i}(x_i) along an orbit segment x_0..x_N; the building
// blocks of every first-order response formula here.
class SegmentPartials {
  public:
    static SegmentPartials from_orbit(const Domain& domain, const PeriodicOrbit& orbit,
                                      int steps);
    static SegmentPartials from_point(const Domain& domain, const PhasePoint& start, int steps);

    int steps() const { return static_cast<int>(step_diffs_.size()); }
    const PhasePoint& point(int i) const { return points_.at(i); }
    const std::vector<PhasePoint>& points() const { return points_; }

    Mat2 block(int i, int j) const;  // df^{j-i}(x_i), 0 <= i <= j <= steps
    double ds_ds(int i, int j) const { return block(i, j).a; }
    double ds_dphi(int i, int j) const { return block(i, j).b; }
    double dphi_ds(int i, int j) const { return block(i, j).c; }
    double dphi_dphi(int i, int j) const { return block(i, j).d; }

  private:
    std::vector<PhasePoint> points_;   // length steps + 1
    std::vector<Mat2> step_diffs_;     // length steps
    std::vector<std::vector<Mat2>> blocks_;  // blocks_[i][j-i]
    void build_blocks();
};

// First-order change of df^q under a curvature increment eps at impact k,
// with the orbit held fixed: eps * df^{q-k}(x_k) B df^k(x_0), B = [[0,0],[2,0]].
Mat2 predict_delta_differential(const SegmentPartials& seg, int k, double eps);

// The (m+2) x (m+2) response matrix of the free order-m map partials
//   { d^m s_T / ds^(m-k) dphi^k : k = 0..m }  and  d^m phi_T / dphi^m
// of f^T to tangent-angle-jet increments at the interior impact points:
// entry (k, l) = (ds_T/dphi_l) (ds_l/ds_0)^(m-k) (ds_l/dphi_0)^k, last row
// (dphi_T/dphi_l) (ds_l/dphi_0)^m. For m >= 1 the increments are curvature
// bumps with jet (0, ..., 0, eps_l), i.e. the (m-1)-th curvature derivative;
// the full response carries an extra factor 2 tracked at the prediction layer.
struct MMatrix {
    int map_order = 0;  // m above
    int top = 0;        // T, number of steps of the composition
    std::vector<int> point_indices;
    Matrix entries;     // bare matrix, factor 2 excluded
    double direct_det = 0;
    bool condition10_ok = false;
    double min_condition10_partial = 0;
};

MMatrix assemble_M(const SegmentPartials& seg, int map_order, int top = -1,
                   std::vector<int> point_indices = {});

// Replay of the row/column reduction to lower-triangular form with the
// closed-form diagonal, including the full multiplier trail, and the
// comparison of the direct LU determinant against the reduced product.
struct ReductionCertificate {
    int map_order = 0;
    double direct_det = 0;
    double reduced_diagonal_product = 0;
    double multiplier_product = 1;
    double reduced_det = 0;  // diagonal product / multiplier product
    std::vector<double> diagonal;
    std::vector<double> closed_form_diagonal;
    double max_offdiagonal_residual = 0;
    double closed_form_rel_error = 0;
    double det_rel_error = 0;
    bool lu_fallback = false;  // a multiplier vanished; reduction path invalid
    bool pass = false;
    std::vector<std::pair<std::string, double>> ops;  // multiplier trail
};

ReductionCertificate det_via_reduction(const SegmentPartials& seg, int map_order);
std::string certificate_to_json_text(const ReductionCertificate& cert);

// The free order-m partials of a map jet, ordered to match the M rows:
// derivative values (d^m s/ds^(m-k) dphi^k)_{k=0..m}, then d^m phi/dphi^m.
std::vector<double> free_partials(const JetMap2& jet, int map_order);

// Solve 2 M eps = target for the bump increments.
std::vector<double> solve_epsilons_for_target(const MMatrix& M, const std::vector<double>& target);

// Lemma-2.2 recovery: the mixed order-n phi partials
// (d^n phi/ds^n, ..., d^n phi/ds dphi^(n-1)) reconstructed from the s-partials,
// d^n phi/dphi^n, all lower-order data, and the area identity
// det df^T = sin(phi_0)/sin(phi_T).
std::vector<double> recover_phi_partials(const JetMap2& jet, int n);
Matrix lemma22_matrix(const JetMap2& jet, int n);  // bidiagonal, det = (-ds/dphi)^n
double phi_s_partial_from_determinant(const JetMap2& jet);  // n = 0 identity

// First-order response of the eigen-data of a det-1 matrix A under
// A -> [[a+e1, b+e2], [c+*, d+e3]] with * keeping det A fixed. The published
// variant reproduces the printed coefficients; the corrected variant is the
// derivative of the explicit eigenvector/eigenvalue formulas. Rows map
// (e1, e2, e3) to (d omega1, d omega2, d lambda).
Matrix eigen_perturbation_coefficients(const Mat2& A, bool published_variant);

struct EigenControl {
    std::array<double, 3> matrix_eps{};  // (da, db, dd)
    double forced_dc = 0;                // det-1 constraint
    std::vector<int> point_indices;
    std::vector<double> kappa_eps;       // curvature increments realizing it
    Mat2 predicted_delta;                // predicted change of df^q
};

// Targets may leave entries unset (nullopt) to control a subset; the number
// of set targets must not exceed the number of available interior points.
EigenControl eigen_angle_control(const Domain& domain, PeriodicOrbit& orbit,
                                 const std::array<std::optional<double>, 3>& targets,
                                 std::vector<int> point_indices = {},
                                 bool published_variant = false);

// Curvature increments at four impacts with vanishing combined first-order
// change of df^N(x_{k1}->...), normalized so the last increment is 1.
std::array<double, 4> four_point_cancellation(const SegmentPartials& seg,
                                              const std::array<int, 4>& idx);

struct Compensation {
    std::array<double, 3> delta_kappa{};
    Mat2 foreign_delta;       // predicted first-order change of the foreign set
    Mat2 compensated_delta;   // predicted change of the returned increments
    double match_error = 0;   // max abs difference
};

// Reproduce the first-order differential change of an arbitrary curvature
// perturbation using increments at three chosen impacts only.
Compensation three_point_compensation(const SegmentPartials& seg,
                                      const std::vector<std::pair<int, double>>& foreign,
                                      const std::array<int, 3>& indices);

// One stage of the staged rotation: bump increments of one curvature-jet
// order at consecutive interior impacts.
struct PerturbationStage {
    int map_order = 0;
    std::vector<int> point_indices;
    std::vector<double> epsilon;
    std::vector<double> predicted_delta;  // of the free order-m partials
    std::vector<BumpPatch> patches;
};

struct RotationPlan {
    double delta = 0;
    int n = 0;
    std::vector<PerturbationStage> stages;
    RadiusProfile final_profile;
    Mat2 target_linear;    // R_delta * df^q
    Mat2 achieved_linear;
    double linear_error = 0;          // max entry |achieved - target|
    std::vector<double> order_drift;  // per degree 2..n+1, max coefficient drift (all slots)
    // per degree 2..n+1, drift of the controllable coefficients only; the
    // area-determined mixed phi partials shift by O(delta) with the rotation
    std::vector<double> free_drift;
    PeriodicOrbit final_orbit;
};

// Lemma-1.5 staging: stage 0 rotates the order-1 block to R_delta df^q (three
// entries targeted, the fourth forced by area preservation), stage m restores
// the order-(m+1) coefficients disturbed by the earlier stages. Runs exactly
// n+1 stages, no inner iteration; quadratic-in-delta residue is reported.
RotationPlan rotate_differential(const Domain& domain, const PeriodicOrbit& orbit, double delta,
                                 int n, double bump_half_width = 0.0);

// Bump plan helper shared by the end-to-end verifications: one patch per
// point with curvature jet (0, ..., 0, eps_l) of length map_order.
std::vector<BumpPatch> build_bump_patches(const Domain& domain, const PeriodicOrbit& orbit,
                                          const std::vector<int>& point_indices,
                                          const std::vector<double>& eps, int map_order,
                                          double half_width = 0.0);

// Merge patches into a profile, summing weights of co-centered patches (the
// staged construction re-perturbs at the same impacts).
RadiusProfile merge_patches(const RadiusProfile& profile, const std::vector<BumpPatch>& patches);

// Jet of f^{T-l} o K o f^l at x_0 where K(s, phi) = (s, phi + 2 eps) is the
// order-0 tangent-rotation kick at impact l. Realizes the order-0 row of the
// response calculus exactly in jet space.
JetMap2 phase_kick_segment_jet(const Domain& domain, const PhasePoint& start, int total_steps,
                               int l, double eps, int order);

}  // namespace bjl

#endif
