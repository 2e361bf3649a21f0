#pragma once

#include "msvm2/kernel.hpp"

#include <vector>

namespace msvm2 {

/// The hard-margin dual
///
///   max_a  J(a) = -1/2 a'Ha + 1/(Q-1) 1'a
///   s.t.   a_ik >= 0,  a_{i,y_i} = 0,
///          sum_i a_ik = 1/Q sum_il a_il   for every class k,
///
/// with h_{ik,jl} = (delta_kl - 1/Q) * gram(i, j). H is never formed; its
/// products are evaluated in the factored form gram * (a - rowmean(a) 1').
///
/// Alpha is stored as an m x Q matrix, row i holding (a_i1, ..., a_iQ).
/// Class indices are 0-based.
class DualProblem {
 public:
  DualProblem(GramMatrix gram, std::vector<int> labels, int num_classes);

  Eigen::Index size() const noexcept { return gram_.order(); }
  int num_classes() const noexcept { return num_classes_; }
  const GramMatrix& gram() const noexcept { return gram_; }
  const std::vector<int>& labels() const noexcept { return labels_; }
  int label(Eigen::Index i) const { return labels_[static_cast<std::size_t>(i)]; }

  /// Linear coefficient 1/(Q-1).
  double margin_target() const noexcept { return 1.0 / (num_classes_ - 1); }

  /// True for the coordinates that are genuine variables (k != y_i).
  bool eligible(Eigen::Index i, Eigen::Index k) const {
    return k != labels_[static_cast<std::size_t>(i)];
  }

 private:
  GramMatrix gram_;
  std::vector<int> labels_;
  int num_classes_;
};

/// H * alpha, as an m x Q matrix.
Matrix hessian_product(const DualProblem& problem, const Matrix& alpha);

/// J(alpha).
double dual_objective(const DualProblem& problem, const Matrix& alpha);

struct SolverOptions {
  /// Absolute KKT tolerance is tol / (Q - 1).
  double tol = 1e-8;
  /// 0 selects the default 100 * Q * m.
  long max_iter = 0;
  /// Stop when the relative objective gain over this many productive steps
  /// falls below stall_relative_change.
  int stall_window = 10;
  double stall_relative_change = 1e-14;
  /// Keep J after every iteration in DualSolution::objective_trace.
  bool record_trace = false;
};

struct DualSolution {
  Matrix alpha;
  double objective = 0.0;
  double kkt_residual = 0.0;
  long iterations = 0;
  bool converged = false;
  std::vector<double> objective_trace;
};

/// Optimality certificate of a candidate alpha.
struct KktReport {
  /// |sum_i a_ik - 1/Q sum_il a_il| for each class k.
  Vector equality_residual;
  /// Smallest coordinate over the genuine variables.
  double min_coordinate = 0.0;
  /// Largest |a_{i,y_i}|.
  double pinned_residual = 0.0;
  /// max a_ik * |h_k(x_i) + 1/(Q-1)| over genuine variables, with h the
  /// class functions on the training points and biases b = -multipliers.
  double complementary_slackness = 0.0;
  /// Largest projected-gradient component: |r_ik| where a_ik > 0 and
  /// max(r_ik, 0) where a_ik = 0, with r the gradient of J minus the
  /// equality-constraint term.
  double stationarity = 0.0;
  /// Equality-constraint multipliers (sum to zero); their negatives are the
  /// class biases of the primal solution.
  Vector multipliers;

  /// Largest of stationarity, equality, sign and pinned residuals.
  /// Complementary slackness is implied by stationarity (bound coordinates
  /// are exactly zero) and stays a diagnostic: it scales with alpha.
  double max_residual() const;
};

KktReport kkt_report(const DualProblem& problem, const Matrix& alpha);

/// Active-set projected-gradient ascent. Starts from alpha = 0, keeps every
/// iterate feasible, and increases J monotonically. Within a face of the
/// nonnegativity constraints it takes conjugate projected-gradient steps
/// with exact line search; blocking coordinates join the active set and the
/// coordinate with the largest positive reduced gradient leaves it once the
/// face is optimal.
///
/// Throws NumericalError when negative curvature is met (the Gram matrix is
/// not PSD) or when J is unbounded (hard-margin data not separable). When
/// max_iter is exhausted the best iterate is returned with converged=false.
DualSolution solve_dual(const DualProblem& problem,
                        const SolverOptions& options = {});

}  // namespace msvm2
