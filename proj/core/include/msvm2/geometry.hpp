#pragma once

#include "msvm2/kernel.hpp"
#include "msvm2/model.hpp"

#include <vector>

namespace msvm2 {

/// Q / (Q - 1): the functional gap h_{y_i}(x_i) - h_k(x_i) attained by a
/// point whose Q - 1 margin constraints are all active.
double d_base(int num_classes);

struct PairMargin {
  int k = 0;
  int l = 0;
  double min_gap = 0.0;     // smallest score gap over points of class k or l
  double d_kl = 0.0;        // min_gap / d - 1
  double w_diff_norm = 0.0; // |w_k - w_l|
  double gamma = 0.0;       // d (1 + d_kl) / |w_k - w_l|; +inf when w_k = w_l
};

/// The four quantities that coincide for a hard-margin optimum:
/// Q/(Q-1)^2 sum_{k<l} ((1 + d_kl)/gamma_kl)^2, sum_k |w_k|^2, a'Ha and
/// 1'a / (Q-1).
struct NormChain {
  double lhs_margin_sum = 0.0;
  double sum_wk_sq = 0.0;
  double alpha_H_alpha = 0.0;
  double alpha_sum_term = 0.0;

  /// Largest pairwise relative difference among the four values.
  double max_relative_gap() const;
};

struct MarginReport {
  /// Smallest score gap over all pairs and points (measured).
  double d = 0.0;
  /// The gap used in d_kl and gamma_kl: d_base(Q) for the hard-margin
  /// machine. Equal to `d` whenever one point has all its constraints active.
  double d_reference = 0.0;
  std::vector<PairMargin> pairs;  // k < l, lexicographic
  /// sum_{k<l} ((1 + d_kl) / gamma_kl)^2
  double margin_sum = 0.0;
  NormChain chain;
};

/// Margins of the hard-margin machine in its own feature space (offset
/// kernel on the training points). Throws InvalidArgument when the model
/// misclassifies a training point or a class pair has no training point.
MarginReport compute_margins(const TrainedModel& model);

struct PairwiseNormCheck {
  double lhs = 0.0;  // sum_{k<l} |w_k - w_l|^2 from pairwise expansions
  double rhs = 0.0;  // Q * a'Ha
};

PairwiseNormCheck pairwise_norm_check(const TrainedModel& model);

/// |w_k - w_l|^2 = sum_ij (a_il - a_ik)(a_jl - a_jk) gram(i, j).
double w_diff_sq(const Matrix& alpha, const Matrix& gram, int k, int l);

struct BallOptions {
  /// Stop once max_i |Phi(x_i) - c|^2 - R^2 <= tol * (1 + R^2).
  double tol = 1e-11;
  long max_iter = 1'000'000;
};

struct BallResult {
  Vector weights;  // beta on the simplex; center c = sum_i beta_i Phi(x_i)
  double radius = 0.0;
  double diameter = 0.0;
  double squared_diameter = 0.0;
  /// max_i |Phi(x_i) - c|^2 - R^2 at termination.
  double certificate_gap = 0.0;
  long iterations = 0;
};

/// Minimum enclosing ball of the feature-space images, from the dual
///   max_beta  sum_i beta_i g_ii - beta' G beta  over the simplex,
/// solved by pairwise Frank-Wolfe from uniform weights with exact line
/// search. R^2 is the optimal value. Throws NumericalError when the Gram
/// matrix is not positive semidefinite.
BallResult min_enclosing_ball(const GramMatrix& gram, const BallOptions& options = {});

/// Squared distance of every image to the center sum_i beta_i Phi(x_i).
Vector center_distances_sq(const Matrix& gram, const Vector& weights);

}  // namespace msvm2
