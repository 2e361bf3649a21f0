#pragma once

#include "msvm2/dataset.hpp"
#include "msvm2/dual_qp.hpp"
#include "msvm2/kernel.hpp"

#include <optional>
#include <string>
#include <vector>

namespace msvm2 {

/// Label returned when the two best class scores tie.
inline constexpr int kDummy = -1;
/// Absolute tolerance under which two top scores count as a tie.
inline constexpr double kTieTolerance = 1e-12;
/// Support coordinates are those above this fraction of max alpha.
inline constexpr double kSupportThreshold = 1e-7;

struct TrainOptions {
  /// Soft-margin parameter; std::nullopt trains the pure hard-margin machine.
  std::optional<double> C;
  SolverOptions solver;
  /// Throw NumericalError when the solver does not converge.
  bool require_convergence = true;
};

struct SolverInfo {
  double tol = 0.0;
  long max_iter = 0;
  long iterations = 0;
  bool converged = false;
  double objective = 0.0;
  double kkt_residual = 0.0;
  /// Classes whose bias had no support equation (set from the sum constraint).
  std::vector<int> unsupported_bias;
};

/// A trained machine. `kernel` carries the diagonal offset 1/(2C) (0 for the
/// hard-margin machine); `alpha` is m x Q with zero dummy entries.
struct TrainedModel {
  KernelSpec kernel = KernelSpec::linear();
  std::optional<double> C;
  PointMatrix points;
  std::vector<int> labels;
  std::vector<std::string> categories;
  Matrix alpha;
  Vector bias;
  SolverInfo solver;
  std::string training_digest;

  int num_classes() const noexcept { return static_cast<int>(categories.size()); }
  Eigen::Index size() const noexcept { return points.rows(); }
  /// The dual problem this model solves (Gram with offset).
  DualProblem dual_problem() const;
};

/// Trains on `data` with the base kernel `kernel` (its own diagonal offset is
/// ignored and replaced by 1/(2C), or 0 when C is absent). Requires at least
/// two categories present.
TrainedModel train(const Dataset& data, const KernelSpec& kernel,
                   const TrainOptions& options = {});

/// Lower-level entry: trains on raw points with a fixed class count. Classes
/// absent from `labels` are allowed.
TrainedModel fit(const PointMatrix& points, const std::vector<int>& labels,
                 std::vector<std::string> categories, const KernelSpec& kernel,
                 const TrainOptions& options = {});

/// Expansion coefficients c_ik = 1/Q sum_l a_il - a_ik, so that
/// w_k = sum_i c_ik Phi(x_i).
Matrix expansion_coefficients(const Matrix& alpha);

/// Biases from the support equations b_k = -1/(Q-1) - <w_k, Phi(x_i)>,
/// solved by least squares under sum_k b_k = 0.
Vector recover_biases(const DualProblem& problem, const Matrix& alpha,
                      std::vector<int>* unsupported = nullptr);

/// h(x) for one query point (base kernel, no offset).
Vector decision_scores(const TrainedModel& model, std::span<const double> x);
/// h(z_q) for a batch; row q holds the Q scores of query q.
Matrix decision_scores(const TrainedModel& model, const PointMatrix& queries);
/// h(x_i) on the training points of the machine itself, using the offset
/// kernel (the hard-margin machine's feature space).
Matrix training_scores(const TrainedModel& model);

struct Prediction {
  Vector scores;
  int label = kDummy;
};

/// Argmax rule; kDummy when the top two scores differ by <= tie_tol.
int argmax_label(const Vector& scores, double tie_tol = kTieTolerance);
Prediction predict(const TrainedModel& model, std::span<const double> x);
std::vector<int> predict_labels(const TrainedModel& model,
                                const PointMatrix& queries);

struct WNorms {
  Vector per_class;  // |w_k|^2
  double total = 0.0;
};

/// Squared norms of the class vectors in the machine's feature space
/// (offset kernel).
WNorms wk_norms(const TrainedModel& model);

struct SlackReport {
  /// xi = alpha / (2C); zero on the dummy coordinates.
  Matrix xi;
  /// |2C M xi - alpha|_inf, M the per-example centering matrix.
  double residual = 0.0;
  /// |2C M xi - M alpha|_inf: the relation restricted to the range of M.
  double range_residual = 0.0;
  /// 1/2 sum_k |w_k|^2 (base kernel) + C xi' M xi.
  double primal_objective = 0.0;
};

/// Slack variables of the quadratic-loss machine. Throws InvalidArgument for
/// a hard-margin model.
SlackReport slack_vector(const TrainedModel& model);

}  // namespace msvm2
