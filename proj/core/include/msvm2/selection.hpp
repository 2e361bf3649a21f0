#pragma once

#include "msvm2/dataset.hpp"
#include "msvm2/geometry.hpp"
#include "msvm2/model.hpp"

#include <optional>
#include <string>
#include <vector>

namespace msvm2 {

struct LooOutcome {
  Eigen::Index point = 0;
  int predicted = kDummy;
  bool error = false;
  /// The fold failed to train; counted as an error.
  bool training_failed = false;
  std::string diagnostic;
};

struct LooResult {
  int error_count = 0;
  std::vector<LooOutcome> outcomes;
  /// Rows of the full-data alpha (m x Q).
  Matrix full_alpha;
  std::string dataset_digest;
};

struct LooOptions {
  /// Worker threads for the folds; 0 uses hardware concurrency.
  unsigned threads = 0;
};

/// Leave-one-out: fold p trains on every point but p (fixed class count,
/// retrained from scratch) and predicts x_p. DUMMY predictions and failed
/// folds count as errors. Results do not depend on the thread count.
LooResult exact_loo(const Dataset& data, const KernelSpec& kernel,
                    const TrainOptions& train_options,
                    const LooOptions& options = {});

struct KeyLemmaEntry {
  Eigen::Index point = 0;
  double max_alpha = 0.0;  // max_k alpha0_pk
  double threshold = 0.0;  // 1 / (Q (Q-1) D^2)
  bool satisfied = true;
};

struct BoundReport {
  double D_sq = 0.0;
  double radius = 0.0;
  double margin_sum = 0.0;       // sum_{k<l} ((1 + d_kl) / gamma_kl)^2
  double bound_value = 0.0;      // Q^2 D^2 margin_sum
  double bound_clamped = 0.0;    // min(bound_value, m)
  double bound_over_q2 = 0.0;    // bound_value / Q^2
  double alpha_sum = 0.0;        // 1'a
  double bound_via_alpha = 0.0;  // Q (Q-1) D^2 1'a
  std::optional<int> loo_errors;
  std::vector<KeyLemmaEntry> key_lemma;
  std::vector<KeyLemmaEntry> key_lemma_violations;
  MarginReport margins;
  BallResult ball;
  std::string dataset_digest;
  int num_classes = 0;
  Eigen::Index num_points = 0;
};

enum class BallScope {
  kAllPoints,      // every training image (default)
  kSupportPoints,  // only points with a nonzero alpha row
};

struct BoundOptions {
  BallScope scope = BallScope::kAllPoints;
  BallOptions ball;
};

/// Radius-margin bound of a converged model: ball and margins in the
/// machine's own feature space (offset kernel).
BoundReport radius_margin_bound(const TrainedModel& model,
                                const BoundOptions& options = {});

/// For every LOO error p, checks max_k alpha0_pk >= 1/(Q(Q-1)D^2) - slack.
/// Throws InvalidArgument when the LOO run is for a different dataset.
std::vector<KeyLemmaEntry> key_lemma_check(const TrainedModel& model,
                                           const LooResult& loo, double D_sq,
                                           double slack = 1e-9);

/// Fills loo_errors and the key-lemma entries of `report`.
void attach_loo(BoundReport& report, const TrainedModel& model, const LooResult& loo);

struct GridPoint {
  double C = 0.0;
  std::vector<double> params;
  KernelSpec kernel = KernelSpec::linear();
  double bound = 0.0;  // +inf when training failed
  double bound_over_q2 = 0.0;
  std::optional<int> loo_errors;
  bool failed = false;
  std::string diagnostic;
  double wall_ms = 0.0;
};

struct SelectionResult {
  std::vector<GridPoint> grid;
  std::size_t best = 0;
  std::string dataset_digest;
};

/// Index of the smallest bound among the points that trained; ties go to the
/// smaller C, then to the lexicographically smaller parameter tuple. Throws
/// NumericalError when no point trained.
std::size_t best_grid_point(const std::vector<GridPoint>& grid);

struct SelectOptions {
  bool with_exact_loo = false;
  SolverOptions solver;
  LooOptions loo;
  BoundOptions bound;
};

/// Trains every (C, params) pair, computes the bound (and optionally exact
/// LOO) and picks the smallest bound; ties go to the smaller C, then to the
/// lexicographically smaller parameter tuple. Failed points get an infinite
/// bound; throws NumericalError if every point fails.
SelectionResult grid_select(const Dataset& data, KernelFamily family,
                            const std::vector<double>& c_grid,
                            const std::vector<std::vector<double>>& param_grid,
                            const SelectOptions& options = {});

}  // namespace msvm2
