#include "msvm2/selection.hpp"

#include "msvm2/error.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <thread>

namespace msvm2 {
namespace {

template <typename Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& body) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> workers;
  workers.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) body(i);
    });
  }
}

bool all_zero(const Matrix& alpha) {
  return alpha.size() == 0 || alpha.cwiseAbs().maxCoeff() == 0.0;
}

}  // namespace

LooResult exact_loo(const Dataset& data, const KernelSpec& kernel,
                    const TrainOptions& train_options, const LooOptions& options) {
  const Eigen::Index m = data.size();
  if (m == 0) throw InvalidArgument("leave-one-out on an empty dataset");

  LooResult result;
  result.dataset_digest = data.source_hash;
  result.full_alpha =
      fit(data.points, data.labels, data.categories, kernel, train_options).alpha;
  result.outcomes.resize(static_cast<std::size_t>(m));

  parallel_for(static_cast<std::size_t>(m), options.threads, [&](std::size_t p) {
    LooOutcome& outcome = result.outcomes[p];
    outcome.point = static_cast<Eigen::Index>(p);
    const int truth = data.labels[p];
    try {
      const Dataset fold = without_point(data, outcome.point);
      const TrainedModel model =
          fit(fold.points, fold.labels, fold.categories, kernel, train_options);
      const auto n = static_cast<std::size_t>(data.dimension());
      outcome.predicted = predict(model, {data.points.row(outcome.point).data(), n}).label;
      outcome.error = outcome.predicted != truth;
    } catch (const Error& e) {
      outcome.training_failed = true;
      outcome.error = true;
      outcome.diagnostic = e.what();
    }
  });

  for (const auto& outcome : result.outcomes) result.error_count += outcome.error ? 1 : 0;
  return result;
}

BoundReport radius_margin_bound(const TrainedModel& model, const BoundOptions& options) {
  const int q = model.num_classes();
  const double qd = static_cast<double>(q);
  BoundReport report;
  report.num_classes = q;
  report.num_points = model.size();
  report.dataset_digest = model.training_digest;

  const GramMatrix gram = build_gram(model.kernel, model.points);
  if (options.scope == BallScope::kAllPoints) {
    report.ball = min_enclosing_ball(gram, options.ball);
  } else {
    std::vector<Eigen::Index> support;
    const double threshold = kSupportThreshold * model.alpha.maxCoeff();
    for (Eigen::Index i = 0; i < model.size(); ++i) {
      if (model.alpha.row(i).maxCoeff() > threshold) support.push_back(i);
    }
    if (support.empty()) support.push_back(0);
    report.ball = min_enclosing_ball(gram.subset(support), options.ball);
  }
  report.D_sq = report.ball.squared_diameter;
  report.radius = report.ball.radius;

  // alpha = 0 only arises when the feasible set is {0}; every w_k vanishes
  // and margins are undefined, but both forms of the bound are 0.
  if (!all_zero(model.alpha)) {
    report.margins = compute_margins(model);
    report.margin_sum = report.margins.margin_sum;
  }
  report.bound_value = qd * qd * report.D_sq * report.margin_sum;
  report.bound_clamped = std::min(report.bound_value, static_cast<double>(model.size()));
  report.bound_over_q2 = report.bound_value / (qd * qd);
  report.alpha_sum = model.alpha.sum();
  report.bound_via_alpha = qd * (qd - 1.0) * report.D_sq * report.alpha_sum;
  return report;
}

std::vector<KeyLemmaEntry> key_lemma_check(const TrainedModel& model,
                                           const LooResult& loo, double D_sq,
                                           double slack) {
  if (loo.dataset_digest != model.training_digest) {
    throw InvalidArgument("leave-one-out results belong to a different dataset (digest " +
                          loo.dataset_digest + " vs model " + model.training_digest + ")");
  }
  const double qd = static_cast<double>(model.num_classes());
  const double threshold = 1.0 / (qd * (qd - 1.0) * D_sq);
  std::vector<KeyLemmaEntry> entries;
  for (const auto& outcome : loo.outcomes) {
    if (!outcome.error) continue;
    KeyLemmaEntry entry;
    entry.point = outcome.point;
    entry.max_alpha = model.alpha.row(outcome.point).maxCoeff();
    entry.threshold = threshold;
    entry.satisfied = entry.max_alpha >= threshold - slack;
    entries.push_back(entry);
  }
  return entries;
}

void attach_loo(BoundReport& report, const TrainedModel& model, const LooResult& loo) {
  report.loo_errors = loo.error_count;
  report.key_lemma = key_lemma_check(model, loo, report.D_sq);
  report.key_lemma_violations.clear();
  for (const auto& entry : report.key_lemma) {
    if (!entry.satisfied) report.key_lemma_violations.push_back(entry);
  }
}

std::size_t best_grid_point(const std::vector<GridPoint>& grid) {
  const auto better = [](const GridPoint& a, const GridPoint& b) {
    if (a.bound != b.bound) return a.bound < b.bound;
    if (a.C != b.C) return a.C < b.C;
    return std::lexicographical_compare(a.params.begin(), a.params.end(),
                                        b.params.begin(), b.params.end());
  };
  std::size_t best = 0;
  bool any_ok = false;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid[i].failed) continue;
    if (!any_ok || better(grid[i], grid[best])) best = i;
    any_ok = true;
  }
  if (!any_ok) {
    throw NumericalError("training failed at every grid point" +
                         (grid.empty() ? std::string() : ": " + grid.front().diagnostic));
  }
  return best;
}

SelectionResult grid_select(const Dataset& data, KernelFamily family,
                            const std::vector<double>& c_grid,
                            const std::vector<std::vector<double>>& param_grid,
                            const SelectOptions& options) {
  if (c_grid.empty()) throw InvalidArgument("empty C grid");
  for (double c : c_grid) {
    if (!(c > 0.0) || !std::isfinite(c)) throw InvalidArgument("every C must be > 0");
  }
  std::vector<std::vector<double>> params = param_grid;
  if (params.empty()) {
    if (family != KernelFamily::kLinear) throw InvalidArgument("empty parameter grid");
    params.emplace_back();
  }
  if (data.present_classes() < 2) {
    throw InvalidArgument("training data contain a single category");
  }

  SelectionResult result;
  result.dataset_digest = data.source_hash;
  for (double c : c_grid) {
    for (const auto& tuple : params) {
      GridPoint point;
      point.C = c;
      point.params = tuple;
      point.kernel = KernelSpec::from_params(family, tuple);
      const auto start = std::chrono::steady_clock::now();
      TrainOptions train_options;
      train_options.C = c;
      train_options.solver = options.solver;
      try {
        const TrainedModel model = train(data, point.kernel, train_options);
        const BoundReport bound = radius_margin_bound(model, options.bound);
        point.bound = bound.bound_value;
        point.bound_over_q2 = bound.bound_over_q2;
        if (options.with_exact_loo) {
          point.loo_errors = exact_loo(data, point.kernel, train_options, options.loo).error_count;
        }
      } catch (const Error& e) {
        point.failed = true;
        point.diagnostic = e.what();
        point.bound = std::numeric_limits<double>::infinity();
        point.bound_over_q2 = point.bound;
      }
      point.wall_ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - start)
                          .count();
      result.grid.push_back(std::move(point));
    }
  }

  result.best = best_grid_point(result.grid);
  return result;
}

}  // namespace msvm2
