#include "msvm2/model.hpp"

#include "msvm2/error.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace msvm2 {
namespace {

Matrix center_rows(const Matrix& values) {
  return values.colwise() - values.rowwise().mean();
}

}  // namespace

DualProblem TrainedModel::dual_problem() const {
  return DualProblem(build_gram(kernel, points), labels, num_classes());
}

Matrix expansion_coefficients(const Matrix& alpha) {
  return -center_rows(alpha);
}

Vector recover_biases(const DualProblem& problem, const Matrix& alpha,
                      std::vector<int>* unsupported) {
  const int q = problem.num_classes();
  const double peak = alpha.size() > 0 ? alpha.maxCoeff() : 0.0;
  const double threshold = kSupportThreshold * peak;
  const Matrix h_alpha = hessian_product(problem, alpha);

  Vector rhs_sum = Vector::Zero(q);
  Eigen::VectorXi count = Eigen::VectorXi::Zero(q);
  if (peak > 0.0) {
    for (Eigen::Index i = 0; i < problem.size(); ++i) {
      for (Eigen::Index k = 0; k < q; ++k) {
        if (!problem.eligible(i, k) || alpha(i, k) <= threshold) continue;
        // <w_k, Phi(x_i)> = -(H alpha)_ik
        rhs_sum[k] += -problem.margin_target() + h_alpha(i, k);
        ++count[k];
      }
    }
  }

  Vector bias = Vector::Zero(q);
  std::vector<int> missing;
  for (int k = 0; k < q; ++k) {
    if (count[k] == 0) missing.push_back(k);
  }
  if (missing.empty()) {
    double weighted = 0.0;
    double inv_total = 0.0;
    for (int k = 0; k < q; ++k) {
      weighted += rhs_sum[k] / count[k];
      inv_total += 1.0 / count[k];
    }
    const double level = weighted / inv_total;
    for (int k = 0; k < q; ++k) bias[k] = (rhs_sum[k] - level) / count[k];
  } else if (static_cast<int>(missing.size()) < q) {
    double assigned = 0.0;
    for (int k = 0; k < q; ++k) {
      if (count[k] > 0) {
        bias[k] = rhs_sum[k] / count[k];
        assigned += bias[k];
      }
    }
    for (int k : missing) bias[k] = -assigned / static_cast<double>(missing.size());
  }
  if (unsupported != nullptr) *unsupported = std::move(missing);
  return bias;
}

TrainedModel fit(const PointMatrix& points, const std::vector<int>& labels,
                 std::vector<std::string> categories, const KernelSpec& kernel,
                 const TrainOptions& options) {
  if (points.rows() == 0) throw InvalidArgument("cannot train on an empty dataset");
  if (static_cast<Eigen::Index>(labels.size()) != points.rows()) {
    throw InvalidArgument("label count does not match point count");
  }
  if (categories.size() < 2) {
    throw InvalidArgument("training needs at least two categories");
  }
  if (options.C && !(*options.C > 0.0 && std::isfinite(*options.C))) {
    throw InvalidArgument("C must be a finite positive number");
  }

  TrainedModel model;
  model.C = options.C;
  model.kernel = kernel.with_diagonal_offset(options.C ? 1.0 / (2.0 * *options.C) : 0.0);
  model.points = points;
  model.labels = labels;
  model.categories = std::move(categories);

  const DualProblem problem = model.dual_problem();
  DualSolution solution = solve_dual(problem, options.solver);
  if (!solution.converged && options.require_convergence) {
    std::ostringstream msg;
    msg << "dual solver did not converge after " << solution.iterations
        << " iterations (KKT residual " << solution.kkt_residual << ", tolerance "
        << options.solver.tol * problem.margin_target() << ")";
    throw NumericalError(msg.str());
  }

  model.solver.tol = options.solver.tol;
  model.solver.max_iter = options.solver.max_iter > 0
                              ? options.solver.max_iter
                              : 100L * model.num_classes() * problem.size();
  model.solver.iterations = solution.iterations;
  model.solver.converged = solution.converged;
  model.solver.objective = solution.objective;
  model.solver.kkt_residual = solution.kkt_residual;
  model.bias = recover_biases(problem, solution.alpha, &model.solver.unsupported_bias);
  model.alpha = std::move(solution.alpha);
  model.training_digest = dataset_digest(model.points, model.labels, model.categories);
  return model;
}

TrainedModel train(const Dataset& data, const KernelSpec& kernel,
                   const TrainOptions& options) {
  if (data.size() == 0) throw InvalidArgument("cannot train on an empty dataset");
  if (data.present_classes() < 2) {
    throw InvalidArgument("training data contain a single category");
  }
  return fit(data.points, data.labels, data.categories, kernel, options);
}

Vector decision_scores(const TrainedModel& model, std::span<const double> x) {
  if (static_cast<Eigen::Index>(x.size()) != model.points.cols()) {
    throw InvalidArgument("query dimension " + std::to_string(x.size()) +
                          " does not match training dimension " +
                          std::to_string(model.points.cols()));
  }
  const auto n = static_cast<std::size_t>(model.points.cols());
  Vector kernel_values(model.size());
  for (Eigen::Index i = 0; i < model.size(); ++i) {
    kernel_values[i] = eval_kernel(model.kernel, {model.points.row(i).data(), n}, x);
  }
  const Matrix coef = expansion_coefficients(model.alpha);
  return coef.transpose() * kernel_values + model.bias;
}

Matrix decision_scores(const TrainedModel& model, const PointMatrix& queries) {
  const Matrix kernel_values = cross_gram(model.kernel, model.points, queries);
  const Matrix coef = expansion_coefficients(model.alpha);
  Matrix scores = kernel_values.transpose() * coef;
  scores.rowwise() += model.bias.transpose();
  return scores;
}

Matrix training_scores(const TrainedModel& model) {
  const GramMatrix gram = build_gram(model.kernel, model.points);
  Matrix scores = gram.entries() * expansion_coefficients(model.alpha);
  scores.rowwise() += model.bias.transpose();
  return scores;
}

int argmax_label(const Vector& scores, double tie_tol) {
  if (scores.size() == 0) return kDummy;
  Eigen::Index best = 0;
  for (Eigen::Index k = 1; k < scores.size(); ++k) {
    if (scores[k] > scores[best]) best = k;
  }
  for (Eigen::Index k = 0; k < scores.size(); ++k) {
    if (k != best && scores[best] - scores[k] <= tie_tol) return kDummy;
  }
  return static_cast<int>(best);
}

Prediction predict(const TrainedModel& model, std::span<const double> x) {
  Prediction out;
  out.scores = decision_scores(model, x);
  out.label = argmax_label(out.scores);
  return out;
}

std::vector<int> predict_labels(const TrainedModel& model,
                                const PointMatrix& queries) {
  const Matrix scores = decision_scores(model, queries);
  std::vector<int> labels(static_cast<std::size_t>(scores.rows()));
  for (Eigen::Index q = 0; q < scores.rows(); ++q) {
    labels[static_cast<std::size_t>(q)] = argmax_label(scores.row(q).transpose());
  }
  return labels;
}

WNorms wk_norms(const TrainedModel& model) {
  const GramMatrix gram = build_gram(model.kernel, model.points);
  const Matrix coef = expansion_coefficients(model.alpha);
  WNorms norms;
  norms.per_class = (coef.transpose() * gram.entries() * coef).diagonal();
  norms.total = norms.per_class.sum();
  return norms;
}

SlackReport slack_vector(const TrainedModel& model) {
  if (!model.C) throw InvalidArgument("hard-margin model has no slacks");
  const double c = *model.C;
  SlackReport report;
  report.xi = model.alpha / (2.0 * c);
  const Matrix m_xi = center_rows(report.xi);
  report.residual = (2.0 * c * m_xi - model.alpha).cwiseAbs().maxCoeff();
  report.range_residual =
      (2.0 * c * m_xi - center_rows(model.alpha)).cwiseAbs().maxCoeff();

  const GramMatrix base = build_gram(model.kernel.with_diagonal_offset(0.0), model.points);
  const Matrix coef = expansion_coefficients(model.alpha);
  const double w_sq = (coef.transpose() * base.entries() * coef).trace();
  report.primal_objective = 0.5 * w_sq + c * report.xi.cwiseProduct(m_xi).sum();
  return report;
}

}  // namespace msvm2
