#include "msvm2/dual_qp.hpp"

#include "msvm2/error.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <sstream>

namespace msvm2 {
namespace {

using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

constexpr double kInf = std::numeric_limits<double>::infinity();

Mask eligible_mask(const DualProblem& problem) {
  Mask mask = Mask::Constant(problem.size(), problem.num_classes(), true);
  for (Eigen::Index i = 0; i < problem.size(); ++i) {
    mask(i, problem.label(i)) = false;
  }
  return mask;
}

// Equality multipliers mu (summing to zero) fitted by least squares on the
// gradient entries in `support`. A column with no support coordinate only
// occurs at alpha = 0; its multiplier is chosen as small as the sign
// conditions of its bound coordinates allow.
Vector fit_multipliers(const Matrix& grad, const Mask& eligible,
                       const Mask& support) {
  const Eigen::Index m = grad.rows();
  const Eigen::Index q = grad.cols();
  Eigen::VectorXi count = Eigen::VectorXi::Zero(q);
  Vector colsum = Vector::Zero(q);
  Vector bound_max = Vector::Constant(q, -kInf);
  for (Eigen::Index k = 0; k < q; ++k) {
    for (Eigen::Index i = 0; i < m; ++i) {
      if (!eligible(i, k)) continue;
      if (support(i, k)) {
        ++count[k];
        colsum[k] += grad(i, k);
      } else {
        bound_max[k] = std::max(bound_max[k], grad(i, k));
      }
    }
  }

  Vector mu(q);
  if ((count.array() > 0).all()) {
    double weighted = 0.0;
    double inv_total = 0.0;
    for (Eigen::Index k = 0; k < q; ++k) {
      weighted += colsum[k] / count[k];
      inv_total += 1.0 / count[k];
    }
    const double level = weighted / inv_total;
    for (Eigen::Index k = 0; k < q; ++k) mu[k] = (colsum[k] - level) / count[k];
    return mu;
  }

  double remainder = 0.0;
  std::vector<Eigen::Index> bounded;
  std::vector<Eigen::Index> unconstrained;
  for (Eigen::Index k = 0; k < q; ++k) {
    if (count[k] > 0) {
      mu[k] = colsum[k] / count[k];
      remainder -= mu[k];
    } else if (std::isfinite(bound_max[k])) {
      bounded.push_back(k);
    } else {
      unconstrained.push_back(k);
    }
  }
  if (!unconstrained.empty()) {
    for (auto k : bounded) {
      mu[k] = bound_max[k];
      remainder -= mu[k];
    }
    for (auto k : unconstrained) {
      mu[k] = remainder / static_cast<double>(unconstrained.size());
    }
  } else {
    double floor_sum = 0.0;
    for (auto k : bounded) floor_sum += bound_max[k];
    const double shift =
        (remainder - floor_sum) / static_cast<double>(bounded.size());
    for (auto k : bounded) mu[k] = bound_max[k] + shift;
  }
  return mu;
}

KktReport make_report(const DualProblem& problem, const Matrix& alpha,
                      const Matrix& h_alpha, const Mask& eligible) {
  const Eigen::Index m = problem.size();
  const int q = problem.num_classes();
  const double target = problem.margin_target();

  KktReport report;
  const double mean_col = alpha.sum() / q;
  report.equality_residual =
      (alpha.colwise().sum().transpose().array() - mean_col).abs().matrix();

  Matrix grad = (-h_alpha).array() + target;
  Mask support = eligible && (alpha.array() > 0.0);
  report.multipliers = fit_multipliers(grad, eligible, support);

  report.min_coordinate = kInf;
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index k = 0; k < q; ++k) {
      const double a = alpha(i, k);
      if (!eligible(i, k)) {
        report.pinned_residual = std::max(report.pinned_residual, std::abs(a));
        continue;
      }
      report.min_coordinate = std::min(report.min_coordinate, a);
      const double r = grad(i, k) - report.multipliers[k];
      report.stationarity =
          std::max(report.stationarity, a > 0.0 ? std::abs(r) : std::max(r, 0.0));
      report.complementary_slackness =
          std::max(report.complementary_slackness, a * std::abs(r));
    }
  }
  if (!std::isfinite(report.min_coordinate)) report.min_coordinate = 0.0;
  return report;
}

// Exact maximiser of J on the current face, as a step from alpha: solves
//   H_FF d + A' nu = grad_F,  A d = 0
// over the free coordinates F, where A encodes equal column sums. Dense, so
// only used when conjugate gradients stall.
Matrix face_newton_step(const DualProblem& problem, const Matrix& grad, const Mask& free) {
  const Eigen::Index m = problem.size();
  const int q = problem.num_classes();
  std::vector<std::pair<Eigen::Index, int>> coords;
  for (Eigen::Index i = 0; i < m; ++i) {
    for (int k = 0; k < q; ++k) {
      if (free(i, k)) coords.emplace_back(i, k);
    }
  }
  const auto nf = static_cast<Eigen::Index>(coords.size());
  const Eigen::Index size = nf + q - 1;
  Matrix kkt = Matrix::Zero(size, size);
  Vector rhs = Vector::Zero(size);
  const Matrix& gram = problem.gram().entries();
  const double inv_q = 1.0 / q;
  for (Eigen::Index a = 0; a < nf; ++a) {
    const auto [i, k] = coords[static_cast<std::size_t>(a)];
    for (Eigen::Index b = a; b < nf; ++b) {
      const auto [j, l] = coords[static_cast<std::size_t>(b)];
      const double h = ((k == l ? 1.0 : 0.0) - inv_q) * gram(i, j);
      kkt(a, b) = h;
      kkt(b, a) = h;
    }
    for (int c = 0; c < q - 1; ++c) {
      const double coef = (k == c ? 1.0 : 0.0) - (k == q - 1 ? 1.0 : 0.0);
      kkt(a, nf + c) = coef;
      kkt(nf + c, a) = coef;
    }
    rhs[a] = grad(i, k);
  }
  const Vector solution = kkt.completeOrthogonalDecomposition().solve(rhs);
  Matrix step = Matrix::Zero(m, q);
  for (Eigen::Index a = 0; a < nf; ++a) {
    const auto [i, k] = coords[static_cast<std::size_t>(a)];
    step(i, k) = solution[a];
  }
  return step;
}

double objective_from(const Matrix& alpha, const Matrix& h_alpha, double target) {
  return -0.5 * alpha.cwiseProduct(h_alpha).sum() + target * alpha.sum();
}

}  // namespace

DualProblem::DualProblem(GramMatrix gram, std::vector<int> labels,
                         int num_classes)
    : gram_(std::move(gram)), labels_(std::move(labels)),
      num_classes_(num_classes) {
  if (num_classes_ < 2) throw InvalidArgument("a dual problem needs Q >= 2 classes");
  if (static_cast<Eigen::Index>(labels_.size()) != gram_.order()) {
    throw InvalidArgument("label count does not match Gram order");
  }
  if (gram_.order() == 0) throw InvalidArgument("empty dual problem");
  for (int y : labels_) {
    if (y < 0 || y >= num_classes_) {
      throw InvalidArgument("label " + std::to_string(y) + " outside [0, Q)");
    }
  }
}

Matrix hessian_product(const DualProblem& problem, const Matrix& alpha) {
  if (alpha.rows() != problem.size() || alpha.cols() != problem.num_classes()) {
    throw InvalidArgument("alpha must be an m x Q matrix");
  }
  const Vector row_mean = alpha.rowwise().mean();
  const Matrix centered = alpha.colwise() - row_mean;
  return problem.gram().entries() * centered;
}

double dual_objective(const DualProblem& problem, const Matrix& alpha) {
  return objective_from(alpha, hessian_product(problem, alpha),
                        problem.margin_target());
}

double KktReport::max_residual() const {
  double worst = std::max({stationarity, pinned_residual, std::max(-min_coordinate, 0.0)});
  if (equality_residual.size() > 0) {
    worst = std::max(worst, equality_residual.maxCoeff());
  }
  return worst;
}

KktReport kkt_report(const DualProblem& problem, const Matrix& alpha) {
  return make_report(problem, alpha, hessian_product(problem, alpha),
                     eligible_mask(problem));
}

DualSolution solve_dual(const DualProblem& problem, const SolverOptions& options) {
  if (!(options.tol > 0.0)) throw InvalidArgument("solver tolerance must be > 0");
  const Eigen::Index m = problem.size();
  const int q = problem.num_classes();
  const double target = problem.margin_target();
  const double tol = options.tol * target;
  const long max_iter =
      options.max_iter > 0 ? options.max_iter : 100L * q * static_cast<long>(m);

  const Mask eligible = eligible_mask(problem);
  // Coordinates allowed to move; the complement (within eligible) is the
  // working set of active bounds, held at exactly zero.
  Mask free = eligible;

  const double gram_scale =
      std::max(problem.gram().entries().diagonal().cwiseAbs().maxCoeff(), 1e-300);

  DualSolution solution;
  Matrix alpha = Matrix::Zero(m, q);
  Matrix h_alpha = Matrix::Zero(m, q);
  Matrix direction = Matrix::Zero(m, q);
  Matrix previous_reduced = Matrix::Zero(m, q);
  double previous_pp = 0.0;
  double objective = 0.0;
  bool restart = true;
  bool face_stalled = false;
  bool face_newton_done = false;
  long face_steps = 0;
  long since_refresh = 0;
  // (objective, lowest face residual so far) after each in-face step of the
  // current face.
  std::deque<std::pair<double, double>> recent;

  const auto new_face = [&] {
    restart = true;
    face_stalled = false;
    face_newton_done = false;
    face_steps = 0;
    recent.clear();
  };

  long iter = 0;
  for (; iter < max_iter; ++iter) {
    const Matrix grad = (-h_alpha).array() + target;
    const Vector mu = fit_multipliers(grad, eligible, free);

    Matrix reduced = grad.rowwise() - mu.transpose();
    double face_residual = 0.0;
    double bound_violation = 0.0;
    Eigen::Index release_i = -1;
    Eigen::Index release_k = -1;
    for (Eigen::Index i = 0; i < m; ++i) {
      for (Eigen::Index k = 0; k < q; ++k) {
        const double r = reduced(i, k);
        if (!eligible(i, k)) {
          reduced(i, k) = 0.0;
        } else if (free(i, k)) {
          face_residual = std::max(face_residual, std::abs(r));
        } else {
          reduced(i, k) = 0.0;
          if (r > bound_violation) {
            bound_violation = r;
            release_i = i;
            release_k = k;
          }
        }
      }
    }

    // Conjugate gradients finish a face in at most dim(F) exact steps; past
    // that, or once stalled, one direct solve on the face.
    const bool want_newton =
        !face_newton_done && (face_stalled || face_steps > free.count() + options.stall_window);
    if (face_residual <= tol || (face_stalled && face_newton_done)) {
      if (bound_violation > tol) {
        free(release_i, release_k) = true;
        new_face();
        continue;
      }
      const KktReport report = make_report(problem, alpha, h_alpha, eligible);
      if (report.max_residual() <= tol || face_stalled) break;
      // Zero coordinates left in the free set can bias the multiplier fit;
      // bind them and retry before giving up.
      const Mask stray = free && (alpha.array() == 0.0);
      if (!stray.any()) break;
      free = free && !stray;
      new_face();
      continue;
    }

    const double pp = reduced.squaredNorm();
    ++face_steps;
    if (want_newton) {
      direction = face_newton_step(problem, grad, free);
      face_newton_done = true;
      face_stalled = false;
      restart = true;
      recent.clear();
    } else if (restart || previous_pp <= 0.0) {
      direction = reduced;
    } else {
      // Polak-Ribiere, restarted on a negative coefficient.
      const double beta =
          std::max(0.0, reduced.cwiseProduct(reduced - previous_reduced).sum() / previous_pp);
      direction = reduced + beta * direction;
      // Rounding in the recurrence leaves the equality subspace and beta
      // amplifies it; project the combination back.
      direction.rowwise() -= fit_multipliers(direction, eligible, free).transpose();
      direction = free.select(direction, 0.0);
    }
    restart = false;
    previous_pp = pp;
    previous_reduced = reduced;

    double slope = grad.cwiseProduct(direction).sum();
    if (!(slope > 0.0)) {
      direction = reduced;
      slope = pp;
    }
    const Matrix h_dir = hessian_product(problem, direction);
    const double curvature = direction.cwiseProduct(h_dir).sum();
    const double dir_sq = direction.squaredNorm();
    if (curvature < -1e-10 * gram_scale * dir_sq) {
      throw NumericalError(
          "negative curvature in the dual objective: the Gram matrix is not "
          "positive semidefinite");
    }
    const double step_opt =
        curvature > 1e-14 * gram_scale * dir_sq ? slope / curvature : kInf;

    double step_max = kInf;
    for (Eigen::Index i = 0; i < m; ++i) {
      for (Eigen::Index k = 0; k < q; ++k) {
        if (free(i, k) && direction(i, k) < 0.0) {
          step_max = std::min(step_max, alpha(i, k) / -direction(i, k));
        }
      }
    }
    const double step = std::min(step_opt, step_max);
    if (!std::isfinite(step)) {
      throw NumericalError(
          "the dual objective is unbounded: the training data are not "
          "separable by the hard-margin machine (use a finite C)");
    }

    const bool blocked = step_max <= step_opt;
    const Matrix before = alpha;
    alpha += step * direction;
    if (blocked) {
      for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index k = 0; k < q; ++k) {
          if (!free(i, k) || direction(i, k) >= 0.0) continue;
          const double ratio = before(i, k) / -direction(i, k);
          if (ratio <= step_max || alpha(i, k) <= 0.0) {
            alpha(i, k) = 0.0;
            free(i, k) = false;
          }
        }
      }
    }
    if (blocked || ++since_refresh >= 64) {
      h_alpha = hessian_product(problem, alpha);
      since_refresh = 0;
    } else {
      h_alpha += step * h_dir;
    }
    if (alpha.maxCoeff() > 1e15) {
      throw NumericalError(
          "dual variables diverge: the training data are not separable by "
          "the hard-margin machine (use a finite C)");
    }

    objective = objective_from(alpha, h_alpha, target);
    if (options.record_trace) solution.objective_trace.push_back(objective);

    // A face is abandoned as solved when the objective is flat to working
    // precision over the window and the face residual has not reached a new
    // low. The objective test alone fires long before the gradient is small,
    // since in-face gains near the optimum are quadratic in the residual.
    if (blocked) {
      new_face();
    } else if (step > 0.0) {
      const double best = recent.empty()
                              ? face_residual
                              : std::min(face_residual, recent.back().second);
      recent.emplace_back(objective, best);
      if (static_cast<int>(recent.size()) > options.stall_window) {
        const double gain = objective - recent.front().first;
        const bool no_new_low = recent.back().second >= recent.front().second;
        recent.pop_front();
        face_stalled =
            gain <= options.stall_relative_change * std::abs(objective) && no_new_low;
      }
    }
  }

  h_alpha = hessian_product(problem, alpha);
  const KktReport report = make_report(problem, alpha, h_alpha, eligible);
  solution.alpha = std::move(alpha);
  solution.objective = objective_from(solution.alpha, h_alpha, target);
  solution.kkt_residual = report.max_residual();
  solution.iterations = iter;
  solution.converged = solution.kkt_residual <= tol;
  return solution;
}

}  // namespace msvm2
