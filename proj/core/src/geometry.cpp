#include "msvm2/geometry.hpp"

#include "msvm2/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace msvm2 {

double d_base(int num_classes) {
  if (num_classes < 2) throw InvalidArgument("d_base needs Q >= 2");
  return static_cast<double>(num_classes) / (num_classes - 1);
}

double NormChain::max_relative_gap() const {
  const std::array<double, 4> v{lhs_margin_sum, sum_wk_sq, alpha_H_alpha, alpha_sum_term};
  double worst = 0.0;
  for (std::size_t a = 0; a < v.size(); ++a) {
    for (std::size_t b = a + 1; b < v.size(); ++b) {
      const double scale = std::max({std::abs(v[a]), std::abs(v[b]), 1e-300});
      worst = std::max(worst, std::abs(v[a] - v[b]) / scale);
    }
  }
  return worst;
}

double w_diff_sq(const Matrix& alpha, const Matrix& gram, int k, int l) {
  const Vector diff = alpha.col(l) - alpha.col(k);
  return diff.dot(gram * diff);
}

MarginReport compute_margins(const TrainedModel& model) {
  const int q = model.num_classes();
  const Eigen::Index m = model.size();
  const Matrix scores = training_scores(model);

  MarginReport report;
  report.d = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < m; ++i) {
    const int y = model.labels[static_cast<std::size_t>(i)];
    for (int l = 0; l < q; ++l) {
      if (l == y) continue;
      const double gap = scores(i, y) - scores(i, l);
      if (!(gap > 0.0)) {
        throw InvalidArgument("margins are undefined: training point " +
                              std::to_string(i) + " is misclassified");
      }
      report.d = std::min(report.d, gap);
    }
  }
  report.d_reference = d_base(q);

  const GramMatrix gram = build_gram(model.kernel, model.points);
  for (int k = 0; k < q; ++k) {
    for (int l = k + 1; l < q; ++l) {
      PairMargin pair;
      pair.k = k;
      pair.l = l;
      pair.min_gap = std::numeric_limits<double>::infinity();
      bool seen = false;
      for (Eigen::Index i = 0; i < m; ++i) {
        const int y = model.labels[static_cast<std::size_t>(i)];
        if (y == k) {
          pair.min_gap = std::min(pair.min_gap, scores(i, k) - scores(i, l));
          seen = true;
        } else if (y == l) {
          pair.min_gap = std::min(pair.min_gap, scores(i, l) - scores(i, k));
          seen = true;
        }
      }
      if (!seen) {
        throw InvalidArgument("no training point in class pair (" +
                              std::to_string(k) + ", " + std::to_string(l) + ")");
      }
      pair.d_kl = (pair.min_gap - report.d_reference) / report.d_reference;
      pair.w_diff_norm = std::sqrt(std::max(w_diff_sq(model.alpha, gram.entries(), k, l), 0.0));
      if (pair.w_diff_norm > 0.0) {
        pair.gamma = report.d_reference * (1.0 + pair.d_kl) / pair.w_diff_norm;
        const double ratio = (1.0 + pair.d_kl) / pair.gamma;
        report.margin_sum += ratio * ratio;
      } else {
        pair.gamma = std::numeric_limits<double>::infinity();
      }
      report.pairs.push_back(pair);
    }
  }

  const DualProblem problem(gram, model.labels, q);
  const double qd = static_cast<double>(q);
  report.chain.lhs_margin_sum = qd / ((qd - 1.0) * (qd - 1.0)) * report.margin_sum;
  report.chain.sum_wk_sq = wk_norms(model).total;
  report.chain.alpha_H_alpha =
      model.alpha.cwiseProduct(hessian_product(problem, model.alpha)).sum();
  report.chain.alpha_sum_term = model.alpha.sum() / (qd - 1.0);
  return report;
}

PairwiseNormCheck pairwise_norm_check(const TrainedModel& model) {
  const int q = model.num_classes();
  const GramMatrix gram = build_gram(model.kernel, model.points);
  PairwiseNormCheck check;
  for (int k = 0; k < q; ++k) {
    for (int l = k + 1; l < q; ++l) {
      check.lhs += w_diff_sq(model.alpha, gram.entries(), k, l);
    }
  }
  const DualProblem problem(gram, model.labels, q);
  check.rhs = q * model.alpha.cwiseProduct(hessian_product(problem, model.alpha)).sum();
  return check;
}

Vector center_distances_sq(const Matrix& gram, const Vector& weights) {
  const Vector g_beta = gram * weights;
  const double quad = weights.dot(g_beta);
  return (gram.diagonal() - 2.0 * g_beta).array() + quad;
}

BallResult min_enclosing_ball(const GramMatrix& gram, const BallOptions& options) {
  const Eigen::Index m = gram.order();
  if (m == 0) throw InvalidArgument("minimum enclosing ball of zero points");
  const Matrix& g = gram.entries();
  if (!is_psd(g)) throw NumericalError("Gram matrix is not positive semidefinite");
  const double scale = std::max(g.diagonal().cwiseAbs().maxCoeff(), 1e-300);

  BallResult ball;
  Vector beta = Vector::Constant(m, 1.0 / static_cast<double>(m));
  Vector g_beta = g * beta;
  long iter = 0;
  double radius_sq = 0.0;
  double gap = 0.0;
  for (;; ++iter) {
    if (iter % 1024 == 1023) g_beta = g * beta;
    const double quad = beta.dot(g_beta);
    const Vector dist = (g.diagonal() - 2.0 * g_beta).array() + quad;
    radius_sq = beta.dot(dist);

    Eigen::Index far = 0;
    dist.maxCoeff(&far);
    gap = dist[far] - radius_sq;
    if (gap <= options.tol * (1.0 + std::abs(radius_sq)) || iter >= options.max_iter) break;

    Eigen::Index near = -1;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (beta[i] > 0.0 && (near < 0 || dist[i] < dist[near])) near = i;
    }
    const double curvature = g(far, far) - 2.0 * g(far, near) + g(near, near);
    if (curvature < -1e-10 * scale) {
      throw NumericalError("Gram matrix is not positive semidefinite");
    }
    const double slope = dist[far] - dist[near];
    double step = beta[near];
    if (curvature > 0.0) step = std::min(step, slope / (2.0 * curvature));
    if (!(step > 0.0)) break;

    beta[far] += step;
    if (step == beta[near]) {
      beta[near] = 0.0;
    } else {
      beta[near] -= step;
    }
    g_beta += step * (g.col(far) - g.col(near));
  }

  g_beta = g * beta;
  const Vector dist = center_distances_sq(g, beta);
  radius_sq = std::max(beta.dot(dist), 0.0);
  ball.certificate_gap = dist.maxCoeff() - radius_sq;
  ball.weights = std::move(beta);
  ball.radius = std::sqrt(radius_sq);
  ball.diameter = 2.0 * ball.radius;
  ball.squared_diameter = 4.0 * radius_sq;
  ball.iterations = iter;
  return ball;
}

}  // namespace msvm2
