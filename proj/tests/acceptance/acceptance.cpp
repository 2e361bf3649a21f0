// Acceptance run: one PASS/FAIL line per criterion.
//
//   msvm2_acceptance            run all criteria
//   msvm2_acceptance --only N   run criterion N
//
// Exit status is 0 only when every selected criterion passes.

#include "generators.hpp"
#include "oracles.hpp"

#include "msvm2/error.hpp"
#include "msvm2/geometry.hpp"
#include "msvm2/model_io.hpp"
#include "msvm2/report.hpp"
#include "msvm2/selection.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace msvm2;
using testing::gaussian_blobs;
using testing::random_points;
using testing::uniform;

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string fmt(const char* pattern, auto... args) {
  char buffer[512];
  std::snprintf(buffer, sizeof buffer, pattern, args...);
  return buffer;
}

TrainOptions soft(double C) {
  TrainOptions o;
  o.C = C;
  return o;
}

double relative_gap(double a, double b) {
  return std::abs(a - b) / std::max(std::abs(a), std::abs(b));
}

// The blob suite: Q in {3, 4}, C in {0.5, 5, 50}, gamma in {0.2, 1}, two
// seeds, m = 60.
struct SuiteEntry {
  std::string name;
  Dataset data;
  KernelSpec kernel = KernelSpec::linear();
  double C = 0.0;
};

std::vector<SuiteEntry> blob_suite() {
  std::vector<SuiteEntry> suite;
  for (std::uint64_t seed : {11u, 12u}) {
    for (int q : {3, 4}) {
      const Dataset data = gaussian_blobs(seed * 10 + q, q, 60 / q, 2, 2.5, 1.0);
      for (double C : {0.5, 5.0, 50.0}) {
        for (double gamma : {0.2, 1.0}) {
          suite.push_back({fmt("seed=%d Q=%d C=%g gamma=%g", static_cast<int>(seed), q, C, gamma),
                           data, KernelSpec::gaussian(gamma), C});
        }
      }
    }
  }
  return suite;
}

// Extra converged models: random labels, assorted kernels, plus hard-margin
// machines under Gaussian kernels (distinct points are always separable).
std::vector<TrainedModel> random_models() {
  std::vector<TrainedModel> models;
  std::mt19937_64 rng(900);
  for (int t = 0; t < 20; ++t) {
    const int q = 2 + t % 4;
    const Dataset data = testing::random_labelled(900 + t, q, 8 + t, 1 + t % 4);
    const KernelSpec kernel = t % 3 == 0   ? KernelSpec::linear()
                              : t % 3 == 1 ? KernelSpec::gaussian(uniform(rng, 0.2, 3.0))
                                           : KernelSpec::polynomial(2, 0.5, 1.0);
    models.push_back(train(data, kernel, soft(uniform(rng, 0.1, 30.0))));
  }
  for (int t = 0; t < 6; ++t) {
    const Dataset data = gaussian_blobs(950 + t, 3 + t % 2, 8, 2, 6.0, 0.5);
    models.push_back(train(data, KernelSpec::gaussian(t % 2 ? 2.0 : 0.5), {}));
  }
  return models;
}

std::vector<TrainedModel> suite_models(const std::vector<SuiteEntry>& suite) {
  std::vector<TrainedModel> models;
  for (const SuiteEntry& e : suite) models.push_back(train(e.data, e.kernel, soft(e.C)));
  return models;
}

std::vector<TrainedModel> all_models() {
  std::vector<TrainedModel> models = suite_models(blob_suite());
  for (TrainedModel& m : random_models()) models.push_back(std::move(m));
  return models;
}

Outcome criterion_1() {
  Outcome out;
  std::mt19937_64 rng(100);
  int instances = 0;
  double worst_obj = 0.0, worst_kkt = 0.0;
  for (int t = 0; t < 60; ++t) {
    const int q = 2 + t % 3;
    const int m = 3 + static_cast<int>(rng() % static_cast<std::uint64_t>(std::min(15, 60 / q) - 2));
    const Dataset data = testing::random_labelled(100 + t, q, m, 1 + t % 4);
    const double offset = 1.0 / (2.0 * uniform(rng, 0.1, 50.0));
    const KernelSpec kernel = t % 2 ? KernelSpec::gaussian(uniform(rng, 0.1, 4.0), offset)
                                    : KernelSpec::linear(offset);
    const GramMatrix gram = build_gram(kernel, data.points);
    const DualProblem problem(gram, data.labels, q);
    const DualSolution s = solve_dual(problem);
    const auto oracle = testing::multiclass_dual_oracle(gram.entries(), data.labels, q);
    ++instances;
    const double obj_gap = std::abs(s.objective - oracle.objective) / (1.0 + std::abs(oracle.objective));
    const double kkt = kkt_report(problem, s.alpha).max_residual();
    worst_obj = std::max(worst_obj, obj_gap);
    worst_kkt = std::max(worst_kkt, kkt);
    if (!s.converged || !oracle.converged || obj_gap > 1e-6 || kkt > 1e-8) out.pass = false;
  }
  out.detail = fmt("%d instances, worst objective gap %.2e (<= 1e-6), worst KKT residual %.2e (<= 1e-8)",
                   instances, worst_obj, worst_kkt);
  return out;
}

Outcome criterion_2() {
  Outcome out;
  double worst = 0.0;
  int count = 0;
  for (const TrainedModel& model : all_models()) {
    if (!model.solver.converged) continue;
    const MarginReport r = compute_margins(model);
    worst = std::max(worst, r.chain.max_relative_gap());
    ++count;
  }
  out.pass = count > 0 && worst <= 1e-6;
  out.detail = fmt("%d converged models, worst pairwise relative gap %.2e (<= 1e-6)", count, worst);
  return out;
}

Outcome criterion_3() {
  Outcome out;
  double worst = 0.0;
  int count = 0;
  for (const TrainedModel& model : all_models()) {
    const PairwiseNormCheck c = pairwise_norm_check(model);
    worst = std::max(worst, relative_gap(c.lhs, c.rhs));
    ++count;
  }
  out.pass = worst <= 1e-8;
  out.detail = fmt("%d models, worst relative gap %.2e (<= 1e-8)", count, worst);
  return out;
}

struct BoundRun {
  int configs = 0;
  int violations = 0;
  int loo_errors = 0;
  int lemma_violations = 0;
  double worst_lemma_margin = 1e300;
  double seconds = 0.0;
  std::string first_violation;
};

BoundRun bound_suite() {
  BoundRun run;
  const auto start = std::chrono::steady_clock::now();
  for (const SuiteEntry& e : blob_suite()) {
    const TrainedModel model = train(e.data, e.kernel, soft(e.C));
    BoundReport report = radius_margin_bound(model);
    const LooResult loo = exact_loo(e.data, e.kernel, soft(e.C));
    attach_loo(report, model, loo);
    ++run.configs;
    run.loo_errors += loo.error_count;
    if (loo.error_count > report.bound_value + 1e-6) {
      ++run.violations;
      if (run.first_violation.empty()) run.first_violation = e.name;
    }
    for (const KeyLemmaEntry& k : report.key_lemma) {
      run.worst_lemma_margin = std::min(run.worst_lemma_margin, k.max_alpha - k.threshold);
      if (k.max_alpha < k.threshold - 1e-9) ++run.lemma_violations;
    }
  }
  run.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return run;
}

Outcome criterion_4() {
  const BoundRun run = bound_suite();
  Outcome out;
  out.pass = run.configs >= 20 && run.violations == 0 && run.seconds <= 300.0;
  out.detail = fmt("%d configurations, %d violations of loo <= bound, %d LOO errors in total, %.1f s (<= 300 s)",
                   run.configs, run.violations, run.loo_errors, run.seconds);
  if (!run.first_violation.empty()) out.detail += "; first violation at " + run.first_violation;
  return out;
}

Outcome criterion_5() {
  const BoundRun run = bound_suite();
  Outcome out;
  out.pass = run.lemma_violations == 0 && run.loo_errors > 0;
  out.detail = fmt("%d LOO errors checked, %d violations, smallest max_k alpha - threshold %.3e",
                   run.loo_errors, run.lemma_violations,
                   run.loo_errors > 0 ? run.worst_lemma_margin : 0.0);
  return out;
}

Outcome criterion_6() {
  Outcome out;
  std::mt19937_64 rng(600);
  int instances = 0;
  long checked = 0, mismatches = 0;
  double smallest_decision = 1e300;
  for (int t = 0; t < 25; ++t) {
    const int m = 6 + static_cast<int>(rng() % 25);
    const int dim = 1 + t % 3;
    const Dataset data = testing::random_labelled(600 + t, 2, m, dim);
    const double C = uniform(rng, 0.1, 20.0);
    const KernelSpec base = t % 2 ? KernelSpec::gaussian(uniform(rng, 0.3, 3.0)) : KernelSpec::linear();
    const TrainedModel model = train(data, base, soft(C));

    Eigen::VectorXd signs(m);
    for (int i = 0; i < m; ++i) signs[i] = data.labels[static_cast<std::size_t>(i)] == 0 ? 1.0 : -1.0;
    const auto binary =
        testing::binary_svm(build_gram(base.with_diagonal_offset(1.0 / (2.0 * C)), data.points).entries(), signs);
    if (!binary.converged) out.pass = false;

    PointMatrix queries(m + 100, dim);
    queries << data.points, random_points(rng, 100, dim) * 1.5;
    const Matrix k = cross_gram(base, data.points, queries);
    const std::vector<int> labels = predict_labels(model, queries);
    for (Eigen::Index r = 0; r < queries.rows(); ++r) {
      const double f = binary.decision(k.col(r));
      smallest_decision = std::min(smallest_decision, std::abs(f));
      const int expected = f > 0 ? 0 : (f < 0 ? 1 : kDummy);
      ++checked;
      if (labels[static_cast<std::size_t>(r)] != expected) ++mismatches;
    }
    ++instances;
  }
  out.pass = out.pass && instances >= 20 && mismatches == 0;
  out.detail = fmt("%d binary instances, %ld predictions compared, %ld mismatches, smallest |decision| %.2e",
                   instances, checked, mismatches, smallest_decision);
  return out;
}

Outcome criterion_7() {
  Outcome out;
  std::mt19937_64 rng(700);
  double worst_alpha = 0.0, worst_slack = 0.0, worst_range = 0.0;
  long prediction_mismatches = 0;
  int count = 0;
  for (int t = 0; t < 12; ++t) {
    const int q = 2 + t % 3;
    const Dataset data = gaussian_blobs(700 + t, q, 8, 2, 2.0, 1.0);
    const double C = std::pow(10.0, uniform(rng, -1.0, 1.5));
    const KernelSpec base = t % 2 ? KernelSpec::gaussian(0.7) : KernelSpec::linear();
    const TrainedModel soft_model = train(data, base, soft(C));

    // Hard-margin machine on the changed kernel, assembled directly.
    TrainedModel hard;
    hard.kernel = base.with_diagonal_offset(1.0 / (2.0 * C));
    hard.points = data.points;
    hard.labels = data.labels;
    hard.categories = data.categories;
    const DualProblem problem(build_gram(hard.kernel, data.points), data.labels, q);
    hard.alpha = solve_dual(problem).alpha;
    hard.bias = recover_biases(problem, hard.alpha);

    worst_alpha = std::max(worst_alpha, (soft_model.alpha - hard.alpha).lpNorm<Eigen::Infinity>());
    PointMatrix queries(data.size() + 50, 2);
    queries << data.points, random_points(rng, 50, 2) * 3.0;
    const auto a = predict_labels(soft_model, queries);
    const auto b = predict_labels(hard, queries);
    for (std::size_t i = 0; i < a.size(); ++i) prediction_mismatches += a[i] != b[i];

    const SlackReport s = slack_vector(soft_model);
    worst_slack = std::max(worst_slack, s.residual);
    worst_range = std::max(worst_range, s.range_residual);
    ++count;
  }
  const bool identity = worst_alpha <= 1e-7 && prediction_mismatches == 0;
  const bool slack = worst_slack <= 1e-9;
  out.pass = identity && slack;
  out.detail = fmt("%d models: alpha gap %.2e (<= 1e-7) and %ld prediction mismatches [%s]; "
                   "slack residual |2C M xi - alpha|_inf %.3e (<= 1e-9) [%s], "
                   "restricted to the range of M %.2e",
                   count, worst_alpha, prediction_mismatches, identity ? "ok" : "FAIL", worst_slack,
                   slack ? "ok" : "FAIL", worst_range);
  return out;
}

Outcome criterion_8() {
  Outcome out;
  // Containment on every Gram of the model suite and on random sets.
  double worst_cert = 0.0;
  int balls = 0;
  for (const TrainedModel& model : all_models()) {
    const GramMatrix g = build_gram(model.kernel, model.points);
    const BallResult b = min_enclosing_ball(g);
    const Vector dist = center_distances_sq(g.entries(), b.weights);
    worst_cert = std::max(worst_cert, dist.maxCoeff() - b.radius * b.radius);
    ++balls;
  }
  // Analytic configurations.
  double worst_analytic = 0.0;
  {
    const BallResult one = min_enclosing_ball(GramMatrix(Matrix::Constant(1, 1, 2.0), 0.0));
    worst_analytic = std::max(worst_analytic, std::abs(one.radius));
    PointMatrix two(2, 3);
    two << 0.0, 1.0, 0.0, 0.0, -1.0, 0.0;
    const BallResult b2 = min_enclosing_ball(build_gram(KernelSpec::linear(), two));
    worst_analytic = std::max({worst_analytic, std::abs(b2.radius - 1.0), std::abs(b2.weights[0] - 0.5)});
    PointMatrix tri(3, 2);
    tri << 0.0, 0.0, 1.0, 0.0, 0.5, std::sqrt(3.0) / 2.0;
    const BallResult b3 = min_enclosing_ball(build_gram(KernelSpec::linear(), tri));
    worst_analytic = std::max(worst_analytic, std::abs(b3.radius - 1.0 / std::sqrt(3.0)));
    for (int i = 0; i < 3; ++i) worst_analytic = std::max(worst_analytic, std::abs(b3.weights[i] - 1.0 / 3.0));
  }
  // Exhaustive search, m <= 8 in the plane.
  std::mt19937_64 rng(800);
  double worst_brute = 0.0;
  int brute = 0;
  for (int t = 0; t < 60; ++t) {
    const Eigen::Index m = 1 + static_cast<Eigen::Index>(rng() % 8);
    const PointMatrix p = random_points(rng, m, 2) * uniform(rng, 0.2, 10.0);
    const GramMatrix g = build_gram(KernelSpec::linear(), p);
    const BallResult b = min_enclosing_ball(g);
    const testing::BruteBall exact = testing::brute_force_ball(p);
    worst_brute = std::max(worst_brute, std::abs(b.radius - exact.radius));
    const Vector dist = center_distances_sq(g.entries(), b.weights);
    worst_cert = std::max(worst_cert, dist.maxCoeff() - b.radius * b.radius);
    ++brute;
    ++balls;
  }
  out.pass = worst_cert <= 1e-8 && worst_analytic <= 1e-6 && worst_brute <= 1e-6;
  out.detail = fmt("%d balls, worst containment excess %.2e (<= 1e-8); analytic error %.2e, "
                   "exhaustive-search error %.2e over %d sets (<= 1e-6)",
                   balls, worst_cert, worst_analytic, worst_brute, brute);
  return out;
}

Outcome criterion_9() {
  Outcome out;
  double worst = -1e300;
  long training_errors = 0;
  int count = 0;
  for (const TrainedModel& model : all_models()) {
    if (!model.solver.converged) continue;
    const Matrix h = training_scores(model);
    const double target = -1.0 / (model.num_classes() - 1);
    for (Eigen::Index i = 0; i < model.size(); ++i) {
      const int y = model.labels[static_cast<std::size_t>(i)];
      for (int k = 0; k < model.num_classes(); ++k) {
        if (k != y) worst = std::max(worst, h(i, k) - target);
      }
      training_errors += argmax_label(h.row(i).transpose()) != y;
    }
    ++count;
  }
  out.pass = worst <= 1e-6 && training_errors == 0;
  out.detail = fmt("%d converged models, worst h_k(x_i) + 1/(Q-1) = %.2e (<= 1e-6), %ld training errors",
                   count, worst, training_errors);
  return out;
}

Outcome criterion_10() {
  Outcome out;
  std::vector<std::string> failures;
  const Dataset data = gaussian_blobs(1000, 3, 10, 2, 2.5, 1.0);
  const KernelSpec kernel = KernelSpec::gaussian(0.5);

  const TrainedModel a = train(data, kernel, soft(5.0));
  const TrainedModel b = train(data, kernel, soft(5.0));
  if (model_to_json(a) != model_to_json(b)) failures.push_back("model documents differ");

  LooOptions one, many;
  one.threads = 1;
  many.threads = 4;
  const LooResult la = exact_loo(data, kernel, soft(5.0), one);
  const LooResult lb = exact_loo(data, kernel, soft(5.0), many);
  if (loo_report_json(la, data.categories) != loo_report_json(lb, data.categories)) {
    failures.push_back("LOO reports differ across thread counts");
  }

  BoundReport ra = radius_margin_bound(a);
  BoundReport rb = radius_margin_bound(b);
  attach_loo(ra, a, la);
  attach_loo(rb, b, lb);
  if (bound_report_text(ra) != bound_report_text(rb) || bound_report_json(ra) != bound_report_json(rb)) {
    failures.push_back("bound reports differ");
  }

  const std::vector<std::vector<double>> gammas{{0.2}, {1.0}};
  const SelectionResult sa = grid_select(data, KernelFamily::kGaussian, {0.5, 5.0}, gammas);
  const SelectionResult sb = grid_select(data, KernelFamily::kGaussian, {0.5, 5.0}, gammas);
  if (selection_report_text(sa) != selection_report_text(sb) ||
      selection_report_json(sa) != selection_report_json(sb)) {
    failures.push_back("selection reports differ");
  }

  const std::filesystem::path path = std::filesystem::path(MSVM2_TEST_SCRATCH) / "acceptance_model.json";
  save_model(a, path);
  const TrainedModel loaded = load_model(path);
  std::mt19937_64 rng(1001);
  const PointMatrix probes = random_points(rng, 100, 2) * 4.0;
  const Matrix s0 = decision_scores(a, probes);
  const Matrix s1 = decision_scores(loaded, probes);
  long differing = 0;
  for (Eigen::Index i = 0; i < s0.size(); ++i) {
    differing += std::memcmp(&s0.data()[i], &s1.data()[i], sizeof(double)) != 0;
  }
  if (differing != 0) failures.push_back(fmt("%ld scores differ after the round trip", differing));

  out.pass = failures.empty();
  out.detail = "repeated train/LOO/bound/select byte-identical; round trip over 100 probes bitwise";
  if (!failures.empty()) {
    out.detail = "";
    for (const auto& f : failures) out.detail += (out.detail.empty() ? "" : "; ") + f;
  }
  return out;
}

struct Criterion {
  int id;
  const char* title;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {1, "dual solver matches the dense QP oracle", criterion_1},
      {2, "margin/norm/alpha chain", criterion_2},
      {3, "pairwise class-vector norm identity", criterion_3},
      {4, "leave-one-out errors within the radius-margin bound", criterion_4},
      {5, "per-point lower bound on alpha at LOO errors", criterion_5},
      {6, "two-class machine equals the binary 2-norm SVM", criterion_6},
      {7, "kernel change identity and slack recovery", criterion_7},
      {8, "minimum enclosing ball", criterion_8},
      {9, "hard-margin feasibility on training points", criterion_9},
      {10, "determinism and persistence", criterion_10},
  };

  int only = 0;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--only" && i + 1 < argc) {
      only = std::atoi(argv[++i]);
    } else {
      std::fprintf(stderr, "usage: %s [--only N]\n", argv[0]);
      return 2;
    }
  }

  bool all_pass = true;
  int ran = 0;
  for (const Criterion& c : criteria) {
    if (only != 0 && c.id != only) continue;
    ++ran;
    Outcome outcome;
    try {
      outcome = c.run();
    } catch (const std::exception& e) {
      outcome.pass = false;
      outcome.detail = std::string("exception: ") + e.what();
    }
    all_pass = all_pass && outcome.pass;
    std::printf("criterion %d %s: %s: %s\n", c.id, outcome.pass ? "PASS" : "FAIL", c.title,
                outcome.detail.c_str());
    std::fflush(stdout);
  }
  if (ran == 0) {
    std::fprintf(stderr, "no criterion %d\n", only);
    return 2;
  }
  return all_pass ? 0 : 1;
}
