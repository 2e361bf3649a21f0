#include "generators.hpp"

#include "msvm2/error.hpp"
#include "msvm2/selection.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

namespace msvm2 {
namespace {

using testing::gaussian_blobs;

TrainOptions soft(double C) {
  TrainOptions o;
  o.C = C;
  return o;
}

TEST(ExactLoo, DuplicatedTightClustersGiveNoErrors) {
  PointMatrix p(6, 2);
  p << 0, 0, 0, 0, 10, 0, 10, 0, 0, 10, 0, 10;
  const Dataset data = make_dataset(p, {0, 0, 1, 1, 2, 2}, {"a", "b", "c"});
  const LooResult loo = exact_loo(data, KernelSpec::linear(), soft(100.0));
  EXPECT_EQ(loo.error_count, 0);
  ASSERT_EQ(loo.outcomes.size(), 6u);
  for (const LooOutcome& o : loo.outcomes) EXPECT_FALSE(o.error);
}

TEST(ExactLoo, SingletonClassesAreAlwaysMissed) {
  for (int q : {2, 3, 4}) {
    const Dataset data = make_dataset(PointMatrix::Identity(q, q), [&] {
      std::vector<int> y(static_cast<std::size_t>(q));
      for (int k = 0; k < q; ++k) y[static_cast<std::size_t>(k)] = k;
      return y;
    }(), [&] {
      std::vector<std::string> c;
      for (int k = 0; k < q; ++k) c.push_back("k" + std::to_string(k));
      return c;
    }());
    const LooResult loo = exact_loo(data, KernelSpec::linear(), soft(1.0));
    EXPECT_EQ(loo.error_count, q);
    for (const LooOutcome& o : loo.outcomes) EXPECT_NE(o.predicted, static_cast<int>(o.point));
  }
}

TEST(ExactLoo, MatchesIndependentDriver) {
  const Dataset data = gaussian_blobs(300, 3, 10, 2, 1.5, 1.0);
  const KernelSpec kernel = KernelSpec::gaussian(0.7);
  const LooResult loo = exact_loo(data, kernel, soft(2.0));
  int errors = 0;
  for (Eigen::Index p = 0; p < data.size(); ++p) {
    const Dataset fold = without_point(data, p);
    const TrainedModel model = train(fold, kernel, soft(2.0));
    const int predicted = predict(model, {data.points.row(p).data(), 2}).label;
    const bool wrong = predicted != data.labels[static_cast<std::size_t>(p)];
    errors += wrong;
    EXPECT_EQ(loo.outcomes[static_cast<std::size_t>(p)].error, wrong) << "point " << p;
    EXPECT_EQ(loo.outcomes[static_cast<std::size_t>(p)].predicted, predicted);
  }
  EXPECT_EQ(loo.error_count, errors);
  EXPECT_GT(errors, 0);
  EXPECT_EQ(loo.dataset_digest, data.source_hash);
}

TEST(ExactLoo, ThreadCountDoesNotChangeTheResult) {
  const Dataset data = gaussian_blobs(301, 4, 6, 2, 1.5, 1.0);
  LooOptions one, many;
  one.threads = 1;
  many.threads = 5;
  const LooResult a = exact_loo(data, KernelSpec::linear(), soft(3.0), one);
  const LooResult b = exact_loo(data, KernelSpec::linear(), soft(3.0), many);
  EXPECT_EQ(a.error_count, b.error_count);
  EXPECT_EQ(a.full_alpha, b.full_alpha);
  for (std::size_t i = 0; i < a.outcomes.size(); ++i) {
    EXPECT_EQ(a.outcomes[i].predicted, b.outcomes[i].predicted);
  }
}

TEST(Bound, FormsAgreeAndBoundLooOnBlobs) {
  const Dataset data = gaussian_blobs(310, 3, 10, 2, 2.0, 1.0);
  for (double C : {0.5, 10.0}) {
    for (double gamma : {0.2, 2.0}) {
      const KernelSpec kernel = KernelSpec::gaussian(gamma);
      const TrainedModel model = train(data, kernel, soft(C));
      BoundReport report = radius_margin_bound(model);
      EXPECT_NEAR(report.bound_value, report.bound_via_alpha, 1e-6 * report.bound_value);
      EXPECT_EQ(report.bound_clamped, std::min(report.bound_value, 30.0));
      EXPECT_NEAR(report.bound_over_q2, report.bound_value / 9.0, 1e-12 * report.bound_value);
      EXPECT_EQ(report.num_classes, 3);
      EXPECT_EQ(report.num_points, 30);
      EXPECT_NEAR(report.D_sq, 4.0 * report.radius * report.radius, 1e-12);

      const LooResult loo = exact_loo(data, kernel, soft(C));
      attach_loo(report, model, loo);
      ASSERT_TRUE(report.loo_errors.has_value());
      EXPECT_LE(*report.loo_errors, report.bound_value + 1e-6);
      EXPECT_EQ(report.key_lemma.size(), static_cast<std::size_t>(loo.error_count));
      EXPECT_TRUE(report.key_lemma_violations.empty());
    }
  }
}

TEST(Bound, SupportBallIsNoLarger) {
  const Dataset data = gaussian_blobs(311, 3, 8, 2, 3.0, 0.6);
  const TrainedModel model = train(data, KernelSpec::gaussian(0.5), soft(5.0));
  BoundOptions support;
  support.scope = BallScope::kSupportPoints;
  EXPECT_LE(radius_margin_bound(model, support).D_sq,
            radius_margin_bound(model).D_sq + 1e-8);
}

TEST(Bound, ZeroAlphaEdgeCase) {
  PointMatrix p(1, 2);
  p << 1.0, 2.0;
  const Dataset data = make_dataset(p, {0}, {"a", "b"});
  const TrainedModel model = fit(data.points, data.labels, data.categories, KernelSpec::linear(),
                                 soft(1.0));
  BoundReport report = radius_margin_bound(model);
  EXPECT_EQ(report.bound_value, 0.0);
  EXPECT_EQ(report.bound_via_alpha, 0.0);
  // The single fold trains on nothing and is counted as an error.
  const LooResult loo = exact_loo(data, KernelSpec::linear(), soft(1.0));
  EXPECT_EQ(loo.error_count, 1);
  EXPECT_TRUE(loo.outcomes[0].training_failed);
  EXPECT_FALSE(loo.outcomes[0].diagnostic.empty());
}

TEST(KeyLemma, NoErrorsGiveAnEmptyList) {
  PointMatrix p(4, 1);
  p << 0, 0, 5, 5;
  const Dataset data = make_dataset(p, {0, 0, 1, 1}, {"a", "b"});
  const TrainedModel model = train(data, KernelSpec::linear(), soft(10.0));
  const LooResult loo = exact_loo(data, KernelSpec::linear(), soft(10.0));
  ASSERT_EQ(loo.error_count, 0);
  EXPECT_TRUE(key_lemma_check(model, loo, radius_margin_bound(model).D_sq).empty());
}

TEST(KeyLemma, HoldsOnBlobsAndFlagsCorruptedAlpha) {
  const Dataset data = gaussian_blobs(320, 3, 8, 2, 1.2, 1.0);
  const TrainedModel model = train(data, KernelSpec::gaussian(1.0), soft(5.0));
  const LooResult loo = exact_loo(data, KernelSpec::gaussian(1.0), soft(5.0));
  ASSERT_GT(loo.error_count, 0);
  const double D_sq = radius_margin_bound(model).D_sq;
  const auto entries = key_lemma_check(model, loo, D_sq);
  ASSERT_EQ(entries.size(), static_cast<std::size_t>(loo.error_count));
  for (const auto& e : entries) {
    EXPECT_TRUE(e.satisfied);
    EXPECT_DOUBLE_EQ(e.threshold, 1.0 / (6.0 * D_sq));
  }

  TrainedModel corrupted = model;
  corrupted.alpha.row(entries.front().point).setZero();
  const auto flagged = key_lemma_check(corrupted, loo, D_sq);
  EXPECT_FALSE(flagged.front().satisfied);
}

TEST(KeyLemma, RejectsLooFromAnotherDataset) {
  const Dataset a = gaussian_blobs(330, 3, 4, 2, 1.0, 1.0);
  const Dataset b = gaussian_blobs(331, 3, 4, 2, 1.0, 1.0);
  const TrainedModel model = train(a, KernelSpec::linear(), soft(1.0));
  const LooResult loo = exact_loo(b, KernelSpec::linear(), soft(1.0));
  EXPECT_THROW(key_lemma_check(model, loo, 1.0), InvalidArgument);
}

TEST(LinearScaling, PredictionsAndLooInvariant) {
  const Dataset data = gaussian_blobs(340, 3, 6, 2, 1.5, 1.0);
  const double c = 3.0;
  const Dataset scaled = make_dataset(data.points * c, data.labels, data.categories);
  const double C = 2.0;
  const TrainedModel a = train(data, KernelSpec::linear(), soft(C));
  const TrainedModel b = train(scaled, KernelSpec::linear(), soft(C / (c * c)));
  EXPECT_EQ(predict_labels(a, data.points), predict_labels(b, scaled.points));
  EXPECT_EQ(exact_loo(data, KernelSpec::linear(), soft(C)).error_count,
            exact_loo(scaled, KernelSpec::linear(), soft(C / (c * c))).error_count);
}

GridPoint point(double C, std::vector<double> params, double bound, bool failed = false) {
  GridPoint g;
  g.C = C;
  g.params = std::move(params);
  g.bound = bound;
  g.failed = failed;
  return g;
}

TEST(BestGridPoint, TieBreaks) {
  EXPECT_EQ(best_grid_point({point(1, {}, 5.0)}), 0u);
  EXPECT_EQ(best_grid_point({point(1, {}, 5.0), point(2, {}, 4.0)}), 1u);
  EXPECT_EQ(best_grid_point({point(2, {}, 4.0), point(1, {}, 4.0)}), 1u);
  EXPECT_EQ(best_grid_point({point(1, {0.5}, 4.0), point(1, {0.25}, 4.0)}), 1u);
  EXPECT_EQ(best_grid_point({point(1, {2, 1, 1}, 4.0), point(1, {2, 0.5, 3}, 4.0)}), 1u);
  const double inf = std::numeric_limits<double>::infinity();
  EXPECT_EQ(best_grid_point({point(0.1, {}, inf, true), point(9, {}, 100.0)}), 1u);
  EXPECT_THROW(best_grid_point({point(1, {}, inf, true)}), NumericalError);
}

TEST(GridSelect, PicksTheSmallestBoundAndIsDeterministic) {
  const Dataset data = gaussian_blobs(350, 3, 8, 2, 2.0, 1.0);
  const std::vector<double> cs{0.5, 5.0};
  const std::vector<std::vector<double>> gammas{{0.2}, {1.0}};
  const SelectionResult r = grid_select(data, KernelFamily::kGaussian, cs, gammas);
  ASSERT_EQ(r.grid.size(), 4u);
  for (const GridPoint& g : r.grid) {
    EXPECT_FALSE(g.failed);
    EXPECT_GE(g.bound, r.grid[r.best].bound);
  }
  EXPECT_EQ(r.dataset_digest, data.source_hash);

  const SelectionResult again = grid_select(data, KernelFamily::kGaussian, cs, gammas);
  EXPECT_EQ(again.best, r.best);
  for (std::size_t i = 0; i < r.grid.size(); ++i) {
    EXPECT_EQ(again.grid[i].bound, r.grid[i].bound);
    EXPECT_EQ(again.grid[i].kernel, r.grid[i].kernel);
  }
}

TEST(GridSelect, SinglePointAndLoo) {
  const Dataset data = gaussian_blobs(351, 3, 5, 2, 2.0, 1.0);
  SelectOptions opts;
  opts.with_exact_loo = true;
  const SelectionResult r = grid_select(data, KernelFamily::kLinear, {1.0}, {}, opts);
  ASSERT_EQ(r.grid.size(), 1u);
  EXPECT_EQ(r.best, 0u);
  ASSERT_TRUE(r.grid[0].loo_errors.has_value());
  EXPECT_LE(*r.grid[0].loo_errors, r.grid[0].bound + 1e-6);
}

TEST(GridSelect, RejectsBadGrids) {
  const Dataset data = gaussian_blobs(352, 3, 3, 2, 2.0, 1.0);
  EXPECT_THROW(grid_select(data, KernelFamily::kLinear, {}, {}), InvalidArgument);
  EXPECT_THROW(grid_select(data, KernelFamily::kLinear, {-1.0}, {}), InvalidArgument);
  EXPECT_THROW(grid_select(data, KernelFamily::kGaussian, {1.0}, {}), InvalidArgument);
  EXPECT_THROW(grid_select(data, KernelFamily::kGaussian, {1.0}, {{-1.0}}), InvalidArgument);
}

}  // namespace
}  // namespace msvm2
