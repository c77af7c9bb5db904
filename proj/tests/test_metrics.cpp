#include <gtest/gtest.h>

#include "oracles.hpp"
#include "rvos/errors.hpp"
#include "rvos/generator.hpp"
#include "rvos/metrics.hpp"
#include "test_util.hpp"

namespace rvos {
namespace {

using testing::TempDir;

MaskTrack one(const Mask& m) { return MaskTrack{m}; }

TEST(Region, Examples) {
  Mask pred = Mask::Zero(3, 3), gt = Mask::Zero(3, 3);
  pred.topRows(2).setOnes();
  gt.bottomRows(2).setOnes();
  EXPECT_DOUBLE_EQ(region_similarity(one(pred), one(gt)), 1.0 / 3.0);
  EXPECT_EQ(region_similarity(one(gt), one(gt)), 1.0);
  Mask a = Mask::Zero(3, 3), b = Mask::Zero(3, 3);
  a(0, 0) = 1;
  b(2, 2) = 1;
  EXPECT_EQ(region_similarity(one(a), one(b)), 0.0);
  EXPECT_EQ(region_similarity(one(Mask::Zero(3, 3)), one(Mask::Zero(3, 3))), 1.0);
  EXPECT_EQ(region_similarity(one(a), one(Mask::Zero(3, 3))), 0.0);
  EXPECT_THROW(region_similarity(one(a), one(Mask::Zero(3, 4))), DomainError);
  EXPECT_THROW(region_similarity(one(a), MaskTrack{a, a}), DomainError);
}

TEST(Contour, ShiftedSquare) {
  Mask gt = Mask::Zero(8, 8), pred = Mask::Zero(8, 8);
  gt.block(2, 2, 4, 4).setOnes();
  pred.block(2, 3, 4, 4).setOnes();
  EXPECT_DOUBLE_EQ(contour_accuracy(one(pred), one(gt), 1), 1.0);
  const double strict = contour_accuracy(one(pred), one(gt), 0);
  EXPECT_LT(strict, 1.0);
  EXPECT_NEAR(strict, oracle::contour(one(pred), one(gt), 0), 1e-12);
  // 12 boundary pixels each; the 6 on the shared rows' overlapping columns match.
  EXPECT_NEAR(strict, 0.5, 1e-12);
}

TEST(Contour, EmptyCases) {
  Mask m = Mask::Zero(5, 5);
  m(2, 2) = 1;
  EXPECT_EQ(contour_accuracy(one(Mask::Zero(5, 5)), one(Mask::Zero(5, 5)), 1), 1.0);
  EXPECT_EQ(contour_accuracy(one(m), one(Mask::Zero(5, 5)), 1), 0.0);
  EXPECT_EQ(contour_accuracy(one(Mask::Zero(5, 5)), one(m), 1), 0.0);
  EXPECT_THROW(contour_accuracy(one(m), one(m), -1), DomainError);
}

TEST(Contour, BoundaryIncludesImageBorder) {
  const Mask full = Mask::Ones(4, 5);
  const Mask b = boundary_pixels(full);
  EXPECT_EQ(b.cast<int>().sum(), 2 * 5 + 2 * 2);
  EXPECT_EQ(b(1, 1), 0);
}

TEST(Metrics, MatchBruteForceOnRandomPairs) {
  Rng rng(1);
  for (int trial = 0; trial < 1000; ++trial) {
    const int T = 1 + static_cast<int>(rng.index(3)), H = 1 + static_cast<int>(rng.index(8)),
              W = 1 + static_cast<int>(rng.index(8)), tol = static_cast<int>(rng.index(3));
    MaskTrack a, b;
    for (int t = 0; t < T; ++t) {
      a.push_back(testing::random_mask(rng, H, W, rng.uniform()));
      b.push_back(testing::random_mask(rng, H, W, rng.uniform()));
    }
    ASSERT_NEAR(region_similarity(a, b), oracle::region(a, b), 1e-9) << trial;
    ASSERT_NEAR(contour_accuracy(a, b, tol), oracle::contour(a, b, tol), 1e-9) << trial;
  }
}

TEST(Metrics, SymmetricBoundedAndMonotoneInTolerance) {
  Rng rng(2);
  for (int trial = 0; trial < 300; ++trial) {
    const Mask a = testing::random_mask(rng, 10, 10, rng.uniform()), b = testing::random_mask(rng, 10, 10, rng.uniform());
    EXPECT_DOUBLE_EQ(region_similarity(one(a), one(b)), region_similarity(one(b), one(a)));
    double prev = -1;
    for (int tol = 0; tol <= 4; ++tol) {
      const double f = contour_accuracy(one(a), one(b), tol);
      EXPECT_DOUBLE_EQ(f, contour_accuracy(one(b), one(a), tol));
      EXPECT_GE(f, 0.0);
      EXPECT_LE(f, 1.0);
      EXPECT_GE(f, prev);
      prev = f;
    }
  }
}

TEST(Metrics, JFLiesBetweenJAndF) {
  Rng rng(3);
  for (int trial = 0; trial < 1000; ++trial) {
    const MaskTrack a = {testing::random_mask(rng, 8, 8, rng.uniform())};
    const MaskTrack b = {testing::random_mask(rng, 8, 8, rng.uniform())};
    const JFScore s = jf_score(a, b, 1);
    EXPECT_GE(s.JF, std::min(s.J, s.F) - 1e-15);
    EXPECT_LE(s.JF, std::max(s.J, s.F) + 1e-15);
    EXPECT_DOUBLE_EQ(s.JF, (s.J + s.F) / 2);
  }
  Mask pred = Mask::Zero(3, 3), gt = Mask::Zero(3, 3);
  pred.topRows(2).setOnes();
  gt.bottomRows(2).setOnes();
  const JFScore s = jf_score(one(pred), one(gt), 1);
  EXPECT_DOUBLE_EQ(s.J, 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(s.F, 1.0);
  EXPECT_DOUBLE_EQ(s.JF, 2.0 / 3.0);
}

TEST(Metrics, DefaultTolerance) {
  EXPECT_EQ(default_tolerance(32, 32), 1);
  EXPECT_EQ(default_tolerance(480, 854), 8);  // 0.008 * 979.6 = 7.84
  EXPECT_EQ(default_tolerance(1, 1), 1);
}

struct SmallSet {
  TempDir dir{"metrics"};
  DatasetManifest manifest;
  SmallSet() {
    GeneratorConfig c;
    c.n_videos = 2;
    c.frames = 6;
    manifest = generate_synthetic_dataset(c, 5, dir.path());
  }
  std::map<std::string, Prediction> ground_truth(const std::vector<int>& idx) const {
    std::map<std::string, Prediction> out;
    for (const auto& e : manifest.expressions) out[e.expression_id] = Prediction{idx, manifest.target_union(e, idx)};
    return out;
  }
};

TEST(Evaluate, GroundTruthScoresOne) {
  SmallSet s;
  const MetricsReport r = evaluate_dataset(s.ground_truth({0, 2, 3, 5}), s.manifest);
  EXPECT_EQ(r.n_expressions, static_cast<int>(s.manifest.expressions.size()));
  EXPECT_EQ(r.aggregate.J, 1.0);
  EXPECT_EQ(r.aggregate.F, 1.0);
  EXPECT_EQ(r.aggregate.JF, 1.0);
}

TEST(Evaluate, MissingPredictionNamesIt) {
  SmallSet s;
  auto preds = s.ground_truth({0, 1});
  const std::string gone = s.manifest.expressions[1].expression_id;
  preds.erase(gone);
  try {
    evaluate_dataset(preds, s.manifest);
    FAIL() << "expected CoverageError";
  } catch (const CoverageError& e) {
    EXPECT_NE(std::string(e.what()).find(gone), std::string::npos);
  }
}

TEST(Evaluate, AggregateIsMeanOfExpressions) {
  SmallSet s;
  auto preds = s.ground_truth({1, 4});
  // Blank out half of the expressions: each scores J = F = 0 unless its
  // targets are empty on both frames.
  std::size_t k = 0;
  for (auto& [id, p] : preds)
    if (k++ % 2 == 0)
      for (auto& m : p.masks) m.setZero();
  const MetricsReport r = evaluate_dataset(preds, s.manifest);
  double J = 0, F = 0;
  for (const auto& [id, p] : preds) {
    const auto gt = s.manifest.target_union(s.manifest.expression(id), p.frame_indices);
    const int tol = default_tolerance(gt[0].rows(), gt[0].cols());
    J += oracle::region(p.masks, gt);
    F += oracle::contour(p.masks, gt, tol);
    EXPECT_NEAR(r.per_expression.at(id).J, oracle::region(p.masks, gt), 1e-12);
  }
  const double n = static_cast<double>(preds.size());
  EXPECT_NEAR(r.aggregate.J, J / n, 1e-12);
  EXPECT_NEAR(r.aggregate.F, F / n, 1e-12);
  EXPECT_NEAR(r.aggregate.JF, (J + F) / (2 * n), 1e-12);
}

TEST(Evaluate, ShapeMismatchIsError) {
  SmallSet s;
  auto preds = s.ground_truth({0, 1});
  preds.begin()->second.masks[0] = Mask::Zero(3, 3);
  EXPECT_THROW(evaluate_dataset(preds, s.manifest), Error);
}

TEST(Report, JsonRoundTripAndMarkdown) {
  SmallSet s;
  auto preds = s.ground_truth({0, 3});
  preds.begin()->second.masks[1].setZero();
  const MetricsReport r = evaluate_dataset(preds, s.manifest, 2);
  write_report_json(s.dir / "report.json", r);
  const MetricsReport back = read_report_json(s.dir / "report.json");
  EXPECT_EQ(back.n_expressions, r.n_expressions);
  EXPECT_EQ(back.tolerance, 2);
  EXPECT_DOUBLE_EQ(back.aggregate.JF, r.aggregate.JF);
  for (const auto& [id, sc] : r.per_expression) EXPECT_DOUBLE_EQ(back.per_expression.at(id).J, sc.J);
  const std::string md = report_markdown(r);
  EXPECT_NE(md.find("J&F"), std::string::npos);
  EXPECT_NE(md.find(s.manifest.expressions[0].expression_id), std::string::npos);
}

}  // namespace
}  // namespace rvos
