#include <gtest/gtest.h>

#include <numeric>

#include "rvos/errors.hpp"
#include "rvos/generator.hpp"
#include "rvos/model.hpp"
#include "rvos/nn.hpp"
#include "rvos/sampling.hpp"
#include "rvos/train.hpp"
#include "test_util.hpp"

namespace rvos {
namespace {

using testing::TempDir;

ModelDims toy_dims() {
  ModelDims d;
  d.channels = 8;
  d.heads = 2;
  d.queries = 2;
  d.level_channels = {8, 8, 8};
  return d;
}

/// Inputs of mta_fuse bound as named parameters so gradients reach them.
struct MtaInputs {
  TextEmbedding text;
  MultiScaleFeatures visual;
};

void add_mta_inputs(ParamStore& p, const ModelDims& dims, int T, int side, Rng& rng) {
  p.set("in.tok", testing::random_matrix(rng, 3, dims.channels));
  p.set("in.cls", testing::random_matrix(rng, 1, dims.channels));
  int s = side;
  for (int j = 0; j < dims.num_levels(); ++j) {
    p.set("in.l" + std::to_string(j),
          testing::random_matrix(rng, T * s * s, dims.level_channels[static_cast<std::size_t>(j)]));
    s = std::max(1, s / 2);
  }
}

MtaInputs bind_mta_inputs(Binder& b, const ModelDims& dims, int T, int side) {
  MtaInputs in;
  in.text = TextEmbedding{b("in.tok"), b("in.cls")};
  int s = side;
  for (int j = 0; j < dims.num_levels(); ++j) {
    in.visual.levels.push_back(
        FeatureLevel{b("in.l" + std::to_string(j)), T, s, s, dims.level_strides[static_cast<std::size_t>(j)]});
    s = std::max(1, s / 2);
  }
  return in;
}

MultiScaleFeatures constant_levels(Binder& b, const std::vector<Matrix>& levels, int T, int side) {
  MultiScaleFeatures f;
  int s = side;
  for (const auto& m : levels) {
    f.levels.push_back(FeatureLevel{b.constant(m), T, s, s, 4});
    s = std::max(1, s / 2);
  }
  return f;
}

std::vector<Matrix> random_fused(Rng& rng, int T, int side, int levels, int C) {
  std::vector<Matrix> out;
  int s = side;
  for (int j = 0; j < levels; ++j) {
    out.push_back(testing::random_matrix(rng, T * s * s, C));
    s = std::max(1, s / 2);
  }
  return out;
}

TEST(MtaFuse, ZeroOutputProjectionsKeepClassToken) {
  const ModelDims dims = toy_dims();
  ParamStore p = init_model(dims, 1);
  nn::zero_output_projections(p, "mta.");
  Rng rng(2);
  add_mta_inputs(p, dims, 2, 4, rng);
  Graph g;
  Binder b(g, p, false);
  const MtaInputs in = bind_mta_inputs(b, dims, 2, 4);
  const MtaOutput out = mta_fuse(b, in.text, in.visual, dims);
  EXPECT_EQ(out.class_token.value(), p.get("in.cls"));
}

TEST(MtaFuse, OneBlockPerLevel) {
  const ModelDims dims = toy_dims();
  ParamStore p = init_model(dims, 3);
  Rng rng(4);
  add_mta_inputs(p, dims, 2, 4, rng);
  Graph g;
  Binder b(g, p, false);
  const MtaInputs in = bind_mta_inputs(b, dims, 2, 4);
  ForwardTrace trace;
  const MtaOutput out = mta_fuse(b, in.text, in.visual, dims, &trace);
  EXPECT_EQ(trace.mta_blocks, 3);
  ASSERT_EQ(out.visual.levels.size(), 3u);
  EXPECT_EQ(out.class_token.rows(), 1);
  EXPECT_EQ(out.class_token.cols(), 8);
}

TEST(MtaFuse, DimensionMismatchIsDomainError) {
  const ModelDims dims = toy_dims();
  ParamStore p = init_model(dims, 5);
  Rng rng(6);
  add_mta_inputs(p, dims, 1, 4, rng);
  Graph g;
  Binder b(g, p, false);
  MtaInputs in = bind_mta_inputs(b, dims, 1, 4);
  in.visual.levels.pop_back();
  EXPECT_THROW(mta_fuse(b, in.text, in.visual, dims), DomainError);
  in = bind_mta_inputs(b, dims, 1, 4);
  in.text.tokens = b.constant(Matrix::Zero(3, 5));
  EXPECT_THROW(mta_fuse(b, in.text, in.visual, dims), DomainError);
}

TEST(MtaFuse, GradientCheck) {
  const ModelDims dims = toy_dims();
  ParamStore p = init_model(dims, 7);
  Rng rng(8);
  add_mta_inputs(p, dims, 2, 4, rng);
  auto loss = [&](Binder& b) {
    const MtaInputs in = bind_mta_inputs(b, dims, 2, 4);
    const MtaOutput out = mta_fuse(b, in.text, in.visual, dims);
    Var total = testing::weighted_sum(b, out.class_token, 1);
    for (std::size_t j = 0; j < out.visual.levels.size(); ++j)
      total = ad::add(total, testing::weighted_sum(b, out.visual.levels[j].values, 2 + j));
    return total;
  };
  const auto [key_bias, rest] = testing::split_key_biases(testing::all_entries(p, {"mta.", "in."}));
  const auto r = testing::grad_check(p, loss, rest);
  EXPECT_GT(r.checked, 1000);
  EXPECT_LE(r.max_rel_error, 1e-4) << r.worst;
  const auto z = testing::grad_check(p, loss, key_bias);
  EXPECT_GT(z.checked, 0);
  EXPECT_LE(z.max_abs_analytic, 1e-12);
  EXPECT_LE(z.max_abs_numeric, 1e-8);
}

TEST(FrameDecode, FramesAreIndependent) {
  const ModelDims dims = toy_dims();
  const ParamStore p = init_model(dims, 9);
  Rng rng(10);
  const int T = 3, side = 4;
  auto a = random_fused(rng, T, side, 3, 8);
  auto c = a;
  // Change frames 0 and 2 only; frame 1 is shared.
  for (std::size_t j = 0; j < c.size(); ++j) {
    const Eigen::Index per = c[j].rows() / T;
    c[j].topRows(per) = testing::random_matrix(rng, per, 8);
    c[j].bottomRows(per) = testing::random_matrix(rng, per, 8);
  }
  Graph g;
  Binder b(g, p, false);
  const Var cls = b.constant(testing::random_matrix(rng, 1, 8));
  const Matrix oa = frame_decode(b, constant_levels(b, a, T, side), cls, dims).value();
  const Matrix oc = frame_decode(b, constant_levels(b, c, T, side), cls, dims).value();
  ASSERT_EQ(oa.rows(), T * dims.queries);
  EXPECT_EQ(oa.middleRows(2, 2), oc.middleRows(2, 2));
  EXPECT_NE(oa.topRows(2), oc.topRows(2));
}

TEST(FrameDecode, NoLayersRepeatsClassToken) {
  ModelDims dims = toy_dims();
  dims.decoder_layers = 0;
  const ParamStore p = init_model(dims, 11);
  Rng rng(12);
  Graph g;
  Binder b(g, p, false);
  const Matrix cls = testing::random_matrix(rng, 1, 8);
  const Matrix out = frame_decode(b, constant_levels(b, random_fused(rng, 3, 4, 3, 8), 3, 4), b.constant(cls), dims)
                         .value();
  ASSERT_EQ(out.rows(), 6);
  for (Eigen::Index r = 0; r < out.rows(); ++r) EXPECT_EQ(out.row(r), cls.row(0));
}

TEST(FrameDecode, ShufflingFramesPermutesOutput) {
  const ModelDims dims = toy_dims();
  const ParamStore p = init_model(dims, 13);
  Rng rng(14);
  const int T = 3, side = 4, perm[] = {1, 2, 0};
  const auto a = random_fused(rng, T, side, 3, 8);
  std::vector<Matrix> s;
  for (const auto& m : a) {
    const Eigen::Index per = m.rows() / T;
    Matrix x(m.rows(), m.cols());
    for (int t = 0; t < T; ++t) x.middleRows(t * per, per) = m.middleRows(perm[t] * per, per);
    s.push_back(x);
  }
  Graph g;
  Binder b(g, p, false);
  const Var cls = b.constant(testing::random_matrix(rng, 1, 8));
  const Matrix oa = frame_decode(b, constant_levels(b, a, T, side), cls, dims).value();
  const Matrix os = frame_decode(b, constant_levels(b, s, T, side), cls, dims).value();
  for (int t = 0; t < T; ++t) EXPECT_EQ(os.middleRows(2 * t, 2), oa.middleRows(2 * perm[t], 2));
}

TEST(MtiEncode, QueryIndicesDoNotMix) {
  const ModelDims dims = toy_dims();
  const ParamStore p = init_model(dims, 15);
  Rng rng(16);
  const int T = 3;
  const Matrix x = testing::random_matrix(rng, T * 2, 8);
  Matrix y = x;
  for (int t = 0; t < T; ++t) y.row(t * 2) = testing::random_matrix(rng, 1, 8);  // query 0 only
  Graph g;
  Binder b(g, p, false);
  const Matrix ox = mti_encode(b, b.constant(x), T, dims).value();
  const Matrix oy = mti_encode(b, b.constant(y), T, dims).value();
  for (int t = 0; t < T; ++t) {
    EXPECT_NE(ox.row(t * 2), oy.row(t * 2));
    EXPECT_EQ(ox.row(t * 2 + 1), oy.row(t * 2 + 1));
  }
}

TEST(MtiEncode, SingleFrameZeroProjectionIsIdentity) {
  const ModelDims dims = toy_dims();
  ParamStore p = init_model(dims, 17);
  nn::zero_output_projections(p, "mti.enc");
  Rng rng(18);
  Graph g;
  Binder b(g, p, false);
  const Matrix x = testing::random_matrix(rng, 2, 8);
  EXPECT_EQ(mti_encode(b, b.constant(x), 1, dims).value(), x);
}

TEST(MtiEncode, BatchedMatchesPerQueryLoop) {
  ModelDims dims;
  const ParamStore p = init_model(dims, 19);
  Rng rng(20);
  for (int T : {1, 2, 3, 5, 8}) {
    Graph g;
    Binder b(g, p, false);
    const Var x = b.constant(testing::random_matrix(rng, T * dims.queries, dims.channels));
    const Matrix batched = mti_encode(b, x, T, dims).value();
    const Matrix loop = mti_encode_reference(b, x, T, dims).value();
    EXPECT_EQ(batched, loop) << "T=" << T << " max diff " << (batched - loop).cwiseAbs().maxCoeff();
  }
}

TEST(MtiEncode, WrongShapeIsDomainError) {
  const ModelDims dims = toy_dims();
  const ParamStore p = init_model(dims, 21);
  Graph g;
  Binder b(g, p, false);
  EXPECT_THROW(mti_encode(b, b.constant(Matrix::Zero(5, 8)), 3, dims), DomainError);
}

TEST(MtiDecode, ZeroProjectionsAndShape) {
  const ModelDims dims = toy_dims();
  ParamStore p = init_model(dims, 22);
  Rng rng(23);
  {
    Graph g;
    Binder b(g, p, false);
    const Matrix out = mti_decode(b, b.constant(testing::random_matrix(rng, 6, 8)),
                                  b.constant(testing::random_matrix(rng, 2, 8)), dims)
                           .value();
    EXPECT_EQ(out.rows(), 2);
    EXPECT_EQ(out.cols(), 8);
  }
  nn::zero_output_projections(p, "mti.dec");
  Graph g;
  Binder b(g, p, false);
  const Matrix q = testing::random_matrix(rng, 2, 8);
  EXPECT_EQ(mti_decode(b, b.constant(testing::random_matrix(rng, 6, 8)), b.constant(q), dims).value(), q);
  EXPECT_THROW(mti_decode(b, b.constant(Matrix::Zero(6, 8)), b.constant(Matrix::Zero(3, 8)), dims), DomainError);
}

TEST(MtiDecode, GradientCheck) {
  const ModelDims dims = toy_dims();
  ParamStore p = init_model(dims, 24);
  Rng rng(25);
  p.set("in.enc", testing::random_matrix(rng, 2 * 2, 8));
  p.set("in.q", testing::random_matrix(rng, 2, 8));
  auto loss = [&](Binder& b) { return testing::weighted_sum(b, mti_decode(b, b("in.enc"), b("in.q"), dims), 3); };
  const auto [key_bias, rest] = testing::split_key_biases(testing::all_entries(p, {"mti.dec", "in."}));
  const auto r = testing::grad_check(p, loss, rest);
  EXPECT_LE(r.max_rel_error, 1e-4) << r.worst;
  const auto z = testing::grad_check(p, loss, key_bias);
  EXPECT_GT(z.checked, 0);
  EXPECT_LE(z.max_abs_analytic, 1e-12);
  EXPECT_LE(z.max_abs_numeric, 1e-8);
}

TEST(Finalize, FallsBackToArgmaxQuery) {
  Matrix logits = Matrix::Zero(3, 4);
  logits.row(1).setConstant(2.0);
  Matrix scores(3, 1);
  scores << -1.0, -0.5, -3.0;
  const auto out = finalize_output(logits, scores, 1, 2, 2);
  EXPECT_EQ(out.selected, std::vector<int>{1});
  EXPECT_TRUE((out.binary_masks[0] == 1).all());
}

TEST(Finalize, LargeNegativeLogitsGiveEmptyMask) {
  const Matrix logits = Matrix::Constant(2, 2 * 9, -1e6);
  Matrix scores(2, 1);
  scores << 3.0, 1.0;
  const auto out = finalize_output(logits, scores, 2, 3, 3);
  EXPECT_EQ(out.selected, (std::vector<int>{0, 1}));
  for (const auto& m : out.binary_masks) EXPECT_FALSE((m > 0).any());
}

TEST(Finalize, UnionMatchesPerPixelOr) {
  Rng rng(26);
  for (int trial = 0; trial < 200; ++trial) {
    const int N = 1 + static_cast<int>(rng.index(5)), T = 1 + static_cast<int>(rng.index(3));
    const int H = 1 + static_cast<int>(rng.index(5)), W = 1 + static_cast<int>(rng.index(5));
    const Matrix logits = testing::random_matrix(rng, N, T * H * W);
    const Matrix scores = testing::random_matrix(rng, N, 1);
    const auto out = finalize_output(logits, scores, T, H, W);
    std::vector<int> sel;
    for (int n = 0; n < N; ++n)
      if (1.0 / (1.0 + std::exp(-scores(n, 0))) > 0.5) sel.push_back(n);
    if (sel.empty()) {
      int best = 0;
      for (int n = 1; n < N; ++n)
        if (scores(n, 0) > scores(best, 0)) best = n;
      sel = {best};
    }
    ASSERT_EQ(out.selected, sel);
    for (int t = 0; t < T; ++t)
      for (int r = 0; r < H; ++r)
        for (int c = 0; c < W; ++c) {
          bool any = false;
          for (int n : sel) any = any || 1.0 / (1.0 + std::exp(-logits(n, (t * H + r) * W + c))) > 0.5;
          ASSERT_EQ(out.binary_masks[static_cast<std::size_t>(t)](r, c), any ? 1 : 0);
        }
    for (Eigen::Index n = 0; n < N; ++n) {
      EXPECT_GE(out.query_scores(n), 0.0);
      EXPECT_LE(out.query_scores(n), 1.0);
    }
  }
}

struct Data {
  TempDir dir{"model"};
  DatasetManifest manifest;
  Data(int size = 32, int frames = 8) {
    GeneratorConfig c;
    c.n_videos = 1;
    c.frames = frames;
    c.height = c.width = size;
    c.shape_min = 4;
    c.shape_max = std::min(10, size - 4);
    manifest = generate_synthetic_dataset(c, 31, dir.path());
  }
  TrainingExample example(const std::vector<int>& idx, std::size_t e = 0) const {
    const ExpressionSample& ex = manifest.expressions[e];
    const VideoEntry& v = manifest.video(ex.video_id);
    return TrainingExample{v.clip(idx), ex.expression, manifest.target_tracks(ex, idx), v.tracks_at(idx)};
  }
};

TEST(Pipeline, OutputShapeAndDeterminism) {
  Data d;
  const ModelDims dims;
  const ParamStore p = init_model(dims, 32);
  const auto ex = d.example({0, 2, 4, 6, 7});
  const PipelineInputs in{&ex.clip, ex.expression, &ex.tracks};
  const auto a = forward_pipeline(p, in, dims, InstanceInitConfig{});
  const auto b = forward_pipeline(p, in, dims, InstanceInitConfig{});
  ASSERT_EQ(a.binary_masks.size(), 5u);
  for (const auto& m : a.binary_masks) {
    EXPECT_EQ(m.rows(), 32);
    EXPECT_EQ(m.cols(), 32);
    EXPECT_TRUE(is_binary(m));
  }
  EXPECT_EQ(a.mask_logits.rows(), dims.queries);
  EXPECT_FALSE(a.selected.empty());
  EXPECT_TRUE(a == b);
}

TEST(Pipeline, DisabledAndEmptyProviderAgree) {
  Data d;
  const ModelDims dims;
  ParamStore p = init_model(dims, 33);
  testing::randomize(p, {"block."}, 34);
  const auto ex = d.example({1, 3, 5});
  const PipelineInputs in{&ex.clip, ex.expression, &ex.tracks};
  InstanceInitConfig off;
  off.enabled = false;
  InstanceInitConfig empty;
  empty.k_max = 0;
  EXPECT_TRUE(forward_pipeline(p, in, dims, off) == forward_pipeline(p, in, dims, empty));
  EXPECT_FALSE(forward_pipeline(p, in, dims, off) == forward_pipeline(p, in, dims, InstanceInitConfig{}));
}

TEST(Pipeline, EndToEndGradientSpotCheck) {
  Data d(16, 4);
  ModelDims dims = toy_dims();
  ParamStore p = init_model(dims, 35);
  testing::randomize(p, {"block."}, 36, 0.3);
  const auto ex = d.example({0, 2});
  std::vector<Matrix> targets;
  for (const auto& t : ex.targets) targets.push_back(flatten_track(t));
  auto loss = [&](Binder& b) {
    const PipelineInputs in{&ex.clip, ex.expression, &ex.tracks};
    return segmentation_loss(forward_graph(b, in, dims, InstanceInitConfig{}), targets);
  };
  const auto all = testing::all_entries(p, {""});
  Rng rng(37);
  std::vector<std::pair<std::string, Eigen::Index>> sample;
  for (int i = 0; i < 50; ++i) sample.push_back(all[rng.index(all.size())]);
  const auto r = testing::grad_check(p, loss, sample);
  EXPECT_EQ(r.checked, 50);
  EXPECT_LE(r.max_rel_error, 1e-3) << r.worst;
}

TEST(Training, LossIsFiniteAndNonNegative) {
  Data d;
  const ModelDims dims;
  const ParamStore init = init_model(dims, 38);
  for (std::size_t e = 0; e < d.manifest.expressions.size(); ++e) {
    ParamStore p = init;
    Trainer tr(p, dims, InstanceInitConfig{}, TrainConfig{});
    LossBreakdown lb;
    const double loss = tr.step(d.example({0, 1, 2, 3, 4}, e), &lb);
    EXPECT_TRUE(std::isfinite(loss));
    EXPECT_GE(loss, 0.0);
    EXPECT_EQ(lb.matching.size(), d.manifest.expressions[e].target_object_ids.size());
  }
}

TEST(Training, DiceVanishesOnExactSaturatedPrediction) {
  Eigen::RowVectorXd t(6);
  t << 0, 1, 1, 0, 1, 0;
  const Eigen::RowVectorXd prob = t.unaryExpr([](double x) { return 1.0 / (1.0 + std::exp(-(x * 2 - 1) * 80)); });
  EXPECT_NEAR(dice_loss(prob, t), 0.0, 1e-12);
  EXPECT_EQ(dice_loss(t, t), 0.0);
}

TEST(Training, MatchingIsMinimumCostAssignment) {
  Rng rng(39);
  auto bce = [](const Eigen::RowVectorXd& z, const Eigen::RowVectorXd& t) {
    double s = 0;
    for (Eigen::Index i = 0; i < z.size(); ++i)
      s += std::max(z(i), 0.0) - z(i) * t(i) + std::log1p(std::exp(-std::abs(z(i))));
    return s / static_cast<double>(z.size());
  };
  for (int trial = 0; trial < 100; ++trial) {
    const int N = 1 + static_cast<int>(rng.index(5)), M = 1 + static_cast<int>(rng.index(N));
    const Matrix logits = testing::random_matrix(rng, N, 12, 2.0);
    const Matrix scores = testing::random_matrix(rng, N, 1);
    std::vector<Matrix> targets;
    for (int m = 0; m < M; ++m) {
      Matrix t(1, 12);
      for (int i = 0; i < 12; ++i) t(0, i) = rng.bernoulli(0.4) ? 1.0 : 0.0;
      targets.push_back(t);
    }
    auto cost = [&](int n, int m) {
      const Eigen::RowVectorXd z = logits.row(n);
      const Eigen::RowVectorXd prob = z.unaryExpr([](double x) { return 1.0 / (1.0 + std::exp(-x)); });
      Eigen::RowVectorXd one(1);
      one(0) = 1.0;
      return bce(z, targets[static_cast<std::size_t>(m)].row(0)) +
             dice_loss(prob, targets[static_cast<std::size_t>(m)].row(0)) + bce(scores.row(n), one);
    };
    // Brute force over all permutations of queries.
    std::vector<int> perm(static_cast<std::size_t>(N));
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
      double c = 0;
      for (int m = 0; m < M; ++m) c += cost(perm[static_cast<std::size_t>(m)], m);
      best = std::min(best, c);
    } while (std::next_permutation(perm.begin(), perm.end()));
    const auto match = match_queries(logits, scores, targets);
    ASSERT_EQ(static_cast<int>(match.size()), M);
    double got = 0;
    std::vector<int> used;
    for (const auto& [n, m] : match) {
      got += cost(n, m);
      used.push_back(n);
    }
    std::sort(used.begin(), used.end());
    EXPECT_EQ(std::unique(used.begin(), used.end()), used.end());
    EXPECT_NEAR(got, best, 1e-9);
  }
}

TEST(Training, AdamWMatchesClosedForm) {
  TrainConfig cfg;
  cfg.lr = 0.01;
  cfg.weight_decay = 0.1;
  ParamStore p;
  p.set("a", (Matrix(1, 2) << 1.0, -2.0).finished());
  p.set("frozen", (Matrix(1, 1) << 3.0).finished());
  AdamW opt(cfg);
  const Matrix g1 = (Matrix(1, 2) << 0.5, -1.0).finished();
  const Matrix g2 = (Matrix(1, 2) << -0.2, 0.3).finished();
  opt.update(p, {{"a", g1}});
  opt.update(p, {{"a", g2}});
  double x[2] = {1.0, -2.0};
  double m[2] = {0, 0}, v[2] = {0, 0};
  for (int t = 1; t <= 2; ++t) {
    const Matrix& g = t == 1 ? g1 : g2;
    for (int i = 0; i < 2; ++i) {
      x[i] *= 1 - cfg.lr * cfg.weight_decay;
      m[i] = cfg.beta1 * m[i] + (1 - cfg.beta1) * g(0, i);
      v[i] = cfg.beta2 * v[i] + (1 - cfg.beta2) * g(0, i) * g(0, i);
      const double mh = m[i] / (1 - std::pow(cfg.beta1, t)), vh = v[i] / (1 - std::pow(cfg.beta2, t));
      x[i] -= cfg.lr * mh / (std::sqrt(vh) + cfg.eps);
    }
  }
  EXPECT_NEAR(p.get("a")(0, 0), x[0], 1e-15);
  EXPECT_NEAR(p.get("a")(0, 1), x[1], 1e-15);
  EXPECT_NEAR(p.get("frozen")(0, 0), 3.0 * (1 - cfg.lr * cfg.weight_decay) * (1 - cfg.lr * cfg.weight_decay), 1e-15);
}

TEST(Training, AccumulatesTwoStepsPerUpdate) {
  Data d;
  const ModelDims dims;
  ParamStore p = init_model(dims, 40);
  const ParamStore init = p;
  Trainer tr(p, dims, InstanceInitConfig{}, TrainConfig{});
  tr.step(d.example({0, 1, 2, 3, 4}));
  EXPECT_EQ(tr.updates(), 0);
  EXPECT_TRUE(p == init);
  tr.step(d.example({1, 2, 3, 4, 5}));
  EXPECT_EQ(tr.updates(), 1);
  EXPECT_FALSE(p == init);
}

TEST(Training, NonFiniteLossIsNumericError) {
  Data d;
  const ModelDims dims;
  ParamStore p = init_model(dims, 41);
  p.mutable_get("head.score.b")(0, 0) = std::numeric_limits<double>::quiet_NaN();
  Trainer tr(p, dims, InstanceInitConfig{}, TrainConfig{});
  try {
    tr.step(d.example({0, 1, 2, 3, 4}));
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("score_bce"), std::string::npos);
  }
}

TEST(Training, LossMovingAverageDecreases) {
  Data d(32, 12);
  const ModelDims dims;
  ParamStore p = init_model(dims, 42);
  Trainer tr(p, dims, InstanceInitConfig{}, TrainConfig{});
  const VideoEntry& v = d.manifest.video("vid000");
  std::vector<double> losses;
  for (int s = 0; s < 500; ++s) {
    const auto idx = sample_frames(v.source_length, SamplingPlan{SamplingMethod::global, 5, mix_seed(43, s)});
    losses.push_back(tr.step(d.example(idx)));
  }
  std::vector<double> block_means;
  for (int k = 0; k < 10; ++k)
    block_means.push_back(std::accumulate(losses.begin() + 50 * k, losses.begin() + 50 * (k + 1), 0.0) / 50);
  for (std::size_t k = 1; k < block_means.size(); ++k)
    EXPECT_LT(block_means[k], block_means[k - 1]) << "block " << k;
}

TEST(Checkpoint, RoundTripIsExact) {
  TempDir dir("ckpt");
  const ParamStore p = init_model(ModelDims{}, 44);
  p.save(dir / "c.bin");
  EXPECT_TRUE(ParamStore::load(dir / "c.bin") == p);
  std::ofstream(dir / "junk.bin") << "not a checkpoint";
  EXPECT_THROW(ParamStore::load(dir / "junk.bin"), Error);
  EXPECT_THROW(ParamStore::load(dir / "missing.bin"), LoadError);
}

}  // namespace
}  // namespace rvos
