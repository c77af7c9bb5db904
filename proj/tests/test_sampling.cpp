#include <gtest/gtest.h>

#include "rvos/errors.hpp"
#include "rvos/rng.hpp"
#include "rvos/sampling.hpp"

namespace rvos {
namespace {

SamplingPlan plan(SamplingMethod m, int t, std::uint64_t seed) { return SamplingPlan{m, t, seed}; }

// 0.99 quantiles of the chi-squared distribution (scipy.stats.chi2.ppf).
constexpr double kChi2Crit19 = 36.19086912927004;
constexpr double kChi2Crit95 = 129.97267872679876;

TEST(GlobalSample, SingletonSegmentsWhenLengthEqualsT) {
  for (std::uint64_t s = 0; s < 20; ++s)
    EXPECT_EQ(global_sample(5, plan(SamplingMethod::global, 5, s)), (std::vector<int>{0, 1, 2, 3, 4}));
}

TEST(GlobalSample, OneIndexPerSegment) {
  for (std::uint64_t s = 0; s < 200; ++s) {
    const auto idx = global_sample(100, plan(SamplingMethod::global, 5, s));
    ASSERT_EQ(idx.size(), 5u);
    for (int i = 0; i < 5; ++i) {
      EXPECT_GE(idx[static_cast<std::size_t>(i)], 20 * i);
      EXPECT_LT(idx[static_cast<std::size_t>(i)], 20 * i + 20);
    }
  }
}

TEST(GlobalSample, UnevenSegmentsPartitionTheVideo) {
  Rng rng(4);
  for (int trial = 0; trial < 1000; ++trial) {
    const int T = 1 + static_cast<int>(rng.index(9));
    const int L = T + static_cast<int>(rng.index(60));
    const auto idx = global_sample(L, plan(SamplingMethod::global, T, rng.next()));
    ASSERT_EQ(static_cast<int>(idx.size()), T);
    for (int i = 0; i < T; ++i) {
      const long lo = static_cast<long>(i) * L / T, hi = static_cast<long>(i + 1) * L / T;
      ASSERT_GE(idx[static_cast<std::size_t>(i)], lo);
      ASSERT_LT(idx[static_cast<std::size_t>(i)], hi);
      if (i) ASSERT_GT(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(i) - 1]);
    }
  }
}

TEST(GlobalSample, PerSegmentUniformity) {
  const int L = 100, T = 5, draws = 10000;
  std::vector<std::vector<int>> counts(T, std::vector<int>(20, 0));
  for (int s = 0; s < draws; ++s) {
    const auto idx = global_sample(L, plan(SamplingMethod::global, T, static_cast<std::uint64_t>(s)));
    for (int i = 0; i < T; ++i) ++counts[static_cast<std::size_t>(i)][static_cast<std::size_t>(idx[i] - 20 * i)];
  }
  const double expected = draws / 20.0;
  const double sigma = std::sqrt(draws * (1.0 / 20) * (19.0 / 20));
  double pooled = 0;
  for (const auto& seg : counts) {
    double chi2 = 0;
    for (int c : seg) {
      chi2 += (c - expected) * (c - expected) / expected;
      EXPECT_LE(std::abs(c - expected), 3 * sigma);
    }
    EXPECT_LT(chi2, kChi2Crit19);
    pooled += chi2;
  }
  EXPECT_LT(pooled, kChi2Crit95);
}

TEST(LocalSample, OnlyWindowWhenLengthEqualsT) {
  for (std::uint64_t s = 0; s < 20; ++s)
    EXPECT_EQ(local_sample(5, plan(SamplingMethod::local, 5, s)), (std::vector<int>{0, 1, 2, 3, 4}));
}

TEST(LocalSample, ConsecutiveWindowInRange) {
  Rng rng(8);
  for (int trial = 0; trial < 1000; ++trial) {
    const int T = 1 + static_cast<int>(rng.index(9));
    const int L = T + static_cast<int>(rng.index(60));
    const auto idx = local_sample(L, plan(SamplingMethod::local, T, rng.next()));
    ASSERT_EQ(static_cast<int>(idx.size()), T);
    EXPECT_GE(idx.front(), 0);
    EXPECT_LT(idx.back(), L);
    for (int i = 1; i < T; ++i) EXPECT_EQ(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(i) - 1] + 1);
  }
}

TEST(LocalSample, SpanComparedWithGlobal) {
  double global_span = 0;
  for (std::uint64_t s = 0; s < 1000; ++s) {
    const auto l = local_sample(100, plan(SamplingMethod::local, 5, s));
    EXPECT_EQ(l.back() - l.front(), 4);
    const auto g = global_sample(100, plan(SamplingMethod::global, 5, s));
    global_span += g.back() - g.front();
  }
  EXPECT_GE(global_span / 1000, 80.0 * 4 / 5);
}

TEST(Sampling, ShortVideoPadsWithLastIndex) {
  for (auto m : {SamplingMethod::global, SamplingMethod::local}) {
    EXPECT_EQ(sample_frames(3, plan(m, 5, 1)), (std::vector<int>{0, 1, 2, 2, 2}));
    EXPECT_EQ(sample_frames(1, plan(m, 3, 1)), (std::vector<int>{0, 0, 0}));
  }
}

TEST(Sampling, DeterministicAndSortedInRange) {
  Rng rng(5);
  for (int trial = 0; trial < 500; ++trial) {
    const int L = 1 + static_cast<int>(rng.index(40));
    const int T = 1 + static_cast<int>(rng.index(8));
    const auto m = rng.bernoulli(0.5) ? SamplingMethod::global : SamplingMethod::local;
    const std::uint64_t seed = rng.next();
    const auto a = sample_frames(L, plan(m, T, seed));
    EXPECT_EQ(a, sample_frames(L, plan(m, T, seed)));
    ASSERT_EQ(static_cast<int>(a.size()), T);
    EXPECT_TRUE(std::is_sorted(a.begin(), a.end()));
    EXPECT_GE(a.front(), 0);
    EXPECT_LT(a.back(), L);
  }
}

TEST(Sampling, NonPositiveLengthIsDomainError) {
  EXPECT_THROW(global_sample(0, plan(SamplingMethod::global, 5, 0)), DomainError);
  EXPECT_THROW(local_sample(-3, plan(SamplingMethod::local, 5, 0)), DomainError);
  EXPECT_THROW(parse_sampling_method("middle"), ValidationError);
}

}  // namespace
}  // namespace rvos
