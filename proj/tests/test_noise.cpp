#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "nib/noise.hpp"

using namespace nib;

namespace {

void expect_row_stochastic(const NoiseMatrix& q) {
  for (int i = 0; i < q.classes(); ++i) {
    const auto row = q.row(i);
    EXPECT_NEAR(std::accumulate(row.begin(), row.end(), 0.0), 1.0, 1e-9);
    for (double v : row) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

std::vector<Label> cyclic_labels(std::size_t n, int k) {
  std::vector<Label> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = static_cast<Label>(i % k);
  return y;
}

}  // namespace

TEST(NoiseMatrix, SymmetricFortyPercentTenClasses) {
  const auto q = build_noise_matrix(NoiseKind::symmetric, 0.4, 10);
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 10; ++j)
      EXPECT_NEAR(q(i, j), i == j ? 0.6 : 0.4 / 9, 1e-15);
  EXPECT_NEAR(q(0, 1), 0.044444, 1e-6);
  expect_row_stochastic(q);
}

TEST(NoiseMatrix, PairTenPercent) {
  const auto q = build_noise_matrix(NoiseKind::pair, 0.1, 10);
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 10; ++j) {
      const double expect = i == j ? 0.9 : (j == (i + 1) % 10 ? 0.1 : 0.0);
      EXPECT_DOUBLE_EQ(q(i, j), expect);
    }
  expect_row_stochastic(q);
}

TEST(NoiseMatrix, ZeroRateIsIdentity) {
  const auto q = build_noise_matrix(NoiseKind::symmetric, 0.0, 5);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) EXPECT_EQ(q(i, j), i == j ? 1.0 : 0.0);
}

TEST(NoiseMatrix, RowStochasticAcrossKindsAndRates) {
  for (int k : {2, 3, 7, 10})
    for (double r : {0.0, 0.05, 0.2, 0.45, 0.5}) {
      expect_row_stochastic(build_noise_matrix(NoiseKind::symmetric, r, k));
      expect_row_stochastic(build_noise_matrix(NoiseKind::pair, r, k));
    }
  expect_row_stochastic(build_noise_matrix(NoiseKind::symmetric, 0.99, 10));
}

TEST(NoiseMatrix, RejectsBadParameters) {
  EXPECT_THROW(build_noise_matrix(NoiseKind::symmetric, 1.0, 10), ParameterError);
  EXPECT_THROW(build_noise_matrix(NoiseKind::symmetric, -0.1, 10), ParameterError);
  EXPECT_THROW(build_noise_matrix(NoiseKind::pair, 0.6, 10), ParameterError);
  EXPECT_THROW(build_noise_matrix(NoiseKind::symmetric, 0.2, 1), ParameterError);
  EXPECT_THROW(parse_noise_kind("diagonal"), ParameterError);
}

TEST(CorruptLabels, IdentityLeavesLabelsAlone) {
  const auto y = cyclic_labels(1000, 10);
  const auto rec = corrupt_labels(y, build_noise_matrix(NoiseKind::none, 0.0, 10), 7);
  EXPECT_EQ(rec.observed_labels, y);
  EXPECT_EQ(std::count(rec.flip_mask.begin(), rec.flip_mask.end(), true), 0);
  EXPECT_EQ(rec.realized_rate, 0.0);
}

TEST(CorruptLabels, SymmetricRateConcentrates) {
  // 3 binomial standard deviations at p = 0.4, N = 10000: 0.0147.
  const auto y = cyclic_labels(10000, 10);
  const auto rec = corrupt_labels(y, build_noise_matrix(NoiseKind::symmetric, 0.4, 10), 123);
  EXPECT_NEAR(rec.realized_rate, 0.4, 0.015);
}

TEST(CorruptLabels, PerClassFlipFrequencyConverges) {
  const int k = 4;
  const std::size_t n = 40000;  // 10000 per class
  const auto y = cyclic_labels(n, k);
  for (NoiseKind kind : {NoiseKind::symmetric, NoiseKind::pair}) {
    const double rate = 0.3;
    const auto rec = corrupt_labels(y, build_noise_matrix(kind, rate, k), 99);
    const double tol = 3 * std::sqrt(rate * (1 - rate) / 10000.0);
    for (int c = 0; c < k; ++c) {
      std::size_t total = 0, flipped = 0;
      for (std::size_t i = 0; i < n; ++i)
        if (y[i] == c) {
          ++total;
          flipped += rec.flip_mask[i];
          if (kind == NoiseKind::pair && rec.flip_mask[i])
            EXPECT_EQ(rec.observed_labels[i], (c + 1) % k);
        }
      EXPECT_NEAR(static_cast<double>(flipped) / total, rate, tol) << "class " << c;
    }
  }
}

TEST(CorruptLabels, FlipMaskMatchesLabelChange) {
  const auto y = cyclic_labels(5000, 10);
  const auto rec = corrupt_labels(y, build_noise_matrix(NoiseKind::symmetric, 0.5, 10), 5);
  std::size_t flips = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    EXPECT_EQ(rec.flip_mask[i], rec.observed_labels[i] != y[i]);
    flips += rec.flip_mask[i];
  }
  EXPECT_DOUBLE_EQ(rec.realized_rate, static_cast<double>(flips) / y.size());
}

TEST(CorruptLabels, DeterministicGivenSeed) {
  const auto y = cyclic_labels(3000, 10);
  const auto q = build_noise_matrix(NoiseKind::symmetric, 0.2, 10);
  EXPECT_EQ(corrupt_labels(y, q, 42), corrupt_labels(y, q, 42));
  EXPECT_NE(corrupt_labels(y, q, 42).observed_labels, corrupt_labels(y, q, 43).observed_labels);
}

TEST(CorruptLabels, RejectsOutOfRangeLabel) {
  const std::vector<Label> y = {0, 1, 10};
  EXPECT_THROW(corrupt_labels(y, build_noise_matrix(NoiseKind::symmetric, 0.2, 10), 1), DataError);
}
