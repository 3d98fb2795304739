#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <optional>
#include <vector>

#include "nib/random.hpp"
#include "nib/transition.hpp"

using namespace nib;

namespace {

using Row = std::optional<std::vector<Real>>;

std::vector<Real> random_simplex(Rng& rng, int k) {
  std::vector<Real> p(k);
  Real s = 0;
  for (Real& v : p) s += (v = rng.uniform() + 1e-3);
  for (Real& v : p) v /= s;
  return p;
}

}  // namespace

TEST(BatchClassRow, MeanOfPredictions) {
  const std::vector<Real> a = {0.8, 0.2}, b = {0.6, 0.4};
  const std::vector<std::span<const Real>> two = {a, b};
  const auto row = batch_class_row(two);
  ASSERT_TRUE(row);
  EXPECT_NEAR((*row)[0], 0.7, 1e-15);
  EXPECT_NEAR((*row)[1], 0.3, 1e-15);

  const std::vector<std::span<const Real>> one = {a};
  EXPECT_EQ(*batch_class_row(one), a);
  EXPECT_FALSE(batch_class_row({}));
}

TEST(BatchClassRows, GroupsKeptSamplesByLabel) {
  const std::vector<std::vector<Real>> probs = {{0.9, 0.1, 0.0}, {0.2, 0.8, 0.0}, {0.7, 0.3, 0.0},
                                                {0.1, 0.1, 0.8}};
  const std::vector<Label> labels = {0, 1, 0, 2};
  const std::vector<std::size_t> kept = {0, 1, 2};
  const auto rows = batch_class_rows(3, labels, kept, [&](std::size_t i) {
    return std::span<const Real>(probs[i]);
  });
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_NEAR((*rows[0])[0], 0.8, 1e-15);
  EXPECT_EQ(*rows[1], probs[1]);
  EXPECT_FALSE(rows[2]);
}

TEST(TransitionState, SingleBatchContributingAllRows) {
  TransitionState st(3);
  std::vector<Row> rows = {std::vector<Real>{0.8, 0.1, 0.1}, std::vector<Real>{0.2, 0.7, 0.1},
                           std::vector<Real>{0.0, 0.5, 0.5}};
  st.accumulate_batch(rows);
  for (int k = 0; k < 3; ++k) {
    EXPECT_EQ(st.counts()[k], 1);
    const auto s = st.row_sum(k);
    EXPECT_TRUE(std::equal(s.begin(), s.end(), rows[k]->begin()));
  }
  EXPECT_FALSE(st.per_class_normalized());
}

TEST(TransitionState, TwoBatchesSumAndCount) {
  TransitionState st(2);
  st.accumulate_batch(std::vector<Row>{std::vector<Real>{1, 0}, std::nullopt});
  st.accumulate_batch(std::vector<Row>{std::vector<Real>{0, 1}, std::nullopt});
  EXPECT_EQ(st.row_sum(0)[0], 1.0);
  EXPECT_EQ(st.row_sum(0)[1], 1.0);
  EXPECT_EQ(st.counts()[0], 2);
  EXPECT_EQ(st.counts()[1], 0);
  EXPECT_TRUE(st.per_class_normalized());
}

TEST(TransitionState, AbsentClassLeavesCountUnchanged) {
  TransitionState st(4);
  Rng rng(1);
  std::vector<Row> rows(4);
  for (int k = 0; k < 3; ++k) rows[k] = random_simplex(rng, 4);
  st.accumulate_batch(rows);
  EXPECT_EQ(st.counts()[3], 0);
  const auto s = st.row_sum(3);
  EXPECT_TRUE(std::all_of(s.begin(), s.end(), [](Real v) { return v == 0; }));
}

TEST(TransitionState, RejectsMalformedRows) {
  TransitionState st(2);
  EXPECT_THROW(st.accumulate_batch(std::vector<Row>{std::vector<Real>{0.7, 0.7}, std::nullopt}),
               ContractError);
  EXPECT_THROW(st.accumulate_batch(std::vector<Row>{std::vector<Real>{1.2, -0.2}, std::nullopt}),
               ContractError);
  EXPECT_THROW(st.accumulate_batch(std::vector<Row>{std::nullopt}), ContractError);
  EXPECT_EQ(st.batches(), 0);
}

TEST(TransitionState, SnapshotAveragesOneEpoch) {
  TransitionState st(2);
  const std::vector<Real> r1 = {0.9, 0.1}, r2 = {0.5, 0.5};
  st.accumulate_batch(std::vector<Row>{r1, std::nullopt});
  // Served snapshot is still the zero matrix until the epoch closes.
  EXPECT_FALSE(soft_label(st.snapshot(), 0));
  st.accumulate_batch(std::vector<Row>{r2, std::nullopt});
  const auto& t = st.snapshot_epoch();
  EXPECT_NEAR(t(0, 0), 0.7, 1e-15);
  EXPECT_NEAR(t(0, 1), 0.3, 1e-15);
  EXPECT_FALSE(t.seen[1]);
  EXPECT_EQ(t(1, 0), 0.0);
  EXPECT_EQ(t(1, 1), 0.0);
  EXPECT_EQ(st.epoch(), 1);
}

TEST(TransitionState, MultiEpochSnapshotMatchesReplay) {
  const int k = 3;
  TransitionState st(k);
  Rng rng(5);
  std::vector<std::vector<Row>> log;
  for (int epoch = 0; epoch < 2; ++epoch) {
    for (int b = 0; b < 2; ++b) {
      std::vector<Row> rows(k);
      for (int c = 0; c < k; ++c)
        if (rng.uniform() < 0.8 || c == 0) rows[c] = random_simplex(rng, k);
      log.push_back(rows);
      st.accumulate_batch(rows);
    }
    const auto& t = st.snapshot_epoch();
    for (int c = 0; c < k; ++c) {
      std::vector<Real> mean(k, 0.0);
      long n = 0;
      for (const auto& rows : log)
        if (rows[c]) {
          ++n;
          for (int j = 0; j < k; ++j) mean[j] += (*rows[c])[j];
        }
      ASSERT_EQ(t.seen[c], n > 0);
      if (!n) continue;
      Real sum = 0;
      for (int j = 0; j < k; ++j) {
        EXPECT_NEAR(t(c, j), mean[j] / n, 1e-12);
        sum += t(c, j);
      }
      EXPECT_NEAR(sum, 1.0, 1e-9);
    }
  }
  EXPECT_EQ(st.counts()[0], 4);  // class 0 contributed in all 4 batches over 2 epochs
}

TEST(TransitionState, OrderIndependentWithinEpoch) {
  const int k = 4;
  Rng rng(8);
  std::vector<std::vector<Row>> batches;
  for (int b = 0; b < 6; ++b) {
    std::vector<Row> rows(k);
    for (int c = 0; c < k; ++c) rows[c] = random_simplex(rng, k);
    batches.push_back(rows);
  }
  TransitionState fwd(k), rev(k);
  for (const auto& b : batches) fwd.accumulate_batch(b);
  for (auto it = batches.rbegin(); it != batches.rend(); ++it) rev.accumulate_batch(*it);
  const auto a = fwd.snapshot_epoch();
  const auto b = rev.snapshot_epoch();
  for (std::size_t i = 0; i < a.entries.size(); ++i) EXPECT_NEAR(a.entries[i], b.entries[i], 1e-14);
}

TEST(SoftLabel, SeenUnseenAndInvalid) {
  TransitionState st(3);
  st.accumulate_batch(std::vector<Row>{std::nullopt, std::vector<Real>{0.1, 0.8, 0.1}, std::nullopt});
  const auto& t = st.snapshot_epoch();
  const auto s = soft_label(t, 1);
  ASSERT_TRUE(s);
  EXPECT_TRUE(is_probability_vector(*s, 1e-9));
  EXPECT_FALSE(soft_label(t, 0));
  EXPECT_THROW(soft_label(t, 3), ParameterError);
  EXPECT_THROW(soft_label(t, -1), ParameterError);
}
