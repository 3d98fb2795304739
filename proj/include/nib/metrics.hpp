#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "nib/classifier.hpp"
#include "nib/common.hpp"
#include "nib/dataset.hpp"
#include "nib/losses.hpp"
#include "nib/transition.hpp"

namespace nib {

inline Real accuracy(std::span<const Label> predicted, std::span<const Label> truth) {
  if (predicted.empty()) throw ParameterError("accuracy of an empty set");
  if (predicted.size() != truth.size()) throw ParameterError("accuracy inputs differ in length");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) correct += predicted[i] == truth[i];
  return static_cast<Real>(correct) / static_cast<Real>(predicted.size());
}

/// Fraction of the selected samples whose observed label is uncorrupted.
inline Real label_precision(std::span<const std::size_t> kept, const std::vector<bool>& flip_mask) {
  if (kept.empty()) throw ParameterError("label precision of an empty selection");
  std::size_t clean = 0;
  for (std::size_t i : kept) clean += !flip_mask.at(i);
  return static_cast<Real>(clean) / static_cast<Real>(kept.size());
}

inline Real last_k_mean(std::span<const Real> stream, std::size_t k) {
  if (k == 0 || k > stream.size()) throw ParameterError("last_k_mean: k must lie in [1, length]");
  const auto tail = stream.subspan(stream.size() - k);
  return std::accumulate(tail.begin(), tail.end(), Real{0}) / static_cast<Real>(k);
}

inline Real mean(std::span<const Real> v) {
  if (v.empty()) return std::numeric_limits<Real>::quiet_NaN();
  return std::accumulate(v.begin(), v.end(), Real{0}) / static_cast<Real>(v.size());
}

/// Sample standard deviation (n - 1); zero for fewer than two values.
inline Real stddev(std::span<const Real> v) {
  if (v.size() < 2) return 0;
  const Real m = mean(v);
  Real s = 0;
  for (Real x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<Real>(v.size() - 1));
}

inline Real pooled_stddev(std::span<const Real> a, std::span<const Real> b) {
  const auto na = static_cast<Real>(a.size()), nb = static_cast<Real>(b.size());
  if (na + nb <= 2) return 0;
  const Real sa = stddev(a), sb = stddev(b);
  return std::sqrt(((na - 1) * sa * sa + (nb - 1) * sb * sb) / (na + nb - 2));
}

struct RankSumResult {
  Real u = 0;        // Mann-Whitney U of the first sample
  Real z = 0;        // tie-corrected normal score, continuity corrected
  Real p_greater = 1;  // one-sided p for "first sample tends to be larger"
};

/// Wilcoxon rank-sum / Mann-Whitney U test, normal approximation.
inline RankSumResult rank_sum_test(std::span<const Real> x, std::span<const Real> y) {
  RankSumResult r;
  const std::size_t n1 = x.size(), n2 = y.size();
  if (n1 == 0 || n2 == 0) return r;
  std::vector<std::pair<Real, int>> all;
  all.reserve(n1 + n2);
  for (Real v : x) all.emplace_back(v, 0);
  for (Real v : y) all.emplace_back(v, 1);
  std::sort(all.begin(), all.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  Real rank_x = 0, tie_term = 0;
  for (std::size_t i = 0; i < all.size();) {
    std::size_t j = i;
    while (j < all.size() && all[j].first == all[i].first) ++j;
    const Real avg = (static_cast<Real>(i + 1) + static_cast<Real>(j)) / 2;
    const Real t = static_cast<Real>(j - i);
    tie_term += t * t * t - t;
    for (std::size_t k = i; k < j; ++k)
      if (all[k].second == 0) rank_x += avg;
    i = j;
  }
  const Real a = static_cast<Real>(n1), b = static_cast<Real>(n2), n = a + b;
  r.u = rank_x - a * (a + 1) / 2;
  const Real mu = a * b / 2;
  const Real var = a * b / 12 * ((n + 1) - tie_term / (n * (n - 1)));
  if (var <= 0) return r;
  r.z = (r.u - mu - 0.5) / std::sqrt(var);
  r.p_greater = 0.5 * std::erfc(r.z / std::sqrt(2.0));
  return r;
}

/// Class probabilities for every sample of `ds`, evaluated in chunks.
inline Probabilities predict_dataset(const Classifier& net, const LabeledDataset& ds,
                                     std::size_t chunk = 512) {
  Probabilities out;
  out.rows = ds.size();
  out.classes = static_cast<std::size_t>(net.classes());
  out.data.reserve(out.rows * out.classes);
  const std::size_t d = ds.dim();
  for (std::size_t begin = 0; begin < ds.size(); begin += chunk) {
    const std::size_t rows = std::min(chunk, ds.size() - begin);
    const auto p = net.predict_proba(
        std::span<const Real>(ds.features.data() + begin * d, rows * d), rows);
    out.data.insert(out.data.end(), p.data.begin(), p.data.end());
  }
  return out;
}

inline std::vector<Label> predicted_classes(const Probabilities& p) {
  std::vector<Label> out(p.rows);
  for (std::size_t i = 0; i < p.rows; ++i) out[i] = static_cast<Label>(argmax(p.row(i)));
  return out;
}

/// Element-wise mean of two probability tables.
inline Probabilities average(const Probabilities& a, const Probabilities& b) {
  Probabilities out = a;
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = (a.data[i] + b.data[i]) / 2;
  return out;
}

// ---------------------------------------------------------------------------
// Hard-clean vs mislabeled loss separation

struct LossGroup {
  std::vector<std::size_t> members;
  std::vector<Real> cls;
  std::vector<Real> ic;  // only members whose observed class row is seen

  Real mean_cls() const { return mean(cls); }
  Real mean_ic() const { return mean(ic); }
};

struct HardNoisyReport {
  Real lambda = 0.6;
  Real hard_fraction = 0.1;
  LossGroup easy_clean;
  LossGroup hard_clean;
  LossGroup flipped;
  bool flipped_empty = true;
  RankSumResult ic_flipped_vs_hard;
  RankSumResult cls_flipped_vs_hard;
  Real cls_pooled_std = 0;  // flipped and hard-clean ℓ_cls
};

/// margin = p[true] - max_{j != true} p[j]
inline Real prediction_margin(std::span<const Real> p, Label y) {
  Real other = -1;
  for (std::size_t j = 0; j < p.size(); ++j)
    if (static_cast<Label>(j) != y) other = std::max(other, p[j]);
  return p[y] - other;
}

/// Splits the clean samples into the lowest-margin decile ("hard") and the
/// rest ("easy"), and reports ℓ_cls and ℓ_IC (against the observed label and
/// its class row) for those two groups and for the flipped samples.
inline HardNoisyReport hard_vs_noisy_report(const Probabilities& probs, const LabeledDataset& ds,
                                            const TransitionMatrix& snapshot, Real lambda,
                                            Real hard_fraction = 0.1) {
  check_lambda(lambda);
  if (probs.rows != ds.size()) throw ParameterError("prediction count does not match dataset");
  HardNoisyReport rep;
  rep.lambda = lambda;
  rep.hard_fraction = hard_fraction;

  std::vector<std::size_t> clean;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (ds.flip_mask[i]) rep.flipped.members.push_back(i);
    else clean.push_back(i);
  }
  std::vector<Real> margin(ds.size());
  for (std::size_t i : clean) margin[i] = prediction_margin(probs.row(i), ds.true_labels[i]);
  std::stable_sort(clean.begin(), clean.end(),
                   [&](std::size_t a, std::size_t b) { return margin[a] < margin[b]; });
  const auto n_hard = static_cast<std::size_t>(
      std::ceil(hard_fraction * static_cast<Real>(clean.size()) - 1e-9));
  rep.hard_clean.members.assign(clean.begin(), clean.begin() + static_cast<long>(n_hard));
  rep.easy_clean.members.assign(clean.begin() + static_cast<long>(n_hard), clean.end());

  for (LossGroup* g : {&rep.easy_clean, &rep.hard_clean, &rep.flipped}) {
    std::sort(g->members.begin(), g->members.end());
    for (std::size_t i : g->members) {
      const Label y = ds.observed_labels[i];
      g->cls.push_back(cross_entropy(probs.row(i), y));
      if (const auto soft = soft_label(snapshot, y)) g->ic.push_back(ic_loss(*soft, probs.row(i)));
    }
  }
  rep.flipped_empty = rep.flipped.members.empty();
  rep.ic_flipped_vs_hard = rank_sum_test(rep.flipped.ic, rep.hard_clean.ic);
  rep.cls_flipped_vs_hard = rank_sum_test(rep.flipped.cls, rep.hard_clean.cls);
  rep.cls_pooled_std = pooled_stddev(rep.flipped.cls, rep.hard_clean.cls);
  return rep;
}

inline HardNoisyReport hard_vs_noisy_report(const Classifier& net, const LabeledDataset& ds,
                                            const TransitionMatrix& snapshot, Real lambda,
                                            Real hard_fraction = 0.1) {
  return hard_vs_noisy_report(predict_dataset(net, ds), ds, snapshot, lambda, hard_fraction);
}

}  // namespace nib
