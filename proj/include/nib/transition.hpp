#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nib/common.hpp"

namespace nib {

/// K x K table whose row k is the averaged clean prediction for class k.
/// A row that never received a contribution is the zero vector.
struct TransitionMatrix {
  int classes = 0;
  std::vector<Real> entries;
  std::vector<bool> seen;

  TransitionMatrix() = default;
  explicit TransitionMatrix(int k)
      : classes(k), entries(static_cast<std::size_t>(k) * k, 0.0), seen(k, false) {}

  std::span<const Real> row(int k) const {
    return {entries.data() + static_cast<std::size_t>(k) * classes,
            static_cast<std::size_t>(classes)};
  }
  Real operator()(int i, int j) const { return entries[static_cast<std::size_t>(i) * classes + j]; }
};

/// Mean of the clean predictions of one class within one batch, or nullopt
/// when the class has no clean sample in that batch.
inline std::optional<std::vector<Real>> batch_class_row(
    std::span<const std::span<const Real>> predictions) {
  if (predictions.empty()) return std::nullopt;
  std::vector<Real> row(predictions.front().size(), 0.0);
  for (const auto& p : predictions)
    for (std::size_t k = 0; k < row.size(); ++k) row[k] += p[k];
  for (Real& v : row) v /= static_cast<Real>(predictions.size());
  return row;
}

/// Per-class batch rows from a batch's predictions restricted to `kept`.
/// `rows(i)` yields the prediction of batch position i.
template <typename RowFn>
std::vector<std::optional<std::vector<Real>>> batch_class_rows(int classes,
                                                               std::span<const Label> labels,
                                                               std::span<const std::size_t> kept,
                                                               RowFn&& rows) {
  std::vector<std::vector<std::span<const Real>>> by_class(classes);
  for (std::size_t i : kept) by_class[labels[i]].push_back(rows(i));
  std::vector<std::optional<std::vector<Real>>> out(classes);
  for (int k = 0; k < classes; ++k) out[k] = batch_class_row(by_class[k]);
  return out;
}

/// Running sums and contribution counts of the batch rows, plus the frozen
/// snapshot served as soft labels during the following epoch.
class TransitionState {
 public:
  explicit TransitionState(int classes)
      : classes_(classes),
        sums_(static_cast<std::size_t>(classes) * classes, 0.0),
        counts_(classes, 0),
        snapshot_(classes) {
    require(classes >= 2, "transition state needs at least 2 classes");
  }

  int classes() const { return classes_; }
  int epoch() const { return epoch_; }
  const std::vector<long>& counts() const { return counts_; }
  long batches() const { return batches_; }
  std::span<const Real> row_sum(int k) const {
    return {sums_.data() + static_cast<std::size_t>(k) * classes_,
            static_cast<std::size_t>(classes_)};
  }

  /// Snapshot taken at the end of the previous epoch (zero before the first).
  const TransitionMatrix& snapshot() const { return snapshot_; }

  /// True when some class row was missing from a batch since the start, so
  /// the rows are normalized by per-class counts instead of the number of
  /// (epoch, batch) pairs.
  bool per_class_normalized() const {
    for (long c : counts_)
      if (c != batches_) return true;
    return false;
  }

  void accumulate_batch(std::span<const std::optional<std::vector<Real>>> rows) {
    if (rows.size() != static_cast<std::size_t>(classes_))
      throw ContractError("expected one batch row slot per class");
    for (int k = 0; k < classes_; ++k) {
      const auto& r = rows[k];
      if (!r) continue;
      if (!is_probability_vector(*r, 1e-6) || r->size() != static_cast<std::size_t>(classes_))
        throw ContractError("batch row for class " + std::to_string(k) +
                            " is not a probability vector");
      Real* dst = sums_.data() + static_cast<std::size_t>(k) * classes_;
      for (int j = 0; j < classes_; ++j) dst[j] += (*r)[j];
      ++counts_[k];
    }
    ++batches_;
  }

  /// Averages the accumulated rows into a new snapshot and advances the epoch.
  const TransitionMatrix& snapshot_epoch() {
    TransitionMatrix t(classes_);
    for (int k = 0; k < classes_; ++k) {
      if (counts_[k] == 0) continue;
      t.seen[k] = true;
      const auto s = row_sum(k);
      for (int j = 0; j < classes_; ++j)
        t.entries[static_cast<std::size_t>(k) * classes_ + j] =
            s[j] / static_cast<Real>(counts_[k]);
    }
    snapshot_ = std::move(t);
    ++epoch_;
    return snapshot_;
  }

 private:
  int classes_;
  std::vector<Real> sums_;
  std::vector<long> counts_;
  long batches_ = 0;
  int epoch_ = 0;
  TransitionMatrix snapshot_;
};

/// Row `k` of the snapshot, or nullopt for a class that was never seen.
inline std::optional<std::span<const Real>> soft_label(const TransitionMatrix& t, int k) {
  if (k < 0 || k >= t.classes) throw ParameterError("class index out of range");
  if (!t.seen[k]) return std::nullopt;
  return t.row(k);
}

}  // namespace nib
