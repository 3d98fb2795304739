#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nib/common.hpp"
#include "nib/random.hpp"

namespace nib {

enum class NoiseKind { none, symmetric, pair };

inline std::string_view to_string(NoiseKind k) {
  switch (k) {
    case NoiseKind::none: return "none";
    case NoiseKind::symmetric: return "symmetric";
    case NoiseKind::pair: return "pair";
  }
  return "none";
}

inline NoiseKind parse_noise_kind(std::string_view s) {
  if (s == "none" || s == "identity") return NoiseKind::none;
  if (s == "symmetric" || s == "symmetry") return NoiseKind::symmetric;
  if (s == "pair") return NoiseKind::pair;
  throw ParameterError("unknown noise kind '" + std::string(s) + "'");
}

/// Row-stochastic flip table: entry (i, j) is Pr[observed = j | true = i].
class NoiseMatrix {
 public:
  NoiseMatrix(NoiseKind kind, Real rate, int classes)
      : kind_(kind), rate_(rate), classes_(classes),
        entries_(static_cast<std::size_t>(classes) * classes, 0.0) {}

  NoiseKind kind() const { return kind_; }
  Real rate() const { return rate_; }
  int classes() const { return classes_; }

  Real operator()(int i, int j) const { return entries_[index(i, j)]; }
  Real& operator()(int i, int j) { return entries_[index(i, j)]; }

  std::span<const Real> row(int i) const {
    return {entries_.data() + static_cast<std::size_t>(i) * classes_,
            static_cast<std::size_t>(classes_)};
  }

 private:
  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(i) * classes_ + j;
  }

  NoiseKind kind_;
  Real rate_;
  int classes_;
  std::vector<Real> entries_;
};

/// Symmetric flipping spreads `rate` uniformly over the K-1 other classes;
/// pair flipping moves it onto the cyclic successor (i + 1) mod K.
/// `NoiseKind::none` (and rate 0) yields the identity.
inline NoiseMatrix build_noise_matrix(NoiseKind kind, Real rate, int classes) {
  if (classes < 2) throw ParameterError("noise matrix needs at least 2 classes");
  if (!(rate >= 0)) throw ParameterError("noise rate must be >= 0");
  if (kind == NoiseKind::symmetric && !(rate < 1))
    throw ParameterError("symmetric noise rate must be < 1");
  if (kind == NoiseKind::pair && !(rate <= 0.5))
    throw ParameterError("pair noise rate must be <= 0.5");
  if (kind == NoiseKind::none) rate = 0;

  NoiseMatrix q(kind, rate, classes);
  for (int i = 0; i < classes; ++i) {
    q(i, i) = 1 - rate;
    if (rate == 0) continue;
    if (kind == NoiseKind::symmetric) {
      for (int j = 0; j < classes; ++j)
        if (j != i) q(i, j) = rate / (classes - 1);
    } else {
      q(i, (i + 1) % classes) = rate;
    }
  }
  return q;
}

struct CorruptionRecord {
  std::vector<Label> observed_labels;
  std::vector<bool> flip_mask;
  Real realized_rate = 0;

  bool operator==(const CorruptionRecord&) const = default;
};

/// Draws each observed label independently from row Q[true label] using a
/// call-local stream seeded by `seed`.
inline CorruptionRecord corrupt_labels(std::span<const Label> true_labels,
                                       const NoiseMatrix& q, std::uint64_t seed) {
  const int k = q.classes();
  CorruptionRecord rec;
  rec.observed_labels.reserve(true_labels.size());
  rec.flip_mask.reserve(true_labels.size());

  Rng rng(derive_seed(seed, 0x6e6f697365ULL));
  std::size_t flipped = 0;
  for (std::size_t i = 0; i < true_labels.size(); ++i) {
    const Label y = true_labels[i];
    if (y < 0 || y >= k)
      throw DataError("label " + std::to_string(y) + " at index " + std::to_string(i) +
                      " outside [0," + std::to_string(k) + ")");
    const auto row = q.row(y);
    const double u = rng.uniform();
    double acc = 0;
    Label drawn = y;
    for (int j = 0; j < k; ++j) {
      acc += row[j];
      if (u < acc) {
        drawn = j;
        break;
      }
    }
    rec.observed_labels.push_back(drawn);
    rec.flip_mask.push_back(drawn != y);
    flipped += drawn != y;
  }
  rec.realized_rate = true_labels.empty()
                          ? 0.0
                          : static_cast<Real>(flipped) / static_cast<Real>(true_labels.size());
  return rec;
}

}  // namespace nib
