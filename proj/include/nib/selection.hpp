#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nib/classifier.hpp"
#include "nib/common.hpp"
#include "nib/losses.hpp"
#include "nib/transition.hpp"

namespace nib {

/// Ranking criterion for small-loss selection.
enum class Criterion { cls_only, overall, ic_only };

inline std::string_view to_string(Criterion c) {
  switch (c) {
    case Criterion::cls_only: return "cls_only";
    case Criterion::overall: return "overall";
    case Criterion::ic_only: return "ic_only";
  }
  return "cls_only";
}

inline Criterion parse_criterion(std::string_view s) {
  if (s == "cls_only") return Criterion::cls_only;
  if (s == "overall") return Criterion::overall;
  if (s == "ic_only") return Criterion::ic_only;
  throw ParameterError("unknown selection mode '" + std::string(s) + "'");
}

/// R(T) = 1 - tau * min(T / ramp, 1), with T the zero-based epoch index.
inline Real remember_rate(int epoch, Real tau, int ramp_epochs) {
  if (!(tau >= 0 && tau < 1)) throw ParameterError("tau must lie in [0,1)");
  if (ramp_epochs < 1) throw ParameterError("ramp epochs must be >= 1");
  if (epoch < 0) throw ParameterError("epoch must be >= 0");
  return 1 - tau * std::min(static_cast<Real>(epoch) / ramp_epochs, Real{1});
}

/// ceil(R * n). A 1e-9 slack absorbs round-off such as 0.9 * 10 = 9.000...02.
inline std::size_t keep_count(Real rate, std::size_t batch) {
  const auto d = static_cast<std::size_t>(std::ceil(rate * static_cast<Real>(batch) - 1e-9));
  return std::min(d, batch);
}

struct SelectionOutcome {
  std::vector<std::size_t> kept;  // strictly increasing batch positions
  std::size_t d = 0;
  Criterion criterion = Criterion::cls_only;
};

/// Keeps the `d` smallest losses; ties go to the lower batch index.
inline SelectionOutcome select_clean(std::span<const Real> losses, std::size_t d,
                                     Criterion criterion = Criterion::cls_only) {
  if (d > losses.size()) throw ParameterError("keep count exceeds batch size");
  for (Real v : losses)
    if (!std::isfinite(v)) throw ParameterError("selection losses must be finite");
  std::vector<std::size_t> order(losses.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return losses[a] < losses[b]; });
  order.resize(d);
  std::sort(order.begin(), order.end());
  return {std::move(order), d, criterion};
}

struct CriterionScores {
  std::vector<LossBreakdown> parts;
  std::vector<Real> criterion;
};

/// Per-sample breakdowns against each sample's observed-class soft label,
/// and the ranking value for `mode`. A sample whose class row is unseen is
/// ranked by cross-entropy in every mode.
inline CriterionScores criterion_losses(const Probabilities& probs,
                                        std::span<const Label> labels,
                                        const TransitionMatrix& snapshot, Real lambda,
                                        Criterion mode) {
  check_lambda(lambda);
  if (labels.size() != probs.rows) throw ParameterError("label count does not match batch");
  CriterionScores out;
  out.parts.reserve(labels.size());
  out.criterion.reserve(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto soft = soft_label(snapshot, labels[i]);
    const LossBreakdown b = sample_loss(probs.row(i), labels[i], soft, lambda);
    Real c = b.cls;
    if (soft) {
      if (mode == Criterion::overall) c = b.overall;
      else if (mode == Criterion::ic_only) c = b.ic;
    }
    out.parts.push_back(b);
    out.criterion.push_back(c);
  }
  return out;
}

}  // namespace nib
