#pragma once

#include <span>
#include <string>
#include <vector>

#include "nib/common.hpp"

namespace nib {

/// Per-sample loss parts. `overall == lambda * cls + (1 - lambda) * ic`.
struct LossBreakdown {
  Real cls = 0;
  Real ic = 0;
  Real overall = 0;
  Real lambda = 1;
};

/// -log(max(p[y], 1e-8)).
inline Real cross_entropy(std::span<const Real> p, Label y) {
  if (y < 0 || static_cast<std::size_t>(y) >= p.size())
    throw ParameterError("class index " + std::to_string(y) + " out of range");
  return -clamped_log(p[y]);
}

/// D_KL(soft || p) = sum_k soft_k log(soft_k / p_k), soft label first.
/// Terms with soft_k == 0 contribute nothing.
inline Real kl_divergence(std::span<const Real> soft, std::span<const Real> p) {
  if (soft.size() != p.size()) throw ParameterError("KL arguments differ in length");
  Real sum = 0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (soft[k] <= 0) continue;
    sum += soft[k] * (clamped_log(soft[k]) - clamped_log(p[k]));
  }
  return sum;
}

/// Inter-class correlation loss of a prediction against its class's soft label.
inline Real ic_loss(std::span<const Real> soft, std::span<const Real> p) {
  // Clamping can push tiny negative round-off below zero.
  const Real v = kl_divergence(soft, p);
  return v < 0 ? 0 : v;
}

inline void check_lambda(Real lambda) {
  if (!(lambda >= 0 && lambda <= 1)) throw ParameterError("lambda must lie in [0,1]");
}

inline LossBreakdown overall_loss(Real cls, Real ic, Real lambda) {
  check_lambda(lambda);
  if (!(cls >= 0) || !(ic >= 0)) throw ParameterError("loss parts must be nonnegative");
  return {cls, ic, lambda * cls + (1 - lambda) * ic, lambda};
}

/// Joint per-sample loss of the two-network co-regularized paradigm:
/// (1 - w) (CE_A + CE_B) + w (KL(pA||pB) + KL(pB||pA)).
inline Real joint_coreg_loss(std::span<const Real> pa, std::span<const Real> pb, Label y,
                             Real coreg_weight) {
  return (1 - coreg_weight) * (cross_entropy(pa, y) + cross_entropy(pb, y)) +
         coreg_weight * (kl_divergence(pa, pb) + kl_divergence(pb, pa));
}

// ---------------------------------------------------------------------------
// Derivatives with respect to probabilities. A clamped log contributes zero
// derivative wherever p < 1e-8. Results are accumulated (+=) into `g`.

/// d/dp of  weight * CE(p, y).
inline void add_cross_entropy_grad(std::span<const Real> p, Label y, Real weight,
                                   std::span<Real> g) {
  if (p[y] >= kProbFloor) g[y] -= weight / p[y];
}

/// d/dp of  weight * KL(soft || p); soft held constant.
inline void add_ic_grad(std::span<const Real> soft, std::span<const Real> p, Real weight,
                        std::span<Real> g) {
  for (std::size_t k = 0; k < p.size(); ++k)
    if (soft[k] > 0 && p[k] >= kProbFloor) g[k] -= weight * soft[k] / p[k];
}

/// d/da and d/db of  weight * KL(a || b).
inline void add_kl_grad(std::span<const Real> a, std::span<const Real> b, Real weight,
                        std::span<Real> ga, std::span<Real> gb) {
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (a[k] <= 0) continue;
    const Real ua = a[k] >= kProbFloor ? 1 : 0;
    ga[k] += weight * (clamped_log(a[k]) - clamped_log(b[k]) + ua);
    if (b[k] >= kProbFloor) gb[k] -= weight * a[k] / b[k];
  }
}

/// Chains d/dp through a softmax: d/dz_j = p_j (g_j - sum_k p_k g_k).
inline void softmax_backward(std::span<const Real> p, std::span<const Real> g,
                             std::span<Real> dz) {
  Real dot = 0;
  for (std::size_t k = 0; k < p.size(); ++k) dot += p[k] * g[k];
  for (std::size_t k = 0; k < p.size(); ++k) dz[k] = p[k] * (g[k] - dot);
}

}  // namespace nib
