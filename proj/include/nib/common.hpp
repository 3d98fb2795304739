#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace nib {

using Real = double;
using Label = int;

// Error taxonomy. Every failure surfaced by the library is one of these.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "error"; }
};
struct ParameterError : Error {
  using Error::Error;
  const char* kind() const noexcept override { return "parameter"; }
};
struct DataError : Error {
  using Error::Error;
  const char* kind() const noexcept override { return "data"; }
};
struct FormatError : Error {
  using Error::Error;
  const char* kind() const noexcept override { return "format"; }
};
struct IngestionError : Error {
  using Error::Error;
  const char* kind() const noexcept override { return "ingestion"; }
};
struct ContractError : Error {
  using Error::Error;
  const char* kind() const noexcept override { return "contract"; }
};
struct IoError : Error {
  using Error::Error;
  const char* kind() const noexcept override { return "io"; }
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw ParameterError(msg);
}

/// Lower bound applied to probabilities before taking a logarithm.
inline constexpr Real kProbFloor = 1e-8;

inline Real clamped_log(Real p) { return std::log(p < kProbFloor ? kProbFloor : p); }

/// True when `p` has nonnegative finite entries summing to 1 within `tol`.
inline bool is_probability_vector(std::span<const Real> p, Real tol = 1e-6) {
  if (p.empty()) return false;
  Real sum = 0;
  for (Real v : p) {
    if (!std::isfinite(v) || v < 0 || v > 1 + tol) return false;
    sum += v;
  }
  return std::abs(sum - 1) <= tol;
}

inline std::size_t argmax(std::span<const Real> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

}  // namespace nib
