#pragma once

#include <cstdint>

namespace ab {

/// Numerical thresholds shared by every module.
///
/// `zero` is the relative threshold below which a polynomial coefficient
/// produced by cancellation is treated as exactly zero. `rank` is the
/// singular-value cut relative to the largest singular value. A root counts
/// as stable only when its modulus is below `1 - schur_margin`.
struct Tolerances {
  double zero = 1e-9;
  double rank = 1e-8;
  double schur_margin = 1e-9;
  // Restricted quadratic forms: eigenvalue threshold relative to the form's
  // largest absolute eigenvalue.
  double form = 1e-8;
  // Consistency of linear systems (offsets, constant trajectories).
  double residual = 1e-9;
  // Degree beyond which unimodular reductions give up.
  int degree_cap = 64;
};

inline constexpr std::uint64_t kDefaultSeed = 20240917ULL;

}  // namespace ab
