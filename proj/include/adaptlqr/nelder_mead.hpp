#pragma once

#include <cstddef>
#include <functional>
#include <span>

#include "adaptlqr/matlin.hpp"

namespace adaptlqr {

struct NelderMeadOptions {
  std::size_t max_iter = 400;
  /// Stop when f_worst − f_best <= ftol · max(1, |f_best|).
  double ftol = 1e-9;
  /// Initial simplex edge as a fraction of each box width.
  double initial_step = 0.05;
};

struct NelderMeadResult {
  Vec x;
  double f = 0.0;
  std::size_t iterations = 0;
  std::size_t evaluations = 0;
};

using Objective = std::function<double(std::span<const double>)>;

/// Nelder–Mead restricted to the box [lo, hi] by clamping every trial point.
/// Non-finite objective values are treated as +inf. The returned point is
/// never worse than the (clamped) start.
NelderMeadResult nelder_mead_box(const Objective& f, Vec x0, std::span<const double> lo,
                                 std::span<const double> hi, const NelderMeadOptions& opts = {});

}  // namespace adaptlqr
