#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "stratbox/allocore.hpp"

namespace stratbox {

/// Rounds positive values to integers without disturbing their sum.
///
/// Largest-remainder rule: floor everything, then hand the leftover units to
/// the entries with the largest fractional parts, ties broken by position.
/// Every output stays within one of its input. The inputs must already sum
/// to `total` (within 1e-6), otherwise SumMismatch is thrown.
inline std::vector<std::int64_t> round_preserve_sum(std::span<const double> values,
                                                    std::int64_t total) {
  double sum = 0.0;
  for (double v : values) {
    if (!(v > 0.0))
      throw NonPositiveAllocation("values to round must be positive");
    sum += v;
  }
  if (std::abs(sum - static_cast<double>(total)) > 1e-6)
    throw SumMismatch("values do not sum to the requested total");

  const std::size_t n = values.size();
  std::vector<std::int64_t> out(n);
  std::vector<double> fractions(n);
  std::int64_t floor_sum = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double f = std::floor(values[i]);
    out[i] = static_cast<std::int64_t>(f);
    fractions[i] = values[i] - f;
    floor_sum += out[i];
  }
  std::int64_t leftover = total - floor_sum;
  if (leftover < 0 || leftover > static_cast<std::int64_t>(n))
    throw SumMismatch("residual after flooring is out of range");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return fractions[a] > fractions[b];
                   });
  for (std::int64_t k = 0; k < leftover; ++k) ++out[order[static_cast<std::size_t>(k)]];
  return out;
}

/// Ratio of the objective after rounding to the objective before. At least
/// one whenever the rounded vector stays inside the box; a rounded value
/// that escapes the box can pull it slightly below one.
inline double rounding_penalty(std::span<const double> coefficients,
                               std::span<const double> continuous,
                               std::span<const double> rounded) {
  return objective_value(coefficients, rounded) /
         objective_value(coefficients, continuous);
}

inline double rounding_penalty(std::span<const double> coefficients,
                               std::span<const double> continuous,
                               std::span<const std::int64_t> rounded) {
  std::vector<double> as_double(rounded.begin(), rounded.end());
  return rounding_penalty(coefficients, continuous, as_double);
}

/// Positions whose rounded value left the box. Rounding can graze a bound by
/// less than one unit; this reports it, nothing repairs it.
inline std::vector<std::size_t> bound_grazing(std::span<const double> lower_bounds,
                                              std::span<const double> upper_bounds,
                                              std::span<const std::int64_t> rounded) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < rounded.size(); ++i) {
    const double v = static_cast<double>(rounded[i]);
    if (v < lower_bounds[i] || v > upper_bounds[i]) out.push_back(i);
  }
  return out;
}

}  // namespace stratbox
