#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <vector>

#include "stratbox/allocore.hpp"

namespace stratbox {

/// Split of the strata induced by a positive multiplier: strata whose
/// squared coefficient-to-bound ratio caps them at the upper bound, strata
/// pushed down to the lower bound, and the free remainder. Membership uses
/// the stated inequalities with exact floating-point comparisons.
struct LambdaPartition {
  double lambda = 0.0;
  StratumSet at_upper;  // lambda <= (coefficient / upper)^2
  StratumSet at_lower;  // lambda >= (coefficient / lower)^2
  StratumSet free;
};

inline LambdaPartition lambda_partition(const BoxProblem& p, double lambda) {
  if (!(lambda > 0.0))
    throw NonPositiveLambda("multiplier must be strictly positive");
  const std::size_t n = p.size();
  LambdaPartition part;
  part.lambda = lambda;
  part.at_upper = StratumSet(n);
  part.at_lower = StratumSet(n);
  part.free = StratumSet(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double a2 = p.coefficient(i) * p.coefficient(i);
    const double cap_threshold = a2 / (p.upper_bound(i) * p.upper_bound(i));
    const double floor_threshold = a2 / (p.lower_bound(i) * p.lower_bound(i));
    if (lambda <= cap_threshold)
      part.at_upper.insert(i);
    else if (lambda >= floor_threshold)
      part.at_lower.insert(i);
    else
      part.free.insert(i);
  }
  return part;
}

/// Allocation as a function of the multiplier: upper bound, lower bound, or
/// coefficient / sqrt(lambda) per the partition above. Componentwise
/// non-increasing in lambda.
inline std::vector<double> lambda_allocation(const BoxProblem& p,
                                             double lambda) {
  const LambdaPartition part = lambda_partition(p, lambda);
  const double inv_root = 1.0 / std::sqrt(lambda);
  std::vector<double> x(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (part.at_upper.contains(i))
      x[i] = p.upper_bound(i);
    else if (part.at_lower.contains(i))
      x[i] = p.lower_bound(i);
    else
      x[i] = p.coefficient(i) * inv_root;
  }
  return x;
}

/// Excess of the multiplier-driven allocation over the sample total.
/// Continuous and non-increasing in lambda; the optimum is at its root.
inline double lambda_surplus(const BoxProblem& p, double lambda) {
  const LambdaPartition part = lambda_partition(p, lambda);
  const double inv_root = 1.0 / std::sqrt(lambda);
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (part.at_upper.contains(i))
      total += p.upper_bound(i);
    else if (part.at_lower.contains(i))
      total += p.lower_bound(i);
    else
      total += p.coefficient(i) * inv_root;
  }
  return total - p.sample_total();
}

enum class FpiaStatus { Converged, Blocked, Oscillating, MaxIterations };

/// What the fixed-point iteration did. An allocation is present only on
/// convergence. Blocked and Oscillating are expected outcomes on some
/// well-posed inputs, not errors.
struct FpiaOutcome {
  FpiaStatus status = FpiaStatus::MaxIterations;
  std::vector<double> lambda_history;
  std::optional<std::vector<double>> allocation;
};

struct FpiaOptions {
  /// Starting multiplier; defaults to the one induced by the all-free scale.
  std::optional<double> lambda0;
  int max_iterations = 200;
  double tolerance = 1e-10;
};

/// Fixed-point iteration on the multiplier: each step replaces lambda by the
/// inverse square of the scale of the strata its partition leaves free.
///
/// Faithfully reproduces the published method including its failure modes:
/// the step is undefined when the scale is exactly zero or when the
/// partition pins every stratum (Blocked), and the iterates can enter a
/// cycle (Oscillating, detected by a recurring multiplier at distance two or
/// more). No remedy is applied.
inline FpiaOutcome fpia_solve(const BoxProblem& p, const FpiaOptions& options = {}) {
  constexpr double kCycleTol = 1e-12;  // relative match that declares a cycle

  double lambda;
  if (options.lambda0) {
    lambda = *options.lambda0;
    if (!(lambda > 0.0))
      throw NonPositiveLambda("starting multiplier must be strictly positive");
  } else {
    const double scale =
        neyman_scale(p, Partition(StratumSet(p.size()), StratumSet(p.size())));
    lambda = 1.0 / (scale * scale);
  }

  FpiaOutcome out;
  out.lambda_history.push_back(lambda);
  for (int k = 0; k < options.max_iterations; ++k) {
    const LambdaPartition part = lambda_partition(p, lambda);
    if (part.free.empty()) {
      out.status = FpiaStatus::Blocked;
      return out;
    }
    const double scale =
        neyman_scale(p, Partition(part.at_lower, part.at_upper));
    if (scale == 0.0) {
      out.status = FpiaStatus::Blocked;
      return out;
    }
    const double next = 1.0 / (scale * scale);
    if (std::abs(next - lambda) <= options.tolerance * std::abs(lambda)) {
      out.lambda_history.push_back(next);
      out.status = FpiaStatus::Converged;
      out.allocation = lambda_allocation(p, next);
      return out;
    }
    // Any earlier multiplier recurring at distance >= 2 means a cycle; the
    // immediate predecessor is already covered by the convergence test.
    for (std::size_t j = 0; j + 1 < out.lambda_history.size(); ++j) {
      if (std::abs(next - out.lambda_history[j]) <=
          kCycleTol * std::abs(next)) {
        out.lambda_history.push_back(next);
        out.status = FpiaStatus::Oscillating;
        return out;
      }
    }
    out.lambda_history.push_back(next);
    lambda = next;
  }
  out.status = FpiaStatus::MaxIterations;
  return out;
}

/// Bisection on the surplus function; the module's reference solver.
///
/// The bracket endpoints sit just outside the extreme membership thresholds,
/// where the allocation saturates at the upper respectively lower bounds, so
/// the surplus changes sign across the bracket for every feasible problem.
/// The returned allocation satisfies |surplus| <= tol; the search itself
/// runs to floating-point interval exhaustion, which is far tighter.
inline std::vector<double> bisection_solve(const BoxProblem& p,
                                           double tol = 1e-9,
                                           int* iterations_out = nullptr) {
  double cap_min = std::numeric_limits<double>::infinity();
  double floor_max = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double a2 = p.coefficient(i) * p.coefficient(i);
    cap_min = std::min(cap_min, a2 / (p.upper_bound(i) * p.upper_bound(i)));
    floor_max = std::max(floor_max, a2 / (p.lower_bound(i) * p.lower_bound(i)));
  }
  constexpr double kPad = 1e-6;
  double lo = (1.0 - kPad) * cap_min;
  double hi = (1.0 + kPad) * floor_max;

  if (iterations_out) *iterations_out = 0;
  double surplus_lo = lambda_surplus(p, lo);
  double surplus_hi = lambda_surplus(p, hi);
  if (surplus_lo == 0.0) return lambda_allocation(p, lo);
  if (surplus_hi == 0.0) return lambda_allocation(p, hi);
  if ((surplus_lo > 0.0) == (surplus_hi > 0.0))
    throw BracketFailure("surplus does not change sign across the bracket");

  const double abs_tol = tol * std::max(1.0, std::abs(p.sample_total()));
  double lambda = 0.5 * (lo + hi);
  for (int iter = 0; iter < 300; ++iter) {
    lambda = 0.5 * (lo + hi);
    if (lambda <= lo || lambda >= hi) break;  // interval exhausted
    if (iterations_out) ++*iterations_out;
    const double surplus = lambda_surplus(p, lambda);
    if (surplus == 0.0) break;
    if (surplus > 0.0)
      lo = lambda;
    else
      hi = lambda;
  }
  if (std::abs(lambda_surplus(p, lambda)) > abs_tol)
    throw BracketFailure("bisection did not reach the requested tolerance");
  return lambda_allocation(p, lambda);
}

}  // namespace stratbox
