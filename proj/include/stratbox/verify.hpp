#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "stratbox/allocore.hpp"
#include "stratbox/recursive.hpp"

namespace stratbox {

/// One failed optimality condition: which stratum (or round, for trace
/// audits), which condition, and the two compared quantities.
struct Violation {
  std::string label;
  std::string condition;
  double lhs = 0.0;
  double rhs = 0.0;
};

enum class OptimalityCase { RegularCaseI, VertexCaseII };

/// Multipliers reconstructed from a certified allocation: one for the sum
/// constraint, one pair per stratum for the bound constraints.
struct KktMultipliers {
  double lambda = 0.0;
  std::vector<double> lower;
  std::vector<double> upper;
};

struct OptimalityReport {
  bool is_optimal = false;
  OptimalityCase which_case = OptimalityCase::RegularCaseI;
  std::vector<Violation> violations;
  std::optional<KktMultipliers> multipliers;
};

namespace detail {

inline double rel_slack(double tol, double a, double b) {
  return tol * std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace detail

/// Verifies the two-sided optimality conditions for an allocation.
///
/// With a free stratum left, the pinned sets must equal the level sets of
/// the common scale against the bound-to-coefficient ratios, and the free
/// values must equal coefficient times scale. With everything pinned, the
/// cap ratios of the take-max strata must not exceed the floor ratios of the
/// take-min strata, and the pinned values must add up to the sample total.
///
/// All scalar comparisons carry a relative tolerance `tol`; ties within the
/// tolerance are accepted for either membership. The solvers themselves are
/// tolerance-free; tolerances live here.
///
/// Throws MalformedAllocation when the partition and the values disagree
/// (pinned strata must sit exactly on their bound).
inline OptimalityReport check_box_optimality(const BoxProblem& p,
                                             const Allocation& alloc,
                                             double tol = 1e-9) {
  const std::size_t n = p.size();
  if (alloc.values.size() != n || alloc.partition.universe() != n)
    throw MalformedAllocation("allocation does not match the problem shape");
  const StratumSet& mins = alloc.partition.take_min();
  const StratumSet& maxs = alloc.partition.take_max();
  for (std::size_t i = 0; i < n; ++i) {
    if (mins.contains(i) && alloc.values[i] != p.lower_bound(i))
      throw MalformedAllocation("take-min stratum " + p.label(i) +
                                " is not at its lower bound");
    if (maxs.contains(i) && alloc.values[i] != p.upper_bound(i))
      throw MalformedAllocation("take-max stratum " + p.label(i) +
                                " is not at its upper bound");
  }

  OptimalityReport report;

  if (alloc.partition.covers_all()) {
    report.which_case = OptimalityCase::VertexCaseII;
    double floor_ratio_min = std::numeric_limits<double>::infinity();
    double cap_ratio_max = 0.0;
    double pinned_total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (mins.contains(i)) {
        floor_ratio_min =
            std::min(floor_ratio_min, p.lower_bound(i) / p.coefficient(i));
        pinned_total += p.lower_bound(i);
      } else {
        cap_ratio_max =
            std::max(cap_ratio_max, p.upper_bound(i) / p.coefficient(i));
        pinned_total += p.upper_bound(i);
      }
    }
    if (!mins.empty() && !maxs.empty() &&
        cap_ratio_max >
            floor_ratio_min +
                detail::rel_slack(tol, cap_ratio_max, floor_ratio_min))
      report.violations.push_back(
          {"", "vertex-separation", cap_ratio_max, floor_ratio_min});
    if (std::abs(pinned_total - p.sample_total()) >
        detail::rel_slack(tol, pinned_total, p.sample_total()))
      report.violations.push_back(
          {"", "vertex-total", pinned_total, p.sample_total()});

    // Any scale in the admissible interval certifies the vertex; take the
    // midpoint, falling back to the finite endpoint when one side is open.
    // Multipliers exist only when the conditions hold.
    double lo = maxs.empty() ? floor_ratio_min : cap_ratio_max;
    double hi = mins.empty() ? cap_ratio_max : floor_ratio_min;
    const double mid = 0.5 * (lo + hi);
    if (report.violations.empty() && mid > 0.0) {
      KktMultipliers mult;
      mult.lambda = 1.0 / (mid * mid);
      mult.lower.assign(n, 0.0);
      mult.upper.assign(n, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        const double a2 = p.coefficient(i) * p.coefficient(i);
        if (mins.contains(i))
          mult.lower[i] =
              mult.lambda - a2 / (p.lower_bound(i) * p.lower_bound(i));
        else
          mult.upper[i] =
              a2 / (p.upper_bound(i) * p.upper_bound(i)) - mult.lambda;
      }
      report.multipliers = std::move(mult);
    }
    report.is_optimal = report.violations.empty();
    return report;
  }

  report.which_case = OptimalityCase::RegularCaseI;
  const double scale = neyman_scale(p, alloc.partition);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    total += alloc.values[i];
    const double floor_ratio = p.lower_bound(i) / p.coefficient(i);
    const double cap_ratio = p.upper_bound(i) / p.coefficient(i);
    if (mins.contains(i)) {
      if (scale > floor_ratio + detail::rel_slack(tol, scale, floor_ratio))
        report.violations.push_back(
            {p.label(i), "take-min-membership", scale, floor_ratio});
    } else if (maxs.contains(i)) {
      if (scale < cap_ratio - detail::rel_slack(tol, scale, cap_ratio))
        report.violations.push_back(
            {p.label(i), "take-max-membership", scale, cap_ratio});
    } else {
      if (scale <= floor_ratio - detail::rel_slack(tol, scale, floor_ratio))
        report.violations.push_back(
            {p.label(i), "free-above-floor", scale, floor_ratio});
      if (scale >= cap_ratio + detail::rel_slack(tol, scale, cap_ratio))
        report.violations.push_back(
            {p.label(i), "free-below-cap", scale, cap_ratio});
      const double expected = p.coefficient(i) * scale;
      if (std::abs(alloc.values[i] - expected) >
          detail::rel_slack(tol, alloc.values[i], expected))
        report.violations.push_back(
            {p.label(i), "free-value", alloc.values[i], expected});
    }
  }
  if (std::abs(total - p.sample_total()) >
      detail::rel_slack(tol, total, p.sample_total()))
    report.violations.push_back(
        {"", "sample-total", total, p.sample_total()});

  if (report.violations.empty() && scale > 0.0) {
    KktMultipliers mult;
    mult.lambda = 1.0 / (scale * scale);
    mult.lower.assign(n, 0.0);
    mult.upper.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double a2 = p.coefficient(i) * p.coefficient(i);
      if (mins.contains(i))
        mult.lower[i] =
            mult.lambda - a2 / (p.lower_bound(i) * p.lower_bound(i));
      else if (maxs.contains(i))
        mult.upper[i] =
            a2 / (p.upper_bound(i) * p.upper_bound(i)) - mult.lambda;
    }
    report.multipliers = std::move(mult);
  }
  report.is_optimal = report.violations.empty();
  return report;
}

/// Optimality conditions for the upper-bounds-only problem.
inline OptimalityReport check_upper_optimality(const UpperProblem& p,
                                               const RnaResult& result,
                                               double tol = 1e-9) {
  const std::size_t n = p.size();
  if (result.values.size() != n || result.take_max.universe() != n)
    throw MalformedAllocation("result does not match the problem shape");
  for (std::size_t i = 0; i < n; ++i)
    if (result.take_max.contains(i) && result.values[i] != p.upper_bound(i))
      throw MalformedAllocation("take-max stratum " + p.label(i) +
                                " is not at its upper bound");

  OptimalityReport report;
  if (result.take_max.size() == n) {
    report.which_case = OptimalityCase::VertexCaseII;
    double cap_sum = 0.0;
    double cap_ratio_max = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      cap_sum += p.upper_bound(i);
      cap_ratio_max =
          std::max(cap_ratio_max, p.upper_bound(i) / p.coefficient(i));
    }
    if (std::abs(cap_sum - p.sample_total()) >
        detail::rel_slack(tol, cap_sum, p.sample_total()))
      report.violations.push_back(
          {"", "vertex-total", cap_sum, p.sample_total()});
    if (report.violations.empty()) {
      KktMultipliers mult;
      mult.lambda = 1.0 / (cap_ratio_max * cap_ratio_max);
      mult.lower.assign(n, 0.0);
      mult.upper.assign(n, 0.0);
      for (std::size_t i = 0; i < n; ++i)
        mult.upper[i] = p.coefficient(i) * p.coefficient(i) /
                            (p.upper_bound(i) * p.upper_bound(i)) -
                        mult.lambda;
      report.multipliers = std::move(mult);
    }
    report.is_optimal = report.violations.empty();
    return report;
  }

  report.which_case = OptimalityCase::RegularCaseI;
  double remaining = p.sample_total();
  double mass = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (result.take_max.contains(i))
      remaining -= p.upper_bound(i);
    else
      mass += p.coefficient(i);
  }
  const double scale = remaining / mass;
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    total += result.values[i];
    const double cap_ratio = p.upper_bound(i) / p.coefficient(i);
    if (result.take_max.contains(i)) {
      if (scale < cap_ratio - detail::rel_slack(tol, scale, cap_ratio))
        report.violations.push_back(
            {p.label(i), "take-max-membership", scale, cap_ratio});
    } else {
      if (scale >= cap_ratio + detail::rel_slack(tol, scale, cap_ratio))
        report.violations.push_back(
            {p.label(i), "free-below-cap", scale, cap_ratio});
      const double expected = p.coefficient(i) * scale;
      if (std::abs(result.values[i] - expected) >
          detail::rel_slack(tol, result.values[i], expected))
        report.violations.push_back(
            {p.label(i), "free-value", result.values[i], expected});
    }
  }
  if (std::abs(total - p.sample_total()) >
      detail::rel_slack(tol, total, p.sample_total()))
    report.violations.push_back({"", "sample-total", total, p.sample_total()});

  if (report.violations.empty() && scale > 0.0) {
    KktMultipliers mult;
    mult.lambda = 1.0 / (scale * scale);
    mult.lower.assign(n, 0.0);
    mult.upper.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      if (result.take_max.contains(i))
        mult.upper[i] = p.coefficient(i) * p.coefficient(i) /
                            (p.upper_bound(i) * p.upper_bound(i)) -
                        mult.lambda;
    report.multipliers = std::move(mult);
  }
  report.is_optimal = report.violations.empty();
  return report;
}

/// Optimality conditions for the lower-bounds-only problem.
inline OptimalityReport check_lower_optimality(const LowerProblem& p,
                                               const LrnaResult& result,
                                               double tol = 1e-9) {
  const std::size_t n = p.size();
  if (result.values.size() != n || result.take_min.universe() != n)
    throw MalformedAllocation("result does not match the problem shape");
  for (std::size_t i = 0; i < n; ++i)
    if (result.take_min.contains(i) && result.values[i] != p.lower_bound(i))
      throw MalformedAllocation("take-min stratum " + p.label(i) +
                                " is not at its lower bound");

  OptimalityReport report;
  if (result.take_min.size() == n) {
    report.which_case = OptimalityCase::VertexCaseII;
    double floor_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) floor_sum += p.lower_bound(i);
    if (std::abs(floor_sum - p.sample_total()) >
        detail::rel_slack(tol, floor_sum, p.sample_total()))
      report.violations.push_back(
          {"", "vertex-total", floor_sum, p.sample_total()});
    report.is_optimal = report.violations.empty();
    return report;
  }

  report.which_case = OptimalityCase::RegularCaseI;
  double remaining = p.sample_total();
  double mass = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (result.take_min.contains(i))
      remaining -= p.lower_bound(i);
    else
      mass += p.coefficient(i);
  }
  const double scale = remaining / mass;
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    total += result.values[i];
    const double floor_ratio = p.lower_bound(i) / p.coefficient(i);
    if (result.take_min.contains(i)) {
      if (scale > floor_ratio + detail::rel_slack(tol, scale, floor_ratio))
        report.violations.push_back(
            {p.label(i), "take-min-membership", scale, floor_ratio});
    } else {
      if (scale <= floor_ratio - detail::rel_slack(tol, scale, floor_ratio))
        report.violations.push_back(
            {p.label(i), "free-above-floor", scale, floor_ratio});
      const double expected = p.coefficient(i) * scale;
      if (std::abs(result.values[i] - expected) >
          detail::rel_slack(tol, result.values[i], expected))
        report.violations.push_back(
            {p.label(i), "free-value", result.values[i], expected});
    }
  }
  if (std::abs(total - p.sample_total()) >
      detail::rel_slack(tol, total, p.sample_total()))
    report.violations.push_back({"", "sample-total", total, p.sample_total()});
  report.is_optimal = report.violations.empty();
  return report;
}

/// Brute-force reference: tries every assignment of strata to take-min,
/// take-max, or free; keeps the feasible candidates and returns the one with
/// the smallest objective, breaking exact ties toward the lexicographically
/// smallest assignment in label order (free before take-min before
/// take-max). Deterministic. Limited to 12 strata.
inline Allocation oracle_enumerate(const BoxProblem& p) {
  const std::size_t n = p.size();
  if (n > 12) throw TooManyStrata("enumeration handles at most 12 strata");

  constexpr double kTol = 1e-9;
  const double total_slack = kTol * std::max(1.0, std::abs(p.sample_total()));

  std::vector<int> assignment(n, 0);  // 0 free, 1 take-min, 2 take-max
  std::vector<int> best_assignment;
  double best_objective = std::numeric_limits<double>::infinity();
  double best_scale = 0.0;
  bool found = false;

  for (;;) {
    double pinned_total = 0.0;
    double mass = 0.0;
    std::size_t free_count = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (assignment[i] == 1)
        pinned_total += p.lower_bound(i);
      else if (assignment[i] == 2)
        pinned_total += p.upper_bound(i);
      else {
        mass += p.coefficient(i);
        ++free_count;
      }
    }

    bool feasible = true;
    double scale = 0.0;
    if (free_count == 0) {
      feasible = std::abs(pinned_total - p.sample_total()) <= total_slack;
    } else {
      scale = (p.sample_total() - pinned_total) / mass;
      for (std::size_t i = 0; i < n && feasible; ++i) {
        if (assignment[i] != 0) continue;
        const double v = p.coefficient(i) * scale;
        const double slack = kTol * std::max(1.0, p.upper_bound(i));
        if (v < p.lower_bound(i) - slack || v > p.upper_bound(i) + slack)
          feasible = false;
      }
    }

    if (feasible) {
      double obj = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        double v;
        if (assignment[i] == 1)
          v = p.lower_bound(i);
        else if (assignment[i] == 2)
          v = p.upper_bound(i);
        else
          v = p.coefficient(i) * scale;
        obj += p.coefficient(i) * p.coefficient(i) / v;
      }
      if (obj < best_objective) {
        best_objective = obj;
        best_assignment = assignment;
        best_scale = scale;
        found = true;
      }
    }

    // Odometer over assignments, last stratum fastest: candidates arrive in
    // lexicographic label order, so strict improvement keeps the smallest.
    bool advanced = false;
    for (std::size_t pos = n; pos-- > 0;) {
      if (++assignment[pos] <= 2) {
        advanced = true;
        break;
      }
      assignment[pos] = 0;
    }
    if (!advanced) break;
  }

  if (!found) throw Error("enumeration found no feasible candidate");

  StratumSet mins(n), maxs(n);
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (best_assignment[i] == 1) {
      mins.insert(i);
      x[i] = p.lower_bound(i);
    } else if (best_assignment[i] == 2) {
      maxs.insert(i);
      x[i] = p.upper_bound(i);
    } else {
      x[i] = p.coefficient(i) * best_scale;
    }
  }
  Partition part(mins, maxs);
  const AllocationKind kind =
      part.covers_all() ? AllocationKind::Vertex : AllocationKind::Regular;
  return Allocation{std::move(x), std::move(part), kind, best_objective};
}

/// Audits a recorded solve trace against the properties every valid run
/// satisfies: rounds numbered consecutively from one, strictly growing
/// take-min sets, non-increasing take-max sets, non-increasing scales where
/// recorded, a scale recorded exactly when something is free, and at most
/// one round per stratum plus one.
inline std::vector<Violation> audit_trace(const SolveTrace& trace,
                                          double tol = 1e-9) {
  std::vector<Violation> violations;
  const std::size_t rounds = trace.iterations.size();
  if (rounds > trace.stratum_count + 1)
    violations.push_back({"", "round-count", static_cast<double>(rounds),
                          static_cast<double>(trace.stratum_count + 1)});
  for (std::size_t k = 0; k < rounds; ++k) {
    const TraceIteration& it = trace.iterations[k];
    const std::string where = std::to_string(k + 1);
    if (it.round != static_cast<int>(k) + 1)
      violations.push_back({where, "round-index",
                            static_cast<double>(it.round),
                            static_cast<double>(k + 1)});
    const std::size_t covered = it.take_min.size() + it.take_max.size();
    const bool full = covered == trace.stratum_count;
    if (it.scale.has_value() == full)
      violations.push_back({where, "scale-presence",
                            it.scale.has_value() ? 1.0 : 0.0, full ? 0.0 : 1.0});
    if (k == 0) continue;
    const TraceIteration& prev = trace.iterations[k - 1];
    if (!(it.take_min.contains_all(prev.take_min) &&
          it.take_min.size() > prev.take_min.size()))
      violations.push_back({where, "take-min-growth",
                            static_cast<double>(prev.take_min.size()),
                            static_cast<double>(it.take_min.size())});
    if (!prev.take_max.contains_all(it.take_max))
      violations.push_back({where, "take-max-shrink",
                            static_cast<double>(prev.take_max.size()),
                            static_cast<double>(it.take_max.size())});
    if (prev.scale && it.scale &&
        *it.scale > *prev.scale + detail::rel_slack(tol, *prev.scale, *it.scale))
      violations.push_back({where, "scale-monotone", *prev.scale, *it.scale});
  }
  return violations;
}

}  // namespace stratbox
