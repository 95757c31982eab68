#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "stratbox/allocore.hpp"

namespace stratbox {

namespace detail {

/// Shared engine of the one-sided upper-bound recursion, operating on the
/// `active` subset of the strata with the given remaining sample.
///
/// Every round computes the common scale of the still-free strata and moves
/// into the take-max set all free strata whose scaled coefficient reaches
/// the cap. Comparisons are exact floating point: ties activate the bound.
/// A saturated subproblem (remaining equals the cap sum) pins everything
/// outright.
///
/// `domain`, when given, restricts which strata are ever considered for the
/// take-max set; the caller must know that the true take-max set lies inside
/// it, otherwise the outcome is unspecified.
struct OneSidedState {
  StratumSet pinned;
  double scale = std::numeric_limits<double>::quiet_NaN();
  int iterations = 0;
};

inline OneSidedState upper_recursion(std::span<const double> coefficients,
                                     std::span<const double> upper_bounds,
                                     const StratumSet& active,
                                     double remaining,
                                     const StratumSet* domain = nullptr) {
  const std::size_t n = coefficients.size();
  OneSidedState st;
  st.pinned = StratumSet(n);
  if (active.empty()) return st;

  double cap_sum = 0.0;
  double mass = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!active.contains(i)) continue;
    cap_sum += upper_bounds[i];
    mass += coefficients[i];
  }
  if (remaining == cap_sum) {
    st.pinned = active;
    st.iterations = 1;
    return st;
  }

  for (;;) {
    ++st.iterations;
    const double scale = remaining / mass;
    bool grew = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (!active.contains(i) || st.pinned.contains(i)) continue;
      if (domain && !domain->contains(i)) continue;
      if (coefficients[i] * scale >= upper_bounds[i]) {
        st.pinned.insert(i);
        remaining -= upper_bounds[i];
        mass -= coefficients[i];
        grew = true;
      }
    }
    if (!grew) {
      st.scale = scale;
      return st;
    }
    if (st.pinned.size() == active.size()) return st;  // scale left undefined
  }
}

/// Mirror image of `upper_recursion` for lower bounds: free strata whose
/// scaled coefficient falls to the floor get pinned there.
inline OneSidedState lower_recursion(std::span<const double> coefficients,
                                     std::span<const double> lower_bounds,
                                     const StratumSet& active,
                                     double remaining) {
  const std::size_t n = coefficients.size();
  OneSidedState st;
  st.pinned = StratumSet(n);
  if (active.empty()) return st;

  double floor_sum = 0.0;
  double mass = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!active.contains(i)) continue;
    floor_sum += lower_bounds[i];
    mass += coefficients[i];
  }
  if (remaining == floor_sum) {
    st.pinned = active;
    st.iterations = 1;
    return st;
  }

  for (;;) {
    ++st.iterations;
    const double scale = remaining / mass;
    bool grew = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (!active.contains(i) || st.pinned.contains(i)) continue;
      if (coefficients[i] * scale <= lower_bounds[i]) {
        st.pinned.insert(i);
        remaining -= lower_bounds[i];
        mass -= coefficients[i];
        grew = true;
      }
    }
    if (!grew) {
      st.scale = scale;
      return st;
    }
    if (st.pinned.size() == active.size()) return st;
  }
}

}  // namespace detail

/// Result of the one-sided upper-bound solve.
struct RnaResult {
  std::vector<double> values;
  StratumSet take_max;
  int iterations = 0;
};

/// Recursive Neyman allocation under upper bounds only. Returns the unique
/// optimum: capped strata sit exactly at their bound (assigned, never
/// computed), the rest share the final scale. When the sample total equals
/// the bound sum, the whole vector is the bound vector.
inline RnaResult rna(const UpperProblem& p) {
  const StratumSet all = StratumSet::full(p.size());
  detail::OneSidedState st = detail::upper_recursion(
      p.coefficients(), p.upper_bounds(), all, p.sample_total());
  RnaResult out;
  out.take_max = st.pinned;
  out.iterations = st.iterations;
  out.values.resize(p.size());
  for (std::size_t i = 0; i < p.size(); ++i)
    out.values[i] = st.pinned.contains(i) ? p.upper_bound(i)
                                          : p.coefficient(i) * st.scale;
  return out;
}

/// Same as `rna` but scans only `domain` for take-max candidates. Valid only
/// when the caller can guarantee the true take-max set is contained in
/// `domain`; otherwise the output is unspecified.
inline RnaResult rna_with_domain(const UpperProblem& p,
                                 const StratumSet& domain) {
  const StratumSet all = StratumSet::full(p.size());
  detail::OneSidedState st = detail::upper_recursion(
      p.coefficients(), p.upper_bounds(), all, p.sample_total(), &domain);
  RnaResult out;
  out.take_max = st.pinned;
  out.iterations = st.iterations;
  out.values.resize(p.size());
  for (std::size_t i = 0; i < p.size(); ++i)
    out.values[i] = st.pinned.contains(i) ? p.upper_bound(i)
                                          : p.coefficient(i) * st.scale;
  return out;
}

/// Result of the one-sided lower-bound solve.
struct LrnaResult {
  std::vector<double> values;
  StratumSet take_min;
  int iterations = 0;
};

/// Recursive Neyman allocation under lower bounds only.
inline LrnaResult lrna(const LowerProblem& p) {
  const StratumSet all = StratumSet::full(p.size());
  detail::OneSidedState st = detail::lower_recursion(
      p.coefficients(), p.lower_bounds(), all, p.sample_total());
  LrnaResult out;
  out.take_min = st.pinned;
  out.iterations = st.iterations;
  out.values.resize(p.size());
  for (std::size_t i = 0; i < p.size(); ++i)
    out.values[i] = st.pinned.contains(i) ? p.lower_bound(i)
                                          : p.coefficient(i) * st.scale;
  return out;
}

struct RnaboxOptions {
  bool want_trace = false;
  /// Restrict each inner take-max scan to the previous round's take-max set.
  /// Off by default: the default is the plain recursion.
  bool reuse_take_max_domain = false;
};

struct RnaboxResult {
  Allocation allocation;
  std::optional<SolveTrace> trace;
};

/// Box-constrained recursive Neyman allocation.
///
/// Each outer round solves the upper-bounded relaxation on the strata not
/// yet pinned at their lower bound, reads the take-max set off the solution
/// by exact equality with the bound, then pins every remaining stratum whose
/// value fell to or below its floor and retries with the reduced sample.
/// Stops when no stratum falls through; at most one round per stratum plus
/// one.
///
/// The optional trace records, per round, the pinned sets as they stand
/// right after the fall-through scan, the free-strata scale (absent when the
/// round pinned everything), and the inner solve's scan count.
inline RnaboxResult rnabox(const BoxProblem& p, const RnaboxOptions& options = {}) {
  const std::size_t n = p.size();
  std::span<const double> A = p.coefficients();
  std::span<const double> lo = p.lower_bounds();
  std::span<const double> hi = p.upper_bounds();

  StratumSet pinned_min(n);
  StratumSet active = StratumSet::full(n);
  double remaining = p.sample_total();
  std::vector<double> x(n, 0.0);

  RnaboxResult out;
  if (options.want_trace) out.trace = SolveTrace{n, {}};

  // A total exactly at the floor sum is the trivial vertex; answering it
  // directly keeps the floor strata exact instead of within rounding drift.
  if (remaining == detail::sum(lo)) {
    std::vector<double> floors(lo.begin(), lo.end());
    const double obj = objective_value(A, floors);
    Partition part(StratumSet::full(n), StratumSet(n));
    if (out.trace) {
      TraceIteration it;
      it.round = 1;
      it.take_min = part.take_min();
      it.take_max = part.take_max();
      it.rna_iterations = 0;
      out.trace->iterations.push_back(std::move(it));
    }
    out.allocation =
        Allocation{std::move(floors), std::move(part), AllocationKind::Vertex, obj};
    return out;
  }

  StratumSet previous_take_max;
  for (int round = 1;; ++round) {
    assert(round <= static_cast<int>(n) + 1);
    const StratumSet* domain =
        (options.reuse_take_max_domain && round > 1) ? &previous_take_max
                                                     : nullptr;
    detail::OneSidedState inner =
        detail::upper_recursion(A, hi, active, remaining, domain);

    for (std::size_t i = 0; i < n; ++i) {
      if (!active.contains(i)) continue;
      x[i] = inner.pinned.contains(i) ? hi[i] : A[i] * inner.scale;
    }
    // Take-max membership is read off the values by exact equality; the
    // values at the bound were assigned, so the test cannot misfire.
    StratumSet take_max(n);
    for (std::size_t i = 0; i < n; ++i)
      if (active.contains(i) && x[i] == hi[i]) take_max.insert(i);

    StratumSet fell_through(n);
    for (std::size_t i = 0; i < n; ++i)
      if (active.contains(i) && !take_max.contains(i) && x[i] <= lo[i])
        fell_through.insert(i);

    if (out.trace) {
      TraceIteration it;
      it.round = round;
      it.take_min = pinned_min;
      it.take_max = take_max;
      if (take_max.size() != active.size()) it.scale = inner.scale;
      it.rna_iterations = inner.iterations;
      out.trace->iterations.push_back(std::move(it));
    }

    if (fell_through.empty()) {
      for (std::size_t i = 0; i < n; ++i)
        if (pinned_min.contains(i)) x[i] = lo[i];
      Partition part(pinned_min, take_max);
      const AllocationKind kind = part.covers_all() ? AllocationKind::Vertex
                                                    : AllocationKind::Regular;
      const double obj = objective_value(A, x);
      out.allocation = Allocation{std::move(x), std::move(part), kind, obj};
      return out;
    }

    for (std::size_t i = 0; i < n; ++i) {
      if (!fell_through.contains(i)) continue;
      remaining -= lo[i];
      active.erase(i);
    }
    pinned_min.insert_all(fell_through);
    previous_take_max = std::move(take_max);
  }
}

/// Twin of `rnabox` with the roles of the two bounds interchanged: the inner
/// solve handles the lower bounds and the outer rounds pin strata that
/// overshoot their cap. By uniqueness of the optimum it returns the same
/// allocation as `rnabox`.
inline Allocation rnabox_twin(const BoxProblem& p) {
  const std::size_t n = p.size();
  std::span<const double> A = p.coefficients();
  std::span<const double> lo = p.lower_bounds();
  std::span<const double> hi = p.upper_bounds();

  StratumSet pinned_max(n);
  StratumSet active = StratumSet::full(n);
  double remaining = p.sample_total();
  std::vector<double> x(n, 0.0);

  // Trivial vertex at the cap sum, mirroring the floor case in `rnabox`.
  if (remaining == detail::sum(hi)) {
    std::vector<double> caps(hi.begin(), hi.end());
    const double obj = objective_value(A, caps);
    return Allocation{std::move(caps),
                      Partition(StratumSet(n), StratumSet::full(n)),
                      AllocationKind::Vertex, obj};
  }

  for (int round = 1;; ++round) {
    assert(round <= static_cast<int>(n) + 1);
    detail::OneSidedState inner =
        detail::lower_recursion(A, lo, active, remaining);

    for (std::size_t i = 0; i < n; ++i) {
      if (!active.contains(i)) continue;
      x[i] = inner.pinned.contains(i) ? lo[i] : A[i] * inner.scale;
    }
    StratumSet take_min(n);
    for (std::size_t i = 0; i < n; ++i)
      if (active.contains(i) && x[i] == lo[i]) take_min.insert(i);

    StratumSet overshot(n);
    for (std::size_t i = 0; i < n; ++i)
      if (active.contains(i) && !take_min.contains(i) && x[i] >= hi[i])
        overshot.insert(i);

    if (overshot.empty()) {
      for (std::size_t i = 0; i < n; ++i)
        if (pinned_max.contains(i)) x[i] = hi[i];
      Partition part(take_min, pinned_max);
      const AllocationKind kind = part.covers_all() ? AllocationKind::Vertex
                                                    : AllocationKind::Regular;
      const double obj = objective_value(A, x);
      return Allocation{std::move(x), std::move(part), kind, obj};
    }

    for (std::size_t i = 0; i < n; ++i) {
      if (!overshot.contains(i)) continue;
      remaining -= hi[i];
      active.erase(i);
    }
    pinned_max.insert_all(overshot);
  }
}

/// Output of the known-incorrect simultaneous recursion.
struct NaiveResult {
  std::vector<double> values;
  Partition partition;
  bool feasible = false;
  int iterations = 0;
};

/// Simultaneous-growth recursion: both pinned sets grow from the same scale
/// each round and nothing is ever unpinned. Kept in the public API for
/// testing and teaching; its output can be suboptimal, and when the pinned
/// sets swallow every stratum the returned vector may not even sum to the
/// sample total. The `feasible` flag reports whether the output satisfies
/// all constraints.
inline NaiveResult naive_rna_box(const BoxProblem& p) {
  const std::size_t n = p.size();
  std::span<const double> A = p.coefficients();
  std::span<const double> lo = p.lower_bounds();
  std::span<const double> hi = p.upper_bounds();

  StratumSet take_min(n);
  StratumSet take_max(n);
  double scale = 0.0;
  int iterations = 0;
  for (;;) {
    if (take_min.size() + take_max.size() == n) break;
    ++iterations;
    scale = neyman_scale(p, Partition(take_min, take_max));
    StratumSet grow_min(n);
    StratumSet grow_max(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (take_min.contains(i) || take_max.contains(i)) continue;
      const double v = A[i] * scale;
      if (v >= hi[i])
        grow_max.insert(i);
      else if (v <= lo[i])
        grow_min.insert(i);
    }
    if (grow_min.empty() && grow_max.empty()) break;
    take_min.insert_all(grow_min);
    take_max.insert_all(grow_max);
  }

  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (take_min.contains(i))
      x[i] = lo[i];
    else if (take_max.contains(i))
      x[i] = hi[i];
    else
      x[i] = A[i] * scale;
  }

  bool feasible = true;
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    total += x[i];
    if (x[i] < lo[i] || x[i] > hi[i]) feasible = false;
  }
  const double slack = 1e-9 * std::max(1.0, std::abs(p.sample_total()));
  if (std::abs(total - p.sample_total()) > slack) feasible = false;

  return NaiveResult{std::move(x), Partition(take_min, take_max), feasible,
                     iterations};
}

}  // namespace stratbox
