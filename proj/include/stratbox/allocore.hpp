#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "stratbox/errors.hpp"
#include "stratbox/population.hpp"
#include "stratbox/stratum_set.hpp"

namespace stratbox {

namespace detail {

/// Left-to-right sum. Feasibility comparisons on problem construction use
/// this exact accumulation order, so a caller that builds the total the same
/// way lands exactly on the boundary.
inline double sum(std::span<const double> values) {
  double total = 0.0;
  for (double v : values) total += v;
  return total;
}

inline void check_labels(const std::vector<std::string>& labels) {
  if (labels.empty())
    throw InfeasibleProblem("a problem needs at least one stratum");
  std::vector<std::string> sorted(labels);
  std::sort(sorted.begin(), sorted.end());
  auto dup = std::adjacent_find(sorted.begin(), sorted.end());
  if (dup != sorted.end())
    throw InfeasibleProblem("duplicate stratum label: " + *dup);
}

inline std::vector<std::string> numbered_labels(std::size_t count) {
  std::vector<std::string> labels;
  labels.reserve(count);
  for (std::size_t i = 0; i < count; ++i)
    labels.push_back(std::to_string(i + 1));
  return labels;
}

}  // namespace detail

/// Allocation problem with both lower and upper bounds per stratum:
/// minimize the sum of coefficient^2 / x over strata, subject to the values
/// summing to `sample_total` and staying inside [lower, upper] per stratum.
///
/// Feasibility is validated here, once; the solvers assume it.
class BoxProblem {
 public:
  BoxProblem(std::vector<std::string> labels, std::vector<double> coefficients,
             std::vector<double> lower_bounds, std::vector<double> upper_bounds,
             double sample_total)
      : labels_(std::move(labels)),
        coefficients_(std::move(coefficients)),
        lower_bounds_(std::move(lower_bounds)),
        upper_bounds_(std::move(upper_bounds)),
        sample_total_(sample_total) {
    detail::check_labels(labels_);
    const std::size_t n = labels_.size();
    if (coefficients_.size() != n || lower_bounds_.size() != n ||
        upper_bounds_.size() != n)
      throw InfeasibleProblem("per-stratum arrays must match the label list");
    for (std::size_t i = 0; i < n; ++i) {
      if (!(coefficients_[i] > 0.0))
        throw InfeasibleProblem("coefficient must be positive for stratum " +
                                labels_[i]);
      if (!(lower_bounds_[i] > 0.0 && lower_bounds_[i] < upper_bounds_[i]))
        throw InfeasibleProblem(
            "bounds must satisfy 0 < lower < upper for stratum " + labels_[i]);
    }
    if (!(detail::sum(lower_bounds_) <= sample_total_ &&
          sample_total_ <= detail::sum(upper_bounds_)))
      throw InfeasibleProblem(
          "sample total must lie between the bound sums");
    build_index();
  }

  /// Convenience constructor labelling strata "1", "2", ...
  BoxProblem(const std::vector<double>& coefficients,
             const std::vector<double>& lower_bounds,
             const std::vector<double>& upper_bounds, double sample_total)
      : BoxProblem(detail::numbered_labels(coefficients.size()), coefficients,
                   lower_bounds, upper_bounds, sample_total) {}

  std::size_t size() const { return labels_.size(); }
  const std::vector<std::string>& labels() const { return labels_; }
  const std::string& label(std::size_t i) const { return labels_[i]; }
  const std::vector<double>& coefficients() const { return coefficients_; }
  const std::vector<double>& lower_bounds() const { return lower_bounds_; }
  const std::vector<double>& upper_bounds() const { return upper_bounds_; }
  double coefficient(std::size_t i) const { return coefficients_[i]; }
  double lower_bound(std::size_t i) const { return lower_bounds_[i]; }
  double upper_bound(std::size_t i) const { return upper_bounds_[i]; }
  double sample_total() const { return sample_total_; }

  std::size_t index_of(const std::string& label) const {
    auto it = index_.find(label);
    if (it == index_.end()) throw Error("unknown stratum label: " + label);
    return it->second;
  }

  StratumSet set_of(const std::vector<std::string>& labels) const {
    StratumSet s(size());
    for (const std::string& l : labels) s.insert(index_of(l));
    return s;
  }

 private:
  void build_index() {
    for (std::size_t i = 0; i < labels_.size(); ++i) index_.emplace(labels_[i], i);
  }

  std::vector<std::string> labels_;
  std::vector<double> coefficients_;
  std::vector<double> lower_bounds_;
  std::vector<double> upper_bounds_;
  double sample_total_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Relaxation with upper bounds only.
class UpperProblem {
 public:
  UpperProblem(std::vector<std::string> labels, std::vector<double> coefficients,
               std::vector<double> upper_bounds, double sample_total)
      : labels_(std::move(labels)),
        coefficients_(std::move(coefficients)),
        upper_bounds_(std::move(upper_bounds)),
        sample_total_(sample_total) {
    detail::check_labels(labels_);
    const std::size_t n = labels_.size();
    if (coefficients_.size() != n || upper_bounds_.size() != n)
      throw InfeasibleProblem("per-stratum arrays must match the label list");
    for (std::size_t i = 0; i < n; ++i) {
      if (!(coefficients_[i] > 0.0))
        throw InfeasibleProblem("coefficient must be positive for stratum " +
                                labels_[i]);
      if (!(upper_bounds_[i] > 0.0))
        throw InfeasibleProblem("upper bound must be positive for stratum " +
                                labels_[i]);
    }
    if (!(sample_total_ > 0.0 && sample_total_ <= detail::sum(upper_bounds_)))
      throw InfeasibleProblem(
          "sample total must be positive and at most the upper-bound sum");
  }

  UpperProblem(const std::vector<double>& coefficients,
               const std::vector<double>& upper_bounds, double sample_total)
      : UpperProblem(detail::numbered_labels(coefficients.size()),
                     coefficients, upper_bounds, sample_total) {}

  /// Drops the lower bounds of a box problem.
  explicit UpperProblem(const BoxProblem& box)
      : labels_(box.labels()),
        coefficients_(box.coefficients()),
        upper_bounds_(box.upper_bounds()),
        sample_total_(box.sample_total()) {}

  std::size_t size() const { return labels_.size(); }
  const std::vector<std::string>& labels() const { return labels_; }
  const std::string& label(std::size_t i) const { return labels_[i]; }
  const std::vector<double>& coefficients() const { return coefficients_; }
  const std::vector<double>& upper_bounds() const { return upper_bounds_; }
  double coefficient(std::size_t i) const { return coefficients_[i]; }
  double upper_bound(std::size_t i) const { return upper_bounds_[i]; }
  double sample_total() const { return sample_total_; }

 private:
  std::vector<std::string> labels_;
  std::vector<double> coefficients_;
  std::vector<double> upper_bounds_;
  double sample_total_;
};

/// Relaxation with lower bounds only.
class LowerProblem {
 public:
  LowerProblem(std::vector<std::string> labels, std::vector<double> coefficients,
               std::vector<double> lower_bounds, double sample_total)
      : labels_(std::move(labels)),
        coefficients_(std::move(coefficients)),
        lower_bounds_(std::move(lower_bounds)),
        sample_total_(sample_total) {
    detail::check_labels(labels_);
    const std::size_t n = labels_.size();
    if (coefficients_.size() != n || lower_bounds_.size() != n)
      throw InfeasibleProblem("per-stratum arrays must match the label list");
    for (std::size_t i = 0; i < n; ++i) {
      if (!(coefficients_[i] > 0.0))
        throw InfeasibleProblem("coefficient must be positive for stratum " +
                                labels_[i]);
      if (!(lower_bounds_[i] > 0.0))
        throw InfeasibleProblem("lower bound must be positive for stratum " +
                                labels_[i]);
    }
    if (!(sample_total_ >= detail::sum(lower_bounds_)))
      throw InfeasibleProblem(
          "sample total must be at least the lower-bound sum");
  }

  LowerProblem(const std::vector<double>& coefficients,
               const std::vector<double>& lower_bounds, double sample_total)
      : LowerProblem(detail::numbered_labels(coefficients.size()),
                     coefficients, lower_bounds, sample_total) {}

  /// Drops the upper bounds of a box problem.
  explicit LowerProblem(const BoxProblem& box)
      : labels_(box.labels()),
        coefficients_(box.coefficients()),
        lower_bounds_(box.lower_bounds()),
        sample_total_(box.sample_total()) {}

  std::size_t size() const { return labels_.size(); }
  const std::vector<std::string>& labels() const { return labels_; }
  const std::string& label(std::size_t i) const { return labels_[i]; }
  const std::vector<double>& coefficients() const { return coefficients_; }
  const std::vector<double>& lower_bounds() const { return lower_bounds_; }
  double coefficient(std::size_t i) const { return coefficients_[i]; }
  double lower_bound(std::size_t i) const { return lower_bounds_[i]; }
  double sample_total() const { return sample_total_; }

 private:
  std::vector<std::string> labels_;
  std::vector<double> coefficients_;
  std::vector<double> lower_bounds_;
  double sample_total_;
};

/// A disjoint pair of stratum sets: strata pinned at their lower bound
/// (take-min) and strata pinned at their upper bound (take-max). The union
/// may be any subset of the strata, including all of them.
class Partition {
 public:
  Partition() = default;

  Partition(StratumSet take_min, StratumSet take_max)
      : take_min_(std::move(take_min)), take_max_(std::move(take_max)) {
    if (take_min_.universe() != take_max_.universe())
      throw Error("partition sets must share one universe");
    if (take_min_.intersects(take_max_))
      throw OverlappingSets("take-min and take-max sets intersect");
  }

  const StratumSet& take_min() const { return take_min_; }
  const StratumSet& take_max() const { return take_max_; }
  std::size_t universe() const { return take_min_.universe(); }
  std::size_t covered() const { return take_min_.size() + take_max_.size(); }
  bool covers_all() const { return covered() == universe(); }

 private:
  StratumSet take_min_;
  StratumSet take_max_;
};

enum class AllocationKind { Regular, Vertex };

/// Solver output: per-stratum sample sizes plus the partition into take-min,
/// take-max and take-Neyman strata that generated them.
struct Allocation {
  std::vector<double> values;
  Partition partition;
  AllocationKind kind = AllocationKind::Regular;
  double objective = 0.0;
};

/// One outer round of the box solver as recorded for diagnostics: the pinned
/// sets right after the take-min candidates were determined, the scale of
/// the still-free strata (absent when nothing is free), and how many scan
/// rounds the inner one-sided solve used.
struct TraceIteration {
  int round = 0;
  StratumSet take_min;
  StratumSet take_max;
  std::optional<double> scale;
  int rna_iterations = 0;
};

struct SolveTrace {
  std::size_t stratum_count = 0;
  std::vector<TraceIteration> iterations;
};

/// Scale shared by all unpinned strata: the sample size still to be placed,
/// divided by the coefficient mass of the strata that will absorb it.
/// May legitimately be zero or negative mid-algorithm; it is never clamped.
inline double neyman_scale(const BoxProblem& p, const Partition& part) {
  if (part.universe() != p.size())
    throw Error("partition does not match the problem");
  if (part.take_min().intersects(part.take_max()))
    throw OverlappingSets("take-min and take-max sets intersect");
  if (part.covers_all())
    throw PartitionCoversAll("no stratum left to scale");
  double remaining = p.sample_total();
  double mass = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (part.take_min().contains(i))
      remaining -= p.lower_bound(i);
    else if (part.take_max().contains(i))
      remaining -= p.upper_bound(i);
    else
      mass += p.coefficient(i);
  }
  return remaining / mass;
}

/// The allocation generated by a partition: lower bound on take-min strata,
/// upper bound on take-max strata, coefficient times the common scale on the
/// rest. When the partition pins everything, no scale is involved.
inline std::vector<double> candidate_allocation(const BoxProblem& p,
                                                const Partition& part) {
  if (part.universe() != p.size())
    throw Error("partition does not match the problem");
  const bool vertex = part.covers_all();
  const double scale = vertex ? 0.0 : neyman_scale(p, part);
  std::vector<double> x(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (part.take_min().contains(i))
      x[i] = p.lower_bound(i);
    else if (part.take_max().contains(i))
      x[i] = p.upper_bound(i);
    else
      x[i] = p.coefficient(i) * scale;
  }
  return x;
}

/// Objective of the allocation problem: sum of coefficient^2 / value.
inline double objective_value(std::span<const double> coefficients,
                              std::span<const double> values) {
  if (coefficients.size() != values.size())
    throw Error("coefficient and value lengths differ");
  double total = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(values[i] > 0.0))
      throw NonPositiveAllocation("allocation value must be positive");
    total += coefficients[i] * coefficients[i] / values[i];
  }
  return total;
}

inline double objective_value(const BoxProblem& p,
                              std::span<const double> values) {
  return objective_value(p.coefficients(), values);
}

/// Variance coefficients for simple random sampling without replacement in
/// strata: per-stratum coefficient units * std_dev, plus the constant
/// subtracted from the variance.
struct StsiCoefficients {
  std::vector<double> coefficients;
  double variance_offset = 0.0;
};

inline StsiCoefficients stsi_coefficients(const StrataPopulation& pop) {
  StsiCoefficients out;
  out.coefficients.reserve(pop.strata.size());
  for (const Stratum& s : pop.strata) {
    if (!(s.std_dev > 0.0))
      throw ZeroVariance("stratum " + s.label +
                         " has no variance; its coefficient would be zero");
    if (s.units < 1)
      throw InfeasibleProblem("stratum " + s.label + " has no units");
    const double units = static_cast<double>(s.units);
    out.coefficients.push_back(units * s.std_dev);
    out.variance_offset += units * s.std_dev * s.std_dev;
  }
  return out;
}

/// Variance of the stratified estimator at the given allocation.
inline double estimator_variance(std::span<const double> coefficients,
                                 double variance_offset,
                                 std::span<const double> values) {
  return objective_value(coefficients, values) - variance_offset;
}

}  // namespace stratbox
