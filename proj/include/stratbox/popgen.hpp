#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "stratbox/allocore.hpp"
#include "stratbox/population.hpp"

namespace stratbox {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Deterministic uniform draw in (0, 1]. Top 53 bits of a splitmix64 output,
/// shifted into the unit interval; never zero.
inline double uniform01(std::uint64_t& state) {
  return static_cast<double>((splitmix64(state) >> 11) + 1) * 0x1.0p-53;
}

}  // namespace detail

/// Spread parameter of the i-th value set (1-based).
inline double lognormal_sigma(int set_index) {
  return std::log1p(static_cast<double>(set_index));
}

/// Draws `count` sets of `set_size` log-normal values; set i uses spread
/// log(1+i) and location zero.
///
/// Fully determined by `seed`: each set gets its own splitmix64 stream keyed
/// by (seed, set index), and normals come from a hand-rolled Box-Muller over
/// that stream, so regenerating with the same arguments is bit-identical.
inline std::vector<std::vector<double>> generate_lognormal_sets(
    int count, int set_size, std::uint64_t seed) {
  if (count < 1 || set_size < 2)
    throw Error("need at least one set of at least two values");
  std::vector<std::vector<double>> sets;
  sets.reserve(static_cast<std::size_t>(count));
  for (int i = 1; i <= count; ++i) {
    std::uint64_t stream = seed ^ (0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(i));
    const double sigma = lognormal_sigma(i);
    std::vector<double> values;
    values.reserve(static_cast<std::size_t>(set_size));
    while (values.size() < static_cast<std::size_t>(set_size)) {
      const double u1 = detail::uniform01(stream);
      const double u2 = detail::uniform01(stream);
      const double radius = std::sqrt(-2.0 * std::log(u1));
      const double angle = 2.0 * std::numbers::pi * u2;
      values.push_back(std::exp(sigma * (radius * std::cos(angle))));
      if (values.size() < static_cast<std::size_t>(set_size))
        values.push_back(std::exp(sigma * (radius * std::sin(angle))));
    }
    sets.push_back(std::move(values));
  }
  return sets;
}

/// Interior boundaries of a geometric-progression stratification of the
/// value range: boundary j is min * ratio^j with ratio = (max/min)^(1/L).
/// Returns L-1 boundaries; strata are the half-open intervals between them,
/// the last one closed.
inline std::vector<double> geometric_stratify(std::span<const double> values,
                                              int strata) {
  if (strata < 2) throw Error("need at least two strata");
  if (values.empty()) throw Error("no values to stratify");
  double lo = values.front(), hi = values.front();
  for (double v : values) {
    if (!(v > 0.0)) throw Error("values must be positive");
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (lo == hi) throw DegenerateRange("all values are equal");
  const double ratio = std::pow(hi / lo, 1.0 / static_cast<double>(strata));
  std::vector<double> boundaries;
  boundaries.reserve(static_cast<std::size_t>(strata) - 1);
  double b = lo;
  for (int j = 1; j < strata; ++j) {
    b *= ratio;
    boundaries.push_back(b);
  }
  return boundaries;
}

struct PopulationConfig {
  int sets = 10;
  int set_size = 10000;
  int strata_per_set = 10;
  std::uint64_t seed = 1;
};

/// Builds a synthetic stratified population: log-normal value sets, each
/// geometrically stratified, strata labelled "set.stratum".
///
/// A stratum needs at least two members for its standard deviation to exist
/// (divisor units-1), so strata with fewer merge into their right
/// neighbour; a trailing short stratum merges left.
inline StrataPopulation build_population(const PopulationConfig& config) {
  const std::vector<std::vector<double>> sets = generate_lognormal_sets(
      config.sets, config.set_size, config.seed);
  StrataPopulation pop;
  for (int i = 0; i < config.sets; ++i) {
    const std::vector<double>& values = sets[static_cast<std::size_t>(i)];
    const std::vector<double> boundaries =
        geometric_stratify(values, config.strata_per_set);

    std::vector<std::vector<double>> buckets(boundaries.size() + 1);
    for (double v : values) {
      const std::size_t b = static_cast<std::size_t>(
          std::upper_bound(boundaries.begin(), boundaries.end(), v) -
          boundaries.begin());
      buckets[b].push_back(v);
    }

    // Merge short buckets rightward so every stratum has >= 2 members.
    std::vector<std::vector<double>> merged;
    std::vector<double> carry;
    for (std::vector<double>& bucket : buckets) {
      carry.insert(carry.end(), bucket.begin(), bucket.end());
      if (carry.size() >= 2) {
        merged.push_back(std::move(carry));
        carry.clear();
      }
    }
    if (!carry.empty()) {
      if (merged.empty()) throw Error("set has too few distinct values");
      merged.back().insert(merged.back().end(), carry.begin(), carry.end());
    }

    for (std::size_t j = 0; j < merged.size(); ++j) {
      const std::vector<double>& members = merged[j];
      double mean = 0.0;
      for (double v : members) mean += v;
      mean /= static_cast<double>(members.size());
      double ss = 0.0;
      for (double v : members) ss += (v - mean) * (v - mean);
      const double sd = std::sqrt(ss / static_cast<double>(members.size() - 1));
      pop.strata.push_back(Stratum{
          std::to_string(i + 1) + "." + std::to_string(j + 1),
          static_cast<std::int64_t>(members.size()), sd});
    }
  }
  return pop;
}

/// Per-stratum bound policies used when turning a population into an
/// allocation problem. Defaults: lower bound two units, upper bound the
/// stratum size.
struct BoundsPolicy {
  std::function<double(const Stratum&)> lower = [](const Stratum&) {
    return 2.0;
  };
  std::function<double(const Stratum&)> upper = [](const Stratum& s) {
    return static_cast<double>(s.units);
  };
};

/// Allocation problem for a population and an explicit sample total.
inline BoxProblem population_to_problem(const StrataPopulation& pop,
                                        double sample_total,
                                        const BoundsPolicy& policy = {}) {
  const StsiCoefficients stsi = stsi_coefficients(pop);
  std::vector<std::string> labels;
  std::vector<double> lower, upper;
  labels.reserve(pop.strata.size());
  for (const Stratum& s : pop.strata) {
    labels.push_back(s.label);
    lower.push_back(policy.lower(s));
    upper.push_back(policy.upper(s));
  }
  return BoxProblem(std::move(labels), stsi.coefficients, std::move(lower),
                    std::move(upper), sample_total);
}

/// Same, with the sample total given as a fraction of the population size
/// (rounded to the nearest unit).
inline BoxProblem population_to_problem_fraction(const StrataPopulation& pop,
                                                 double fraction,
                                                 const BoundsPolicy& policy = {}) {
  const double total = std::round(fraction * static_cast<double>(pop.total_units()));
  return population_to_problem(pop, total, policy);
}

}  // namespace stratbox
