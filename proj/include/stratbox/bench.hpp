#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <future>
#include <string>
#include <vector>

#include "stratbox/fpia.hpp"
#include "stratbox/popgen.hpp"
#include "stratbox/recursive.hpp"

namespace stratbox {

/// One (algorithm, fraction) cell of a benchmark run.
struct BenchRow {
  std::string algorithm;
  double fraction = 0.0;
  double sample_total = 0.0;
  double median_ns = 0.0;
  std::vector<int> iterations;  // one entry per inner solve round
  std::size_t take_min_count = 0;
  std::size_t take_neyman_count = 0;
  std::size_t take_max_count = 0;
  double objective = 0.0;
  std::string status = "ok";
};

struct BenchReport {
  std::size_t strata = 0;
  std::int64_t population_units = 0;
  int repeats = 1;
  std::vector<BenchRow> rows;
};

namespace detail {

template <class F>
double median_run_ns(int repeats, F&& solve_once) {
  std::vector<double> times;
  times.reserve(static_cast<std::size_t>(repeats));
  for (int r = 0; r < repeats; ++r) {
    const auto start = std::chrono::steady_clock::now();
    solve_once();
    const auto stop = std::chrono::steady_clock::now();
    times.push_back(static_cast<double>(
        std::chrono::duration_cast<std::chrono::nanoseconds>(stop - start)
            .count()));
  }
  std::sort(times.begin(), times.end());
  const std::size_t mid = times.size() / 2;
  return times.size() % 2 == 1 ? times[mid]
                               : 0.5 * (times[mid - 1] + times[mid]);
}

inline void fill_counts(BenchRow& row, const Partition& part) {
  row.take_min_count = part.take_min().size();
  row.take_max_count = part.take_max().size();
  row.take_neyman_count = part.universe() - part.covered();
}

inline BenchRow bench_cell(const BoxProblem& problem, const std::string& algorithm,
                           double fraction, int repeats) {
  BenchRow row;
  row.algorithm = algorithm;
  row.fraction = fraction;
  row.sample_total = problem.sample_total();

  if (algorithm == "rnabox" || algorithm == "rnabox-twin") {
    const bool twin = algorithm == "rnabox-twin";
    row.median_ns = median_run_ns(repeats, [&] {
      if (twin)
        (void)rnabox_twin(problem);
      else
        (void)rnabox(problem);
    });
    if (twin) {
      const Allocation alloc = rnabox_twin(problem);
      fill_counts(row, alloc.partition);
      row.objective = alloc.objective;
    } else {
      const RnaboxResult res = rnabox(problem, RnaboxOptions{true, false});
      fill_counts(row, res.allocation.partition);
      row.objective = res.allocation.objective;
      for (const TraceIteration& it : res.trace->iterations)
        row.iterations.push_back(it.rna_iterations);
    }
  } else if (algorithm == "rna") {
    const UpperProblem upper(problem);
    row.median_ns = median_run_ns(repeats, [&] { (void)rna(upper); });
    const RnaResult res = rna(upper);
    row.iterations = {res.iterations};
    row.take_max_count = res.take_max.size();
    row.take_neyman_count = problem.size() - res.take_max.size();
    row.objective = objective_value(problem, res.values);
  } else if (algorithm == "lrna") {
    const LowerProblem lower(problem);
    row.median_ns = median_run_ns(repeats, [&] { (void)lrna(lower); });
    const LrnaResult res = lrna(lower);
    row.iterations = {res.iterations};
    row.take_min_count = res.take_min.size();
    row.take_neyman_count = problem.size() - res.take_min.size();
    row.objective = objective_value(problem, res.values);
  } else if (algorithm == "naive") {
    row.median_ns = median_run_ns(repeats, [&] { (void)naive_rna_box(problem); });
    const NaiveResult res = naive_rna_box(problem);
    row.iterations = {res.iterations};
    fill_counts(row, res.partition);
    row.objective = objective_value(problem, res.values);
    if (!res.feasible) row.status = "infeasible";
  } else if (algorithm == "fpia") {
    row.median_ns = median_run_ns(repeats, [&] { (void)fpia_solve(problem); });
    const FpiaOutcome res = fpia_solve(problem);
    row.iterations = {static_cast<int>(res.lambda_history.size()) - 1};
    switch (res.status) {
      case FpiaStatus::Converged: {
        const LambdaPartition part =
            lambda_partition(problem, res.lambda_history.back());
        row.take_min_count = part.at_lower.size();
        row.take_max_count = part.at_upper.size();
        row.take_neyman_count = part.free.size();
        row.objective = objective_value(problem, *res.allocation);
        break;
      }
      case FpiaStatus::Blocked:
        row.status = "blocked";
        break;
      case FpiaStatus::Oscillating:
        row.status = "oscillating";
        break;
      case FpiaStatus::MaxIterations:
        row.status = "max-iterations";
        break;
    }
  } else if (algorithm == "bisection") {
    row.median_ns = median_run_ns(repeats, [&] { (void)bisection_solve(problem); });
    int iters = 0;
    const std::vector<double> x = bisection_solve(problem, 1e-9, &iters);
    row.iterations = {iters};
    for (std::size_t i = 0; i < problem.size(); ++i) {
      if (x[i] == problem.lower_bound(i))
        ++row.take_min_count;
      else if (x[i] == problem.upper_bound(i))
        ++row.take_max_count;
      else
        ++row.take_neyman_count;
    }
    row.objective = objective_value(problem, x);
  } else {
    throw Error("unknown algorithm '" + algorithm + "'");
  }
  return row;
}

}  // namespace detail

/// Runs every (algorithm, fraction) cell on problems derived from the
/// population. Timed runs repeat `repeats` times and report the median; a
/// separate untimed run collects iteration counts and the stratum role
/// split. Cells run sequentially unless `parallel_cells` is set.
inline BenchReport run_bench(const StrataPopulation& pop,
                             const std::vector<double>& fractions,
                             const std::vector<std::string>& algorithms,
                             int repeats, const BoundsPolicy& policy = {},
                             bool parallel_cells = false) {
  BenchReport report;
  report.strata = pop.strata.size();
  report.population_units = pop.total_units();
  report.repeats = repeats;

  struct Cell {
    std::string algorithm;
    double fraction;
  };
  std::vector<Cell> cells;
  for (const std::string& a : algorithms)
    for (double f : fractions) cells.push_back({a, f});

  if (!parallel_cells) {
    for (const Cell& c : cells) {
      const BoxProblem problem =
          population_to_problem_fraction(pop, c.fraction, policy);
      report.rows.push_back(
          detail::bench_cell(problem, c.algorithm, c.fraction, repeats));
    }
    return report;
  }

  std::vector<std::future<BenchRow>> futures;
  futures.reserve(cells.size());
  for (const Cell& c : cells) {
    futures.push_back(std::async(std::launch::async, [&pop, &policy, c, repeats] {
      const BoxProblem problem =
          population_to_problem_fraction(pop, c.fraction, policy);
      return detail::bench_cell(problem, c.algorithm, c.fraction, repeats);
    }));
  }
  for (std::future<BenchRow>& f : futures) report.rows.push_back(f.get());
  return report;
}

}  // namespace stratbox
