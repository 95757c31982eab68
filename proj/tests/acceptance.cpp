// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails. Each criterion pins its tolerances in code.

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "stratbox/io.hpp"
#include "stratbox/stratbox.hpp"
#include "test_util.hpp"

using namespace stratbox;
namespace fs = std::filesystem;

namespace {

struct Checker {
  bool ok = true;
  std::string detail;

  void expect(bool condition, const std::string& what) {
    if (!condition) {
      ok = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }

  void expect_near(double value, double target, double margin,
                   const std::string& what) {
    if (!(std::abs(value - target) <= margin)) {
      ok = false;
      if (!detail.empty()) detail += "; ";
      detail += what + " = " + std::to_string(value) + ", expected " +
                std::to_string(target) + " +/- " + std::to_string(margin);
    }
  }
};

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double out = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    out = std::max(out, std::abs(a[i] - b[i]));
  return out;
}

// Criterion 1: the ten-stratum worked instance, bit by published bit.
void criterion_table1(Checker& c) {
  const BoxProblem p = testutil::table1_problem();
  const RnaboxResult res = rnabox(p, RnaboxOptions{true, false});
  const Allocation& alloc = res.allocation;

  const std::vector<double> expected = {750, 450, 261.08, 350, 198.92,
                                        550, 650, 100,    850, 950};
  for (std::size_t i = 0; i < expected.size(); ++i)
    c.expect_near(alloc.values[i], expected[i], 0.005,
                  "x[" + p.label(i) + "]");
  c.expect_near(alloc.objective, 441591.5, 0.5, "objective");
  c.expect(alloc.partition.take_min() ==
               p.set_of({"1", "2", "4", "6", "7", "9", "10"}),
           "take-min set");
  c.expect(alloc.partition.take_max() == p.set_of({"8"}), "take-max set");

  c.expect(res.trace.has_value(), "trace present");
  if (!res.trace) return;
  const SolveTrace& trace = *res.trace;
  c.expect(trace.iterations.size() == 6, "six rounds");
  if (trace.iterations.size() != 6) return;

  const std::vector<std::vector<std::string>> expected_min = {
      {},
      {"10"},
      {"1", "2", "10"},
      {"1", "2", "9", "10"},
      {"1", "2", "6", "9", "10"},
      {"1", "2", "4", "6", "7", "9", "10"}};
  const std::vector<std::vector<std::string>> expected_max = {
      {"2", "3", "4", "5", "6", "7", "8", "9"},
      {"3", "4", "5", "6", "7", "8", "9"},
      {"3", "4", "5", "6", "7", "8"},
      {"3", "5", "8"},
      {"3", "5", "8"},
      {"8"}};
  const std::vector<double> scales = {0.3, 0.204, 0.122, 0.0803, 0.075, 0.0622};
  const std::vector<double> margins = {5e-4, 5e-4, 5e-4, 5e-5, 5e-5, 5e-5};
  for (std::size_t r = 0; r < 6; ++r) {
    c.expect(trace.iterations[r].take_min == p.set_of(expected_min[r]),
             "round " + std::to_string(r + 1) + " take-min");
    c.expect(trace.iterations[r].take_max == p.set_of(expected_max[r]),
             "round " + std::to_string(r + 1) + " take-max");
    c.expect(trace.iterations[r].scale.has_value(),
             "round " + std::to_string(r + 1) + " scale present");
    if (trace.iterations[r].scale)
      c.expect_near(*trace.iterations[r].scale, scales[r], margins[r],
                    "round " + std::to_string(r + 1) + " scale");
  }

  // Median solve time under a millisecond.
  std::vector<double> times;
  for (int rep = 0; rep < 21; ++rep) {
    const auto start = std::chrono::steady_clock::now();
    (void)rnabox(p);
    const auto stop = std::chrono::steady_clock::now();
    times.push_back(std::chrono::duration<double>(stop - start).count());
  }
  std::sort(times.begin(), times.end());
  c.expect(times[times.size() / 2] < 1e-3,
           "median solve time " + std::to_string(times[times.size() / 2]) +
               " s, budget 0.001 s");
}

// Criterion 2: the naive recursion's documented failure.
void criterion_table2(Checker& c) {
  const BoxProblem p = testutil::table2_problem();
  const NaiveResult naive = naive_rna_box(p);
  const std::vector<double> naive_expected = {30, 88, 1344, 22, 5};
  for (std::size_t i = 0; i < naive_expected.size(); ++i)
    c.expect_near(naive.values[i], naive_expected[i], 0.005,
                  "naive x[" + p.label(i) + "]");
  c.expect_near(objective_value(p, naive.values), 20360.0, 0.5,
                "naive objective");

  const Allocation as_alloc{naive.values, naive.partition,
                            AllocationKind::Regular,
                            objective_value(p, naive.values)};
  const OptimalityReport report = check_box_optimality(p, as_alloc);
  c.expect(!report.is_optimal, "naive output is rejected");
  bool stratum2 = false;
  for (const Violation& v : report.violations)
    if (v.label == "2") stratum2 = true;
  c.expect(stratum2, "violation names stratum 2");

  const Allocation exact = rnabox(p).allocation;
  const std::vector<double> exact_expected = {54.44, 45.63, 1344, 39.93, 5};
  for (std::size_t i = 0; i < exact_expected.size(); ++i)
    c.expect_near(exact.values[i], exact_expected[i], 0.005,
                  "optimal x[" + p.label(i) + "]");
  c.expect_near(exact.objective, 17091.0, 1.0, "optimal objective");
}

// Criterion 3: the two-stratum counterexample.
void criterion_table3(Checker& c) {
  const BoxProblem p = testutil::table3_problem();
  const Allocation exact = rnabox(p).allocation;
  c.expect_near(exact.values[0], 50.0, 0.005, "x[1]");
  c.expect_near(exact.values[1], 110.0, 0.005, "x[2]");

  StratumSet mins(2), maxs(2);
  mins.insert(0);
  const std::vector<double> claimed = {30.0, 130.0};
  const Allocation wrong{claimed, Partition(mins, maxs),
                         AllocationKind::Regular, objective_value(p, claimed)};
  const OptimalityReport report = check_box_optimality(p, wrong);
  c.expect(!report.is_optimal, "claimed point is rejected");
  bool found = false;
  for (const Violation& v : report.violations) {
    if (v.label != "1") continue;
    if (std::abs(1.0 / v.lhs - 23.08) <= 0.01 &&
        std::abs(1.0 / v.rhs - 66.67) <= 0.01)
      found = true;
  }
  c.expect(found, "violation carries the 66.67 vs 23.08 comparison");
}

// Criterion 4: blocked fixed-point iteration.
void criterion_table6(Checker& c) {
  const BoxProblem p = testutil::table6_problem();
  FpiaOptions options;
  options.lambda0 = 6861.36;
  const FpiaOutcome out = fpia_solve(p, options);
  c.expect(out.status == FpiaStatus::Blocked, "status blocked");

  const Allocation exact = rnabox(p).allocation;
  const std::vector<double> expected = {44.35, 5, 5.65, 5};
  for (std::size_t i = 0; i < expected.size(); ++i)
    c.expect_near(exact.values[i], expected[i], 0.005,
                  "x[" + p.label(i) + "]");
  const double scale = neyman_scale(p, exact.partition);
  c.expect_near(1.0 / (scale * scale), 8798.44, 0.05, "inverse square scale");
}

// Criterion 5: oscillating fixed-point iteration.
void criterion_table7(Checker& c) {
  const BoxProblem p = testutil::table7_problem();
  FpiaOptions options;
  options.lambda0 = 695.64;
  const FpiaOutcome out = fpia_solve(p, options);
  c.expect(out.status == FpiaStatus::Oscillating, "status oscillating");
  c.expect(out.lambda_history.size() >= 4, "history long enough");
  if (out.lambda_history.size() >= 4) {
    c.expect_near(out.lambda_history[1], 1444.0, 0.005, "first cycle value");
    c.expect_near(out.lambda_history[2], 739.84, 0.005, "second cycle value");
    c.expect_near(out.lambda_history[3], 1444.0, 0.005, "repeat value");
  }

  const Allocation exact = rnabox(p).allocation;
  const std::vector<double> expected = {13.1, 10, 10, 46.9};
  for (std::size_t i = 0; i < expected.size(); ++i)
    c.expect_near(exact.values[i], expected[i], 0.05, "x[" + p.label(i) + "]");
  const double scale = neyman_scale(p, exact.partition);
  c.expect_near(1.0 / (scale * scale), 841.0, 0.01, "fixed point");
}

// Criterion 6: four solvers agree on random instances and every recursion
// output certifies.
void criterion_oracle_equivalence(Checker& c) {
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(20240601);
  std::uniform_int_distribution<std::size_t> size_dist(1, 8);
  double worst = 0.0;
  int not_optimal = 0;
  for (int rep = 0; rep < 10000; ++rep) {
    const BoxProblem p = testutil::random_box_problem(rng, size_dist(rng));
    const Allocation direct = rnabox(p).allocation;
    const Allocation twin = rnabox_twin(p);
    const std::vector<double> by_bisection = bisection_solve(p);
    const Allocation enumerated = oracle_enumerate(p);
    worst = std::max(worst, max_abs_diff(direct.values, twin.values));
    worst = std::max(worst, max_abs_diff(direct.values, by_bisection));
    worst = std::max(worst, max_abs_diff(direct.values, enumerated.values));
    if (!check_box_optimality(p, direct).is_optimal) ++not_optimal;
  }
  c.expect(worst <= 1e-8,
           "componentwise agreement " + std::to_string(worst) + " > 1e-8");
  c.expect(not_optimal == 0, std::to_string(not_optimal) +
                                 " recursion outputs failed the checker");
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  c.expect(seconds < 60.0,
           "runtime " + std::to_string(seconds) + " s, budget 60 s");
}

// Criterion 7: clean trace audits, bounded round counts.
void criterion_trace_audit(Checker& c) {
  std::mt19937_64 rng(20240602);
  std::uniform_int_distribution<std::size_t> size_dist(1, 50);
  int dirty = 0, too_long = 0;
  for (int rep = 0; rep < 10000; ++rep) {
    const BoxProblem p = testutil::random_box_problem(rng, size_dist(rng));
    const RnaboxResult res = rnabox(p, RnaboxOptions{true, false});
    if (!res.trace || !audit_trace(*res.trace).empty()) ++dirty;
    if (res.trace && res.trace->iterations.size() > p.size() + 1) ++too_long;
  }
  c.expect(dirty == 0, std::to_string(dirty) + " traces failed the audit");
  c.expect(too_long == 0, std::to_string(too_long) + " traces too long");
}

// Criterion 8: rounding preserves sums exactly and costs practically nothing
// on desk-scale populations.
void criterion_rounding(Checker& c) {
  std::mt19937_64 rng(20240603);
  std::uniform_int_distribution<int> size_dist(1, 60);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int sum_failures = 0;
  for (int rep = 0; rep < 10000; ++rep) {
    const int n = size_dist(rng);
    std::vector<double> x(static_cast<std::size_t>(n));
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      x[static_cast<std::size_t>(i)] = 0.5 + 30.0 * unit(rng);
      total += x[static_cast<std::size_t>(i)];
    }
    const std::int64_t target = static_cast<std::int64_t>(std::ceil(total));
    x.back() += static_cast<double>(target) - total;
    if (!(x.back() > 0.0)) continue;
    const std::vector<std::int64_t> rounded = round_preserve_sum(x, target);
    std::int64_t sum = 0;
    for (std::int64_t v : rounded) sum += v;
    if (sum != target) ++sum_failures;
  }
  c.expect(sum_failures == 0,
           std::to_string(sum_failures) + " rounded sums drifted");

  PopulationConfig config{10, 10000, 10, 3};
  const StrataPopulation pop = build_population(config);
  for (int tenth = 1; tenth <= 9; ++tenth) {
    const double f = 0.1 * tenth;
    const BoxProblem p = population_to_problem_fraction(pop, f);
    const Allocation alloc = rnabox(p).allocation;
    const std::int64_t n = static_cast<std::int64_t>(
        std::llround(p.sample_total()));
    const std::vector<std::int64_t> rounded =
        round_preserve_sum(alloc.values, n);
    const double ratio =
        rounding_penalty(p.coefficients(), alloc.values, rounded);
    c.expect(ratio <= 1.0 + 1e-4,
             "penalty " + std::to_string(ratio) + " at fraction " +
                 std::to_string(f));
  }
}

// Criterion 9: the benchmark command reports iteration vectors and role
// counts whose trend over the sampling fraction matches the theory.
void criterion_bench_shape(Checker& c) {
  const char* bin = std::getenv("STRATBOX_BIN");
  c.expect(bin != nullptr, "STRATBOX_BIN not set");
  if (!bin) return;

  const fs::path dir =
      fs::temp_directory_path() /
      ("stratbox_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  const fs::path pop_path = dir / "population.csv";
  const fs::path report_path = dir / "bench.json";

  PopulationConfig config{10, 10000, 10, 3};
  const StrataPopulation pop = build_population(config);
  {
    std::ofstream out(pop_path);
    io::write_population_csv(pop, out);
  }

  const std::string command =
      std::string(bin) + " bench --input " + pop_path.string() +
      " --fractions 0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9 " +
      "--algorithms rnabox --repeats 1 -o " + report_path.string() +
      " > /dev/null 2>&1";
  const int raw = std::system(command.c_str());
  c.expect(WEXITSTATUS(raw) == 0, "bench command exit code");
  if (WEXITSTATUS(raw) != 0) return;

  std::ifstream in(report_path);
  nlohmann::ordered_json doc;
  in >> doc;
  const auto& rows = doc.at("rows");
  c.expect(rows.size() == 9, "nine rows");

  double previous_fraction = 0.0;
  std::int64_t previous_min = -1, previous_max = -1;
  for (const auto& row : rows) {
    c.expect(row.at("iterations").size() >= 1,
             "inner iteration vector present");
    const double fraction = row.at("fraction").get<double>();
    const std::int64_t mins = row.at("take_min").get<std::int64_t>();
    const std::int64_t maxs = row.at("take_max").get<std::int64_t>();
    if (previous_min >= 0 && fraction > previous_fraction) {
      c.expect(mins <= previous_min,
               "take-min count rose from " + std::to_string(previous_min) +
                   " to " + std::to_string(mins) + " at fraction " +
                   std::to_string(fraction));
      c.expect(maxs >= previous_max,
               "take-max count fell from " + std::to_string(previous_max) +
                   " to " + std::to_string(maxs) + " at fraction " +
                   std::to_string(fraction));
    }
    previous_fraction = fraction;
    previous_min = mins;
    previous_max = maxs;
  }
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    std::string name;
    std::function<void(Checker&)> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "ten-stratum golden instance with trace", criterion_table1},
      {2, "naive recursion counterexample", criterion_table2},
      {3, "two-stratum pinned-floor counterexample", criterion_table3},
      {4, "blocked fixed-point iteration", criterion_table6},
      {5, "oscillating fixed-point iteration", criterion_table7},
      {6, "four-way solver agreement on random instances",
       criterion_oracle_equivalence},
      {7, "trace audits on random instances", criterion_trace_audit},
      {8, "sum-preserving rounding and its cost", criterion_rounding},
      {9, "benchmark report shape over sampling fractions",
       criterion_bench_shape},
  };

  int failures = 0;
  for (const Criterion& criterion : criteria) {
    Checker checker;
    try {
      criterion.run(checker);
    } catch (const std::exception& e) {
      checker.ok = false;
      checker.detail = std::string("exception: ") + e.what();
    }
    if (checker.ok) {
      std::cout << "PASS  " << criterion.id << "  " << criterion.name << "\n";
    } else {
      ++failures;
      std::cout << "FAIL  " << criterion.id << "  " << criterion.name << " ("
                << checker.detail << ")\n";
    }
  }
  return failures == 0 ? 0 : 1;
}
