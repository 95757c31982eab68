// Command-line front end: solve allocation problems from CSV, verify
// allocations against the optimality conditions, round to integers,
// generate synthetic populations, and benchmark the solvers.
//
// Exit codes: 0 success, 1 I/O or parse error, 2 infeasible input,
// 3 algorithm non-convergence, 4 verification failure.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "stratbox/bench.hpp"
#include "stratbox/io.hpp"
#include "stratbox/roundalloc.hpp"
#include "stratbox/stratbox.hpp"

namespace {

using stratbox::io::json;

constexpr int kOk = 0;
constexpr int kIoError = 1;
constexpr int kInfeasible = 2;
constexpr int kNoConvergence = 3;
constexpr int kNotOptimal = 4;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw stratbox::Error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void emit(const std::string& text, const std::string& output) {
  if (output.empty() || output == "-") {
    std::cout << text;
    if (!text.empty() && text.back() != '\n') std::cout << '\n';
    return;
  }
  std::ofstream out(output, std::ios::binary);
  if (!out) throw stratbox::Error("cannot write " + output);
  out << text;
  if (!text.empty() && text.back() != '\n') out << '\n';
}

std::string default_format() {
  const char* env = std::getenv("STRATBOX_FORMAT");
  if (env && std::string(env) == "csv") return "csv";
  return "json";
}

std::vector<double> parse_fraction_list(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ','))
    out.push_back(stratbox::io::detail::parse_double(item, "fraction"));
  if (out.empty()) throw stratbox::Error("empty fraction list");
  return out;
}

std::vector<std::string> parse_name_list(const std::string& csv) {
  std::vector<std::string> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(item);
  if (out.empty()) throw stratbox::Error("empty list");
  return out;
}

stratbox::Partition partition_from_values(const stratbox::BoxProblem& p,
                                          const std::vector<double>& x) {
  stratbox::StratumSet mins(p.size()), maxs(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (x[i] == p.lower_bound(i))
      mins.insert(i);
    else if (x[i] == p.upper_bound(i))
      maxs.insert(i);
  }
  return stratbox::Partition(std::move(mins), std::move(maxs));
}

struct SolveArgs {
  std::string input;
  std::string output = "-";
  std::string algorithm = "rnabox";
  std::string format;
  double n = 0.0;
  bool has_n = false;
  double fraction = 0.0;
  bool has_fraction = false;
  bool trace = false;
  bool stsi = false;
  bool reuse_domain = false;
  double lambda0 = 0.0;
  bool has_lambda0 = false;
  int max_iterations = 200;
  double tolerance = 1e-10;
};

int run_solve(const SolveArgs& args) {
  std::istringstream in(read_file(args.input));
  const stratbox::io::ProblemCsv csv = stratbox::io::read_problem_csv(in);
  if (args.stsi && !csv.stsi)
    throw stratbox::Error("--stsi requires the 'stratum,N,S,m,M' schema");

  double sample_total;
  if (args.has_fraction) {
    if (!csv.stsi)
      throw stratbox::Error("--fraction needs population sizes (schema N,S)");
    sample_total = std::round(args.fraction * csv.population_units);
  } else if (args.has_n) {
    sample_total = args.n;
  } else {
    throw stratbox::Error("one of --n or --fraction is required");
  }

  const stratbox::BoxProblem problem = stratbox::io::to_problem(csv, sample_total);

  const auto start = std::chrono::steady_clock::now();
  json doc;
  int exit_code = kOk;

  if (args.algorithm == "rnabox" || args.algorithm == "rnabox-twin") {
    if (args.algorithm == "rnabox") {
      stratbox::RnaboxOptions options;
      options.want_trace = args.trace;
      options.reuse_take_max_domain = args.reuse_domain;
      const stratbox::RnaboxResult res = stratbox::rnabox(problem, options);
      const auto ns = std::chrono::duration_cast<std::chrono::nanoseconds>(
                          std::chrono::steady_clock::now() - start)
                          .count();
      doc = stratbox::io::solve_document(args.algorithm, problem,
                                         res.allocation, res.trace, ns);
    } else {
      const stratbox::Allocation alloc = stratbox::rnabox_twin(problem);
      const auto ns = std::chrono::duration_cast<std::chrono::nanoseconds>(
                          std::chrono::steady_clock::now() - start)
                          .count();
      doc = stratbox::io::solve_document(args.algorithm, problem, alloc,
                                         std::nullopt, ns);
    }
  } else if (args.algorithm == "rna") {
    const stratbox::UpperProblem upper(problem);
    const stratbox::RnaResult res = stratbox::rna(upper);
    const auto ns = std::chrono::duration_cast<std::chrono::nanoseconds>(
                        std::chrono::steady_clock::now() - start)
                        .count();
    stratbox::Allocation alloc{
        res.values,
        stratbox::Partition(stratbox::StratumSet(problem.size()), res.take_max),
        res.take_max.size() == problem.size() ? stratbox::AllocationKind::Vertex
                                              : stratbox::AllocationKind::Regular,
        stratbox::objective_value(problem, res.values)};
    doc = stratbox::io::solve_document(args.algorithm, problem, alloc,
                                       std::nullopt, ns);
    doc["iterations"] = res.iterations;
  } else if (args.algorithm == "lrna") {
    const stratbox::LowerProblem lower(problem);
    const stratbox::LrnaResult res = stratbox::lrna(lower);
    const auto ns = std::chrono::duration_cast<std::chrono::nanoseconds>(
                        std::chrono::steady_clock::now() - start)
                        .count();
    stratbox::Allocation alloc{
        res.values,
        stratbox::Partition(res.take_min, stratbox::StratumSet(problem.size())),
        res.take_min.size() == problem.size() ? stratbox::AllocationKind::Vertex
                                              : stratbox::AllocationKind::Regular,
        stratbox::objective_value(problem, res.values)};
    doc = stratbox::io::solve_document(args.algorithm, problem, alloc,
                                       std::nullopt, ns);
    doc["iterations"] = res.iterations;
  } else if (args.algorithm == "naive") {
    const stratbox::NaiveResult res = stratbox::naive_rna_box(problem);
    const auto ns = std::chrono::duration_cast<std::chrono::nanoseconds>(
                        std::chrono::steady_clock::now() - start)
                        .count();
    stratbox::Allocation alloc{res.values, res.partition,
                               res.partition.covers_all()
                                   ? stratbox::AllocationKind::Vertex
                                   : stratbox::AllocationKind::Regular,
                               stratbox::objective_value(problem, res.values)};
    doc = stratbox::io::solve_document(args.algorithm, problem, alloc,
                                       std::nullopt, ns);
    doc["feasible"] = res.feasible;
  } else if (args.algorithm == "bisection") {
    const std::vector<double> x = stratbox::bisection_solve(problem);
    const auto ns = std::chrono::duration_cast<std::chrono::nanoseconds>(
                        std::chrono::steady_clock::now() - start)
                        .count();
    stratbox::Partition part = partition_from_values(problem, x);
    stratbox::Allocation alloc{x, part,
                               part.covers_all()
                                   ? stratbox::AllocationKind::Vertex
                                   : stratbox::AllocationKind::Regular,
                               stratbox::objective_value(problem, x)};
    doc = stratbox::io::solve_document(args.algorithm, problem, alloc,
                                       std::nullopt, ns);
  } else if (args.algorithm == "fpia") {
    stratbox::FpiaOptions options;
    if (args.has_lambda0) options.lambda0 = args.lambda0;
    options.max_iterations = args.max_iterations;
    options.tolerance = args.tolerance;
    const stratbox::FpiaOutcome res = stratbox::fpia_solve(problem, options);
    const auto ns = std::chrono::duration_cast<std::chrono::nanoseconds>(
                        std::chrono::steady_clock::now() - start)
                        .count();
    if (res.status == stratbox::FpiaStatus::Converged) {
      stratbox::Partition part = partition_from_values(problem, *res.allocation);
      stratbox::Allocation alloc{
          *res.allocation, part,
          part.covers_all() ? stratbox::AllocationKind::Vertex
                            : stratbox::AllocationKind::Regular,
          stratbox::objective_value(problem, *res.allocation)};
      doc = stratbox::io::solve_document(args.algorithm, problem, alloc,
                                         std::nullopt, ns);
      doc["status"] = "converged";
    } else {
      doc["algorithm"] = args.algorithm;
      doc["n"] = problem.sample_total();
      switch (res.status) {
        case stratbox::FpiaStatus::Blocked:
          doc["status"] = "blocked";
          break;
        case stratbox::FpiaStatus::Oscillating:
          doc["status"] = "oscillating";
          break;
        default:
          doc["status"] = "max-iterations";
          break;
      }
      doc["timings"] = json{{"solve_ns", ns}};
      exit_code = kNoConvergence;
    }
    json history = json::array();
    for (double v : res.lambda_history) history.push_back(v);
    doc["lambda_history"] = history;
  } else {
    throw stratbox::Error("unknown algorithm '" + args.algorithm +
                          "'; expected one of rnabox, rnabox-twin, rna, lrna, "
                          "naive, fpia, bisection");
  }

  const std::string format = args.format.empty() ? default_format() : args.format;
  if (format == "csv" && doc.contains("strata"))
    emit(stratbox::io::solve_csv(doc), args.output);
  else
    emit(doc.dump(2), args.output);
  return exit_code;
}

struct VerifyArgs {
  std::string problem_path;
  std::string allocation_path;
  std::string output = "-";
  double tolerance = 1e-9;
  double n = 0.0;
  bool has_n = false;
};

int run_verify(const VerifyArgs& args) {
  std::istringstream problem_in(read_file(args.problem_path));
  const stratbox::io::ProblemCsv csv = stratbox::io::read_problem_csv(problem_in);
  std::istringstream alloc_in(read_file(args.allocation_path));
  const stratbox::io::AllocationInput input =
      stratbox::io::read_allocation(alloc_in);

  if (input.labels.size() != csv.labels.size())
    throw stratbox::Error("allocation has " +
                          std::to_string(input.labels.size()) +
                          " strata, problem has " +
                          std::to_string(csv.labels.size()));

  double sample_total;
  if (args.has_n) {
    sample_total = args.n;
  } else if (input.sample_total) {
    sample_total = *input.sample_total;
  } else {
    sample_total = 0.0;
    for (double v : input.values) sample_total += v;
  }

  const stratbox::BoxProblem problem = stratbox::io::to_problem(csv, sample_total);

  stratbox::OptimalityReport report;
  if (input.algorithm == "rna") {
    const stratbox::UpperProblem upper(problem);
    stratbox::RnaResult res;
    res.take_max = stratbox::StratumSet(problem.size());
    res.values.resize(problem.size());
    for (std::size_t k = 0; k < input.labels.size(); ++k) {
      const std::size_t i = problem.index_of(input.labels[k]);
      res.values[i] = input.values[k];
      if (input.roles[k] == "max") res.take_max.insert(i);
    }
    report = stratbox::check_upper_optimality(upper, res, args.tolerance);
  } else if (input.algorithm == "lrna") {
    const stratbox::LowerProblem lower(problem);
    stratbox::LrnaResult res;
    res.take_min = stratbox::StratumSet(problem.size());
    res.values.resize(problem.size());
    for (std::size_t k = 0; k < input.labels.size(); ++k) {
      const std::size_t i = problem.index_of(input.labels[k]);
      res.values[i] = input.values[k];
      if (input.roles[k] == "min") res.take_min.insert(i);
    }
    report = stratbox::check_lower_optimality(lower, res, args.tolerance);
  } else {
    const stratbox::Allocation alloc = stratbox::io::to_allocation(problem, input);
    report = stratbox::check_box_optimality(problem, alloc, args.tolerance);
  }

  emit(stratbox::io::report_document(problem, report).dump(2), args.output);
  return report.is_optimal ? kOk : kNotOptimal;
}

struct RoundArgs {
  std::string allocation_path;
  std::string problem_path;
  std::string output = "-";
  std::int64_t n = 0;
};

int run_round(const RoundArgs& args) {
  std::istringstream alloc_in(read_file(args.allocation_path));
  const stratbox::io::AllocationInput input =
      stratbox::io::read_allocation(alloc_in);

  const std::vector<std::int64_t> rounded =
      stratbox::round_preserve_sum(input.values, args.n);

  std::vector<double> lower, upper;
  std::vector<double> coefficients;
  if (!args.problem_path.empty()) {
    std::istringstream problem_in(read_file(args.problem_path));
    const stratbox::io::ProblemCsv csv =
        stratbox::io::read_problem_csv(problem_in);
    if (csv.labels.size() != input.labels.size())
      throw stratbox::Error("problem and allocation shapes differ");
    lower = csv.lower_bounds;
    upper = csv.upper_bounds;
    coefficients = csv.coefficients;
  } else if (input.has_bounds) {
    lower = input.lower_bounds;
    upper = input.upper_bounds;
  }

  json doc;
  doc["n"] = args.n;
  json rows = json::array();
  for (std::size_t i = 0; i < input.labels.size(); ++i)
    rows.push_back(json{{"label", input.labels[i]}, {"x", rounded[i]}});
  doc["strata"] = rows;
  if (!lower.empty()) {
    json warnings = json::array();
    for (std::size_t i : stratbox::bound_grazing(lower, upper, rounded))
      warnings.push_back(input.labels[i]);
    doc["warnings"] = warnings;
  }
  if (!coefficients.empty())
    doc["penalty"] =
        stratbox::rounding_penalty(coefficients, input.values, rounded);

  emit(doc.dump(2), args.output);
  return kOk;
}

struct GenerateArgs {
  int sets = 10;
  int set_size = 10000;
  int strata = 10;
  std::uint64_t seed = 1;
  std::string output = "-";
};

int run_generate(const GenerateArgs& args) {
  stratbox::PopulationConfig config;
  config.sets = args.sets;
  config.set_size = args.set_size;
  config.strata_per_set = args.strata;
  config.seed = args.seed;
  const stratbox::StrataPopulation pop = stratbox::build_population(config);
  std::ostringstream os;
  stratbox::io::write_population_csv(pop, os);
  emit(os.str(), args.output);
  return kOk;
}

struct BenchArgs {
  std::string input;
  int sets = 10;
  int set_size = 10000;
  int strata = 10;
  std::uint64_t seed = 1;
  std::string fractions = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9";
  std::string algorithms = "rnabox,bisection";
  int repeats = 3;
  double min_bound = 2.0;
  double lower_fraction = 0.0;
  bool parallel = false;
  std::string output = "-";
};

int run_bench(const BenchArgs& args) {
  stratbox::StrataPopulation pop;
  if (!args.input.empty()) {
    std::istringstream in(read_file(args.input));
    pop = stratbox::io::read_population_csv(in);
  } else {
    stratbox::PopulationConfig config;
    config.sets = args.sets;
    config.set_size = args.set_size;
    config.strata_per_set = args.strata;
    config.seed = args.seed;
    pop = stratbox::build_population(config);
  }

  stratbox::BoundsPolicy policy;
  const double floor = args.min_bound;
  const double lower_fraction = args.lower_fraction;
  policy.lower = [floor, lower_fraction](const stratbox::Stratum& s) {
    return std::max(floor, lower_fraction * static_cast<double>(s.units));
  };

  const stratbox::BenchReport report = stratbox::run_bench(
      pop, parse_fraction_list(args.fractions),
      parse_name_list(args.algorithms), args.repeats, policy, args.parallel);

  json doc;
  doc["population"] = json{{"strata", report.strata},
                           {"units", report.population_units}};
  doc["repeats"] = report.repeats;
  json rows = json::array();
  for (const stratbox::BenchRow& row : report.rows) {
    json r;
    r["algorithm"] = row.algorithm;
    r["fraction"] = row.fraction;
    r["n"] = row.sample_total;
    r["median_ns"] = row.median_ns;
    json iters = json::array();
    for (int it : row.iterations) iters.push_back(it);
    r["iterations"] = iters;
    r["take_min"] = row.take_min_count;
    r["take_neyman"] = row.take_neyman_count;
    r["take_max"] = row.take_max_count;
    r["objective"] = row.objective;
    r["status"] = row.status;
    rows.push_back(std::move(r));
  }
  doc["rows"] = rows;
  emit(doc.dump(2), args.output);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimum sample allocation under box constraints"};
  app.require_subcommand(1);

  SolveArgs solve_args;
  CLI::App* solve = app.add_subcommand("solve", "Solve an allocation problem");
  solve->add_option("input", solve_args.input, "Problem CSV")->required();
  CLI::Option* opt_n = solve->add_option("--n", solve_args.n, "Total sample size");
  CLI::Option* opt_f = solve->add_option("--fraction", solve_args.fraction,
                                         "Sample fraction of the population");
  opt_n->excludes(opt_f);
  solve->add_option("--algorithm,-a", solve_args.algorithm,
                    "rnabox|rnabox-twin|rna|lrna|naive|fpia|bisection");
  solve->add_flag("--trace", solve_args.trace, "Record per-round solver state");
  solve->add_flag("--stsi", solve_args.stsi, "Require the N,S input schema");
  solve->add_flag("--reuse-domain", solve_args.reuse_domain,
                  "Restrict inner scans to the previous take-max set");
  CLI::Option* opt_l0 =
      solve->add_option("--lambda0", solve_args.lambda0, "Starting multiplier");
  solve->add_option("--max-iter", solve_args.max_iterations,
                    "Iteration cap for fpia");
  solve->add_option("--tol", solve_args.tolerance, "Convergence tolerance");
  solve->add_option("--format", solve_args.format, "json|csv");
  solve->add_option("--output,-o", solve_args.output, "Output path ('-' stdout)");

  VerifyArgs verify_args;
  CLI::App* verify =
      app.add_subcommand("verify", "Check an allocation for optimality");
  verify->add_option("problem", verify_args.problem_path, "Problem CSV")
      ->required();
  verify->add_option("allocation", verify_args.allocation_path,
                     "Allocation document or CSV")
      ->required();
  CLI::Option* vopt_n =
      verify->add_option("--n", verify_args.n, "Total sample size override");
  verify->add_option("--tol", verify_args.tolerance, "Comparison tolerance");
  verify->add_option("--output,-o", verify_args.output, "Output path");

  RoundArgs round_args;
  CLI::App* round = app.add_subcommand("round", "Round to integers, sum kept");
  round->add_option("allocation", round_args.allocation_path,
                    "Allocation document or CSV")
      ->required();
  round->add_option("--n", round_args.n, "Integer total")->required();
  round->add_option("--problem", round_args.problem_path,
                    "Problem CSV for bound warnings and penalty");
  round->add_option("--output,-o", round_args.output, "Output path");

  GenerateArgs generate_args;
  CLI::App* generate =
      app.add_subcommand("generate", "Generate a synthetic population CSV");
  generate->add_option("--sets", generate_args.sets, "Number of value sets");
  generate->add_option("--set-size", generate_args.set_size, "Values per set");
  generate->add_option("--strata", generate_args.strata, "Strata per set");
  generate->add_option("--seed", generate_args.seed, "Generator seed");
  generate->add_option("--output,-o", generate_args.output, "Output path");

  BenchArgs bench_args;
  CLI::App* bench = app.add_subcommand("bench", "Benchmark the solvers");
  bench->add_option("--input", bench_args.input, "Population CSV");
  bench->add_option("--sets", bench_args.sets, "Number of value sets");
  bench->add_option("--set-size", bench_args.set_size, "Values per set");
  bench->add_option("--strata", bench_args.strata, "Strata per set");
  bench->add_option("--seed", bench_args.seed, "Generator seed");
  bench->add_option("--fractions", bench_args.fractions,
                    "Comma-separated sample fractions");
  bench->add_option("--algorithms", bench_args.algorithms,
                    "Comma-separated algorithm names");
  bench->add_option("--repeats", bench_args.repeats, "Timed repeats per cell");
  bench->add_option("--min-bound", bench_args.min_bound,
                    "Constant lower bound per stratum");
  bench->add_option("--lower-fraction", bench_args.lower_fraction,
                    "Lower bound as a fraction of stratum size");
  bench->add_flag("--parallel", bench_args.parallel,
                  "Run (algorithm, fraction) cells concurrently");
  bench->add_option("--output,-o", bench_args.output, "Output path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kIoError;
  }

  solve_args.has_n = opt_n->count() > 0;
  solve_args.has_fraction = opt_f->count() > 0;
  solve_args.has_lambda0 = opt_l0->count() > 0;
  verify_args.has_n = vopt_n->count() > 0;

  try {
    if (solve->parsed()) return run_solve(solve_args);
    if (verify->parsed()) return run_verify(verify_args);
    if (round->parsed()) return run_round(round_args);
    if (generate->parsed()) return run_generate(generate_args);
    if (bench->parsed()) return run_bench(bench_args);
  } catch (const stratbox::InfeasibleProblem& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInfeasible;
  } catch (const stratbox::SumMismatch& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInfeasible;
  } catch (const stratbox::PartitionCoversAll& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNoConvergence;
  } catch (const stratbox::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIoError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIoError;
  }
  return kIoError;
}
