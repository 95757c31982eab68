#pragma once

#include <cctype>
#include <cmath>
#include <cstdio>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "stratbox/allocore.hpp"
#include "stratbox/fpia.hpp"
#include "stratbox/population.hpp"
#include "stratbox/recursive.hpp"
#include "stratbox/verify.hpp"

namespace stratbox::io {

using json = nlohmann::ordered_json;

/// 17 significant digits: parses back to the identical double.
inline std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

inline double parse_double(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw Error("trailing junk");
    return v;
  } catch (const std::exception&) {
    throw Error("cannot parse " + what + " from '" + s + "'");
  }
}

}  // namespace detail

/// Raw columns of a problem CSV. Schema `stratum,A,m,M` gives the
/// coefficients directly; schema `stratum,N,S,m,M` derives them as N*S and
/// also carries the population size and the variance offset.
struct ProblemCsv {
  std::vector<std::string> labels;
  std::vector<double> coefficients;
  std::vector<double> lower_bounds;
  std::vector<double> upper_bounds;
  bool stsi = false;
  double population_units = 0.0;
  double variance_offset = 0.0;
};

inline ProblemCsv read_problem_csv(std::istream& in) {
  std::string line;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    if (detail::trim(line).empty()) continue;
    header = detail::split_csv_line(line);
    break;
  }
  ProblemCsv out;
  if (header.size() == 4 && header[0] == "stratum" && header[1] == "A" &&
      header[2] == "m" && header[3] == "M") {
    out.stsi = false;
  } else if (header.size() == 5 && header[0] == "stratum" &&
             header[1] == "N" && header[2] == "S" && header[3] == "m" &&
             header[4] == "M") {
    out.stsi = true;
  } else {
    throw Error("expected header 'stratum,A,m,M' or 'stratum,N,S,m,M'");
  }

  while (std::getline(in, line)) {
    if (detail::trim(line).empty()) continue;
    const std::vector<std::string> fields = detail::split_csv_line(line);
    if (fields.size() != header.size())
      throw Error("row has " + std::to_string(fields.size()) +
                  " fields, expected " + std::to_string(header.size()));
    out.labels.push_back(fields[0]);
    if (out.stsi) {
      const double units = detail::parse_double(fields[1], "N");
      const double sd = detail::parse_double(fields[2], "S");
      out.coefficients.push_back(units * sd);
      out.population_units += units;
      out.variance_offset += units * sd * sd;
      out.lower_bounds.push_back(detail::parse_double(fields[3], "m"));
      out.upper_bounds.push_back(detail::parse_double(fields[4], "M"));
    } else {
      out.coefficients.push_back(detail::parse_double(fields[1], "A"));
      out.lower_bounds.push_back(detail::parse_double(fields[2], "m"));
      out.upper_bounds.push_back(detail::parse_double(fields[3], "M"));
    }
  }
  if (out.labels.empty()) throw Error("problem CSV has no data rows");
  return out;
}

inline BoxProblem to_problem(const ProblemCsv& csv, double sample_total) {
  return BoxProblem(csv.labels, csv.coefficients, csv.lower_bounds,
                    csv.upper_bounds, sample_total);
}

/// An allocation read back from a solve document or a `stratum,x` CSV.
struct AllocationInput {
  std::vector<std::string> labels;
  std::vector<double> values;
  std::vector<std::string> roles;  // empty when the source had none
  std::string algorithm;           // empty when the source had none
  std::optional<double> sample_total;
  bool has_bounds = false;  // solve documents carry the box alongside
  std::vector<double> lower_bounds;
  std::vector<double> upper_bounds;
};

inline AllocationInput read_allocation(std::istream& in) {
  std::string content((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
  AllocationInput out;
  std::size_t first = content.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) throw Error("allocation file is empty");

  if (content[first] == '{') {
    json doc;
    try {
      doc = json::parse(content);
    } catch (const std::exception& e) {
      throw Error(std::string("allocation JSON does not parse: ") + e.what());
    }
    if (!doc.contains("strata") || !doc["strata"].is_array())
      throw Error("allocation document lacks a strata array");
    if (doc.contains("algorithm")) out.algorithm = doc["algorithm"];
    if (doc.contains("n")) out.sample_total = doc["n"].get<double>();
    out.has_bounds = true;
    for (const json& row : doc["strata"]) {
      out.labels.push_back(row.at("label"));
      out.values.push_back(row.at("x").get<double>());
      out.roles.push_back(row.contains("role") ? std::string(row["role"]) : "");
      if (row.contains("m") && row.contains("M")) {
        out.lower_bounds.push_back(row["m"].get<double>());
        out.upper_bounds.push_back(row["M"].get<double>());
      } else {
        out.has_bounds = false;
      }
    }
    return out;
  }

  std::stringstream ss(content);
  std::string line;
  bool saw_header = false;
  while (std::getline(ss, line)) {
    if (detail::trim(line).empty()) continue;
    const std::vector<std::string> fields = detail::split_csv_line(line);
    if (!saw_header) {
      if (fields.size() < 2 || fields[0] != "stratum" || fields[1] != "x")
        throw Error("expected allocation header 'stratum,x'");
      saw_header = true;
      continue;
    }
    if (fields.size() < 2) throw Error("allocation row needs label and value");
    out.labels.push_back(fields[0]);
    out.values.push_back(detail::parse_double(fields[1], "x"));
    out.roles.push_back(fields.size() > 2 ? fields[2] : "");
  }
  if (out.labels.empty()) throw Error("allocation file has no rows");
  return out;
}

/// Matches an allocation file against a problem and rebuilds the typed
/// allocation. Roles are honoured when present; otherwise a value exactly on
/// a bound is treated as pinned there.
inline Allocation to_allocation(const BoxProblem& p, const AllocationInput& in) {
  if (in.labels.size() != p.size())
    throw Error("allocation has " + std::to_string(in.labels.size()) +
                " strata, problem has " + std::to_string(p.size()));
  std::vector<double> x(p.size());
  StratumSet mins(p.size()), maxs(p.size());
  for (std::size_t k = 0; k < in.labels.size(); ++k) {
    const std::size_t i = p.index_of(in.labels[k]);
    x[i] = in.values[k];
    const std::string& role = in.roles.empty() ? "" : in.roles[k];
    if (role == "min") {
      mins.insert(i);
    } else if (role == "max") {
      maxs.insert(i);
    } else if (role.empty()) {
      if (x[i] == p.lower_bound(i))
        mins.insert(i);
      else if (x[i] == p.upper_bound(i))
        maxs.insert(i);
    } else if (role != "neyman") {
      throw Error("unknown role '" + role + "'");
    }
  }
  Partition part(mins, maxs);
  const AllocationKind kind =
      part.covers_all() ? AllocationKind::Vertex : AllocationKind::Regular;
  const double obj = objective_value(p, x);
  return Allocation{std::move(x), std::move(part), kind, obj};
}

inline std::string role_of(const Partition& part, std::size_t i) {
  if (part.take_min().contains(i)) return "min";
  if (part.take_max().contains(i)) return "max";
  return "neyman";
}

inline json strata_rows(const BoxProblem& p, const Partition& part,
                        const std::vector<double>& x) {
  json rows = json::array();
  for (std::size_t i = 0; i < p.size(); ++i) {
    json row;
    row["label"] = p.label(i);
    row["x"] = x[i];
    row["role"] = role_of(part, i);
    row["m"] = p.lower_bound(i);
    row["M"] = p.upper_bound(i);
    rows.push_back(std::move(row));
  }
  return rows;
}

inline json labels_of(const BoxProblem& p, const StratumSet& set) {
  json out = json::array();
  for (std::size_t i : set.items()) out.push_back(p.label(i));
  return out;
}

inline json trace_rows(const BoxProblem& p, const SolveTrace& trace) {
  json rows = json::array();
  for (const TraceIteration& it : trace.iterations) {
    json row;
    row["r"] = it.round;
    row["L"] = labels_of(p, it.take_min);
    row["U"] = labels_of(p, it.take_max);
    row["s"] = it.scale ? json(*it.scale) : json(nullptr);
    row["rna_iterations"] = it.rna_iterations;
    rows.push_back(std::move(row));
  }
  return rows;
}

inline json solve_document(const std::string& algorithm, const BoxProblem& p,
                           const Allocation& alloc,
                           const std::optional<SolveTrace>& trace,
                           std::int64_t solve_ns) {
  json doc;
  doc["algorithm"] = algorithm;
  doc["n"] = p.sample_total();
  doc["status"] = "ok";
  doc["strata"] = strata_rows(p, alloc.partition, alloc.values);
  doc["objective"] = alloc.objective;
  doc["kind"] = alloc.kind == AllocationKind::Vertex ? "vertex" : "regular";
  if (trace) doc["trace"] = trace_rows(p, *trace);
  doc["timings"] = json{{"solve_ns", solve_ns}};
  return doc;
}

inline json report_document(const BoxProblem& p, const OptimalityReport& report) {
  json doc;
  doc["optimal"] = report.is_optimal;
  doc["case"] = report.which_case == OptimalityCase::VertexCaseII
                    ? "vertex"
                    : "regular";
  json violations = json::array();
  for (const Violation& v : report.violations) {
    violations.push_back(json{{"stratum", v.label},
                              {"condition", v.condition},
                              {"lhs", v.lhs},
                              {"rhs", v.rhs}});
  }
  doc["violations"] = violations;
  if (report.multipliers) {
    json mult;
    mult["lambda"] = report.multipliers->lambda;
    json lower = json::array(), upper = json::array();
    for (std::size_t i = 0; i < p.size(); ++i) {
      lower.push_back(report.multipliers->lower[i]);
      upper.push_back(report.multipliers->upper[i]);
    }
    mult["mu_lower"] = lower;
    mult["mu_upper"] = upper;
    doc["multipliers"] = mult;
  }
  return doc;
}

/// Flat CSV view of a solve document's strata rows.
inline std::string solve_csv(const json& doc) {
  std::string out = "stratum,x,role\n";
  for (const json& row : doc.at("strata")) {
    out += std::string(row.at("label")) + "," +
           format_number(row.at("x").get<double>()) + "," +
           std::string(row.at("role")) + "\n";
  }
  return out;
}

inline void write_population_csv(const StrataPopulation& pop, std::ostream& os) {
  os << "label,N,S\n";
  for (const Stratum& s : pop.strata)
    os << s.label << "," << s.units << "," << format_number(s.std_dev) << "\n";
}

inline StrataPopulation read_population_csv(std::istream& in) {
  StrataPopulation pop;
  std::string line;
  bool saw_header = false;
  while (std::getline(in, line)) {
    if (detail::trim(line).empty()) continue;
    const std::vector<std::string> fields = detail::split_csv_line(line);
    if (!saw_header) {
      if (fields.size() != 3 || fields[0] != "label" || fields[1] != "N" ||
          fields[2] != "S")
        throw Error("expected population header 'label,N,S'");
      saw_header = true;
      continue;
    }
    if (fields.size() != 3) throw Error("population row needs 3 fields");
    pop.strata.push_back(
        Stratum{fields[0],
                static_cast<std::int64_t>(
                    detail::parse_double(fields[1], "N")),
                detail::parse_double(fields[2], "S")});
  }
  if (pop.strata.empty()) throw Error("population CSV has no rows");
  return pop;
}

}  // namespace stratbox::io
