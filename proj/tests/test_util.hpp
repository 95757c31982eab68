#pragma once

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "stratbox/stratbox.hpp"

namespace testutil {

/// Random feasible box problem. With `allow_boundary`, a few percent of the
/// draws land exactly on one of the two trivial totals.
inline stratbox::BoxProblem random_box_problem(std::mt19937_64& rng,
                                               std::size_t strata,
                                               bool allow_boundary = true) {
  std::uniform_real_distribution<double> coeff(0.5, 50.0);
  std::uniform_real_distribution<double> floor_dist(0.5, 5.0);
  std::uniform_real_distribution<double> width(0.5, 20.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  std::vector<double> A, lo, hi;
  for (std::size_t i = 0; i < strata; ++i) {
    A.push_back(coeff(rng));
    const double m = floor_dist(rng);
    lo.push_back(m);
    hi.push_back(m + width(rng));
  }
  double floor_sum = 0.0, cap_sum = 0.0;
  for (std::size_t i = 0; i < strata; ++i) {
    floor_sum += lo[i];
    cap_sum += hi[i];
  }

  double n;
  const double pick = unif(rng);
  if (allow_boundary && pick < 0.03) {
    n = floor_sum;
  } else if (allow_boundary && pick < 0.06) {
    n = cap_sum;
  } else {
    n = floor_sum + unif(rng) * (cap_sum - floor_sum);
    n = std::clamp(n, floor_sum, cap_sum);
  }
  return stratbox::BoxProblem(std::move(A), std::move(lo), std::move(hi), n);
}

inline std::string fixture_path(const std::string& name) {
  const char* dir = std::getenv("STRATBOX_FIXTURES");
  return (dir ? std::string(dir) : std::string("tests/fixtures")) + "/" + name;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline stratbox::BoxProblem table1_problem() {
  return stratbox::BoxProblem(
      {2700, 2000, 4200, 4400, 3200, 6000, 8400, 1900, 5400, 2000},
      {750, 450, 250, 350, 150, 550, 650, 50, 850, 950},
      {900, 500, 300, 400, 200, 600, 700, 100, 900, 1000}, 5110);
}

inline stratbox::BoxProblem table2_problem() {
  return stratbox::BoxProblem({420, 352, 2689, 308, 130},
                              {24, 15, 1344, 8, 3},
                              {420, 88, 2689, 308, 5}, 1489);
}

inline stratbox::BoxProblem table3_problem() {
  return stratbox::BoxProblem({2000, 3000}, {30, 40}, {50, 200}, 160);
}

inline stratbox::BoxProblem table6_problem() {
  return stratbox::BoxProblem({4160, 240, 530, 40}, {5, 5, 5, 5},
                              {50, 50, 50, 50}, 60);
}

inline stratbox::BoxProblem table7_problem() {
  return stratbox::BoxProblem({380, 140, 230, 1360}, {10, 10, 10, 10},
                              {50, 50, 50, 50}, 80);
}

}  // namespace testutil
