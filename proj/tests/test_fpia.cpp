#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "stratbox/stratbox.hpp"
#include "test_util.hpp"

using namespace stratbox;
using Catch::Approx;

TEST_CASE("multiplier allocation at published multipliers", "[fpia]") {
  const BoxProblem t7 = testutil::table7_problem();
  const std::vector<double> x7 = lambda_allocation(t7, 841.0);
  CHECK(x7[0] == Approx(13.10).margin(0.005));
  CHECK(x7[1] == 10.0);
  CHECK(x7[2] == 10.0);
  CHECK(x7[3] == Approx(46.90).margin(0.005));

  const BoxProblem t6 = testutil::table6_problem();
  const std::vector<double> x6 = lambda_allocation(t6, 8798.44);
  CHECK(x6[0] == Approx(44.35).margin(0.005));
  CHECK(x6[1] == 5.0);
  CHECK(x6[2] == Approx(5.65).margin(0.005));
  CHECK(x6[3] == 5.0);

  // Below every cap threshold the allocation saturates high.
  double cap_min = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < t6.size(); ++i) {
    const double a = t6.coefficient(i);
    cap_min = std::min(cap_min,
                       a * a / (t6.upper_bound(i) * t6.upper_bound(i)));
  }
  CHECK(lambda_allocation(t6, 0.5 * cap_min) == t6.upper_bounds());

  CHECK_THROWS_AS(lambda_allocation(t6, 0.0), NonPositiveLambda);
  CHECK_THROWS_AS(lambda_allocation(t6, -1.0), NonPositiveLambda);
}

TEST_CASE("surplus function values and monotonicity", "[fpia]") {
  const BoxProblem t7 = testutil::table7_problem();
  CHECK(lambda_surplus(t7, 841.0) == Approx(0.0).margin(1e-9));

  const BoxProblem t6 = testutil::table6_problem();
  double cap_min = std::numeric_limits<double>::infinity();
  double floor_max = 0.0;
  for (std::size_t i = 0; i < t6.size(); ++i) {
    const double a = t6.coefficient(i);
    cap_min = std::min(cap_min,
                       a * a / (t6.upper_bound(i) * t6.upper_bound(i)));
    floor_max = std::max(floor_max,
                         a * a / (t6.lower_bound(i) * t6.lower_bound(i)));
  }
  CHECK(lambda_surplus(t6, 0.5 * cap_min) == Approx(200.0 - 60.0));

  std::mt19937_64 rng(59);
  for (int rep = 0; rep < 50; ++rep) {
    const BoxProblem p = testutil::random_box_problem(rng, 6);
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double a = p.coefficient(i);
      lo = std::min(lo, a * a / (p.upper_bound(i) * p.upper_bound(i)));
      hi = std::max(hi, a * a / (p.lower_bound(i) * p.lower_bound(i)));
    }
    double previous = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 1000; ++k) {
      const double lambda =
          lo * std::pow(hi / lo, static_cast<double>(k) / 999.0);
      const double value = lambda_surplus(p, lambda);
      if (k > 0)
        CHECK(value <= previous + 1e-12 * std::max(1.0, std::abs(previous)));
      previous = value;
    }
  }
}

TEST_CASE("multiplier allocation is componentwise non-increasing", "[fpia]") {
  std::mt19937_64 rng(61);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int rep = 0; rep < 500; ++rep) {
    const BoxProblem p = testutil::random_box_problem(rng, 5);
    const double l1 = std::exp(unit(rng) * 20.0 - 10.0);
    const double l2 = l1 * (1.0 + unit(rng) * 10.0);
    const std::vector<double> x1 = lambda_allocation(p, l1);
    const std::vector<double> x2 = lambda_allocation(p, l2);
    for (std::size_t i = 0; i < p.size(); ++i) CHECK(x2[i] <= x1[i]);
  }
}

TEST_CASE("fixed-point iteration blocks on the published instance", "[fpia]") {
  const BoxProblem t6 = testutil::table6_problem();
  FpiaOptions options;
  options.lambda0 = 6861.36;
  const FpiaOutcome out = fpia_solve(t6, options);
  CHECK(out.status == FpiaStatus::Blocked);
  CHECK_FALSE(out.allocation.has_value());
  REQUIRE(out.lambda_history.size() == 1);
  CHECK(out.lambda_history[0] == 6861.36);

  // The recommended default start for this instance is inside the blocking
  // interval as well.
  const double scale =
      neyman_scale(t6, Partition(StratumSet(4), StratumSet(4)));
  CHECK(1.0 / (scale * scale) == Approx(6861.36).margin(0.005));
  const FpiaOutcome by_default = fpia_solve(t6);
  CHECK(by_default.status == FpiaStatus::Blocked);
}

TEST_CASE("fixed-point iteration oscillates on the published instance",
          "[fpia]") {
  const BoxProblem t7 = testutil::table7_problem();
  FpiaOptions options;
  options.lambda0 = 695.64;
  const FpiaOutcome out = fpia_solve(t7, options);
  CHECK(out.status == FpiaStatus::Oscillating);
  CHECK_FALSE(out.allocation.has_value());
  REQUIRE(out.lambda_history.size() >= 4);
  CHECK(out.lambda_history[1] == Approx(1444.0).margin(0.005));
  CHECK(out.lambda_history[2] == Approx(739.84).margin(0.005));
  CHECK(out.lambda_history[3] == Approx(1444.0).margin(0.005));

  // Default start is the all-free multiplier, which also oscillates here.
  const double scale =
      neyman_scale(t7, Partition(StratumSet(4), StratumSet(4)));
  CHECK(1.0 / (scale * scale) == Approx(695.64).margin(0.005));
}

TEST_CASE("fixed-point iteration and the ten-stratum instance", "[fpia]") {
  // The ten-stratum instance has narrow boxes, so each stratum's free
  // multiplier interval is a thin sliver; the recommended all-free start
  // lands outside every sliver, the partition pins all ten strata, and the
  // step is undefined right away. The map is well-defined nowhere near the
  // start even though the optimum itself is regular.
  const BoxProblem t1 = testutil::table1_problem();
  const FpiaOutcome out = fpia_solve(t1);
  CHECK(out.status == FpiaStatus::Blocked);
  const double lambda0 = out.lambda_history.at(0);
  CHECK(lambda_partition(t1, lambda0).free.empty());
}

TEST_CASE("fixed-point iteration converges and matches the recursion",
          "[fpia]") {
  const BoxProblem t2 = testutil::table2_problem();
  const FpiaOutcome out = fpia_solve(t2);
  REQUIRE(out.status == FpiaStatus::Converged);
  REQUIRE(out.allocation.has_value());
  const Allocation exact = rnabox(t2).allocation;
  for (std::size_t i = 0; i < t2.size(); ++i)
    CHECK((*out.allocation)[i] == Approx(exact.values[i]).margin(1e-9));
}

TEST_CASE("converged outcomes are feasible", "[fpia]") {
  std::mt19937_64 rng(67);
  std::uniform_int_distribution<std::size_t> size_dist(1, 10);
  int converged = 0;
  for (int rep = 0; rep < 500; ++rep) {
    const BoxProblem p = testutil::random_box_problem(rng, size_dist(rng));
    const FpiaOutcome out = fpia_solve(p);
    if (out.status != FpiaStatus::Converged) continue;
    ++converged;
    double total = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double v = (*out.allocation)[i];
      CHECK(v >= p.lower_bound(i) * (1.0 - 1e-9));
      CHECK(v <= p.upper_bound(i) * (1.0 + 1e-9));
      total += v;
    }
    CHECK(std::abs(total - p.sample_total()) <=
          1e-9 * std::max(1.0, p.sample_total()));
  }
  CHECK(converged > 100);
}

TEST_CASE("the box optimum is a fixed point of the multiplier map", "[fpia]") {
  std::mt19937_64 rng(71);
  std::uniform_int_distribution<std::size_t> size_dist(2, 10);
  int regular = 0;
  for (int rep = 0; rep < 500; ++rep) {
    const BoxProblem p = testutil::random_box_problem(rng, size_dist(rng), false);
    const Allocation alloc = rnabox(p).allocation;
    if (alloc.kind != AllocationKind::Regular) continue;
    ++regular;
    const double scale = neyman_scale(p, alloc.partition);
    REQUIRE(scale > 0.0);
    const double lambda = 1.0 / (scale * scale);
    const LambdaPartition part = lambda_partition(p, lambda);
    REQUIRE_FALSE(part.free.empty());
    const double mapped_scale =
        neyman_scale(p, Partition(part.at_lower, part.at_upper));
    const double mapped = 1.0 / (mapped_scale * mapped_scale);
    CHECK(std::abs(mapped - lambda) <= 1e-9 * lambda);
  }
  CHECK(regular > 300);
}

TEST_CASE("bisection solves the published instances", "[fpia]") {
  const BoxProblem t1 = testutil::table1_problem();
  const std::vector<double> x = bisection_solve(t1);
  const std::vector<double> expected = {750, 450, 261.08, 350, 198.92,
                                        550, 650, 100,    850, 950};
  for (std::size_t i = 0; i < expected.size(); ++i)
    CHECK(x[i] == Approx(expected[i]).margin(0.005));
}

TEST_CASE("bisection saturates on boundary totals", "[fpia]") {
  const BoxProblem p({1.0, 2.0}, {1.0, 1.0}, {3.0, 4.0}, 7.0);
  CHECK(bisection_solve(p) == p.upper_bounds());
  const BoxProblem q({1.0, 2.0}, {1.0, 1.0}, {3.0, 4.0}, 2.0);
  CHECK(bisection_solve(q) == q.lower_bounds());
}

TEST_CASE("bisection agrees with the recursion", "[fpia]") {
  std::mt19937_64 rng(73);
  std::uniform_int_distribution<std::size_t> size_dist(1, 8);
  for (int rep = 0; rep < 500; ++rep) {
    const BoxProblem p = testutil::random_box_problem(rng, size_dist(rng));
    const std::vector<double> by_bisection = bisection_solve(p);
    const Allocation exact = rnabox(p).allocation;
    for (std::size_t i = 0; i < p.size(); ++i)
      CHECK(by_bisection[i] == Approx(exact.values[i]).margin(1e-8));
  }
}
