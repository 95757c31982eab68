#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "stratbox/stratbox.hpp"
#include "test_util.hpp"

using namespace stratbox;
using Catch::Approx;

TEST_CASE("largest-remainder rounding on small vectors", "[roundalloc]") {
  const std::vector<double> x = {44.35, 5.0, 5.65, 5.0};
  CHECK(round_preserve_sum(x, 60) ==
        std::vector<std::int64_t>{44, 5, 6, 5});

  const std::vector<double> integral = {750, 450, 261, 350, 199,
                                        550, 650, 100, 850, 950};
  CHECK(round_preserve_sum(integral, 5110) ==
        std::vector<std::int64_t>{750, 450, 261, 350, 199, 550, 650, 100, 850,
                                  950});

  const std::vector<double> ties = {1.5, 1.5, 1.5, 1.5};
  CHECK(round_preserve_sum(ties, 6) == std::vector<std::int64_t>{2, 2, 1, 1});
}

TEST_CASE("rounding rejects inconsistent inputs", "[roundalloc]") {
  const std::vector<double> x = {1.25, 2.25};
  CHECK_THROWS_AS(round_preserve_sum(x, 5), SumMismatch);
  const std::vector<double> bad = {1.0, -1.0, 4.0};
  CHECK_THROWS_AS(round_preserve_sum(bad, 4), NonPositiveAllocation);
}

TEST_CASE("rounding preserves the sum and stays within one unit",
          "[roundalloc]") {
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<int> size_dist(1, 40);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int rep = 0; rep < 10000; ++rep) {
    const int n = size_dist(rng);
    std::vector<double> x(static_cast<std::size_t>(n));
    std::int64_t target = 0;
    // Draw positive reals, then shift the last entry so the sum is integral.
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      x[static_cast<std::size_t>(i)] = 0.5 + 40.0 * unit(rng);
      total += x[static_cast<std::size_t>(i)];
    }
    target = static_cast<std::int64_t>(std::ceil(total));
    x.back() += static_cast<double>(target) - total;
    if (!(x.back() > 0.0)) continue;

    const std::vector<std::int64_t> rounded = round_preserve_sum(x, target);
    std::int64_t sum = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      sum += rounded[i];
      CHECK(std::abs(static_cast<double>(rounded[i]) - x[i]) < 1.0);
    }
    CHECK(sum == target);
  }
}

TEST_CASE("rounding commutes with permutations away from ties",
          "[roundalloc]") {
  std::mt19937_64 rng(103);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int rep = 0; rep < 500; ++rep) {
    const std::size_t n = 12;
    std::vector<double> x(n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = 1.0 + 20.0 * unit(rng);
      total += x[i];
    }
    const std::int64_t target = static_cast<std::int64_t>(std::ceil(total));
    x.back() += static_cast<double>(target) - total;
    if (!(x.back() > 0.0)) continue;

    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<double> shuffled(n);
    for (std::size_t i = 0; i < n; ++i) shuffled[i] = x[perm[i]];

    const std::vector<std::int64_t> direct = round_preserve_sum(x, target);
    const std::vector<std::int64_t> via_perm =
        round_preserve_sum(shuffled, target);
    std::vector<std::int64_t> unpermuted(n);
    for (std::size_t i = 0; i < n; ++i) unpermuted[perm[i]] = via_perm[i];
    CHECK(unpermuted == direct);
  }
}

TEST_CASE("rounding penalty on published data", "[roundalloc]") {
  const std::vector<double> a = {1.0, 2.0};
  const std::vector<double> x = {3.0, 4.0};
  CHECK(rounding_penalty(a, x, x) == 1.0);

  const BoxProblem t1 = testutil::table1_problem();
  const Allocation alloc = rnabox(t1).allocation;
  const std::vector<std::int64_t> rounded =
      round_preserve_sum(alloc.values, 5110);
  const double ratio =
      rounding_penalty(t1.coefficients(), alloc.values, rounded);
  CHECK(ratio <= 1.0 + 1e-4);
  CHECK(ratio >= 1.0 - 1e-6);
}

TEST_CASE("bound grazing is reported, not repaired", "[roundalloc]") {
  const std::vector<double> lower = {2.0, 2.5};
  const std::vector<double> upper = {10.0, 4.5};
  const std::vector<std::int64_t> inside = {3, 4};
  CHECK(bound_grazing(lower, upper, inside).empty());
  const std::vector<std::int64_t> grazing = {2, 5};
  CHECK(bound_grazing(lower, upper, grazing) ==
        std::vector<std::size_t>{1});
}
