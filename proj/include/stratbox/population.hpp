#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace stratbox {

/// One population stratum: its unit count and the standard deviation of the
/// study variable inside it.
struct Stratum {
  std::string label;
  std::int64_t units = 0;
  double std_dev = 0.0;
};

/// A stratified population described at the stratum level only.
struct StrataPopulation {
  std::vector<Stratum> strata;

  std::int64_t total_units() const {
    std::int64_t total = 0;
    for (const Stratum& s : strata) total += s.units;
    return total;
  }
};

}  // namespace stratbox
