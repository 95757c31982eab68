#pragma once

#include <algorithm>
#include <cstddef>
#include <initializer_list>
#include <vector>

namespace stratbox {

/// A set of stratum positions over a fixed-size universe.
///
/// Positions follow the owning problem's label order; membership is pure
/// identity, so no ordering of strata is ever needed or implied.
class StratumSet {
 public:
  StratumSet() = default;

  explicit StratumSet(std::size_t universe) : bits_(universe, 0) {}

  static StratumSet full(std::size_t universe) {
    StratumSet s(universe);
    std::fill(s.bits_.begin(), s.bits_.end(), char(1));
    s.count_ = universe;
    return s;
  }

  static StratumSet of(std::size_t universe,
                       std::initializer_list<std::size_t> items) {
    StratumSet s(universe);
    for (std::size_t i : items) s.insert(i);
    return s;
  }

  std::size_t universe() const { return bits_.size(); }
  std::size_t size() const { return count_; }
  bool empty() const { return count_ == 0; }
  bool contains(std::size_t i) const { return bits_[i] != 0; }

  void insert(std::size_t i) {
    if (!bits_[i]) {
      bits_[i] = 1;
      ++count_;
    }
  }

  void erase(std::size_t i) {
    if (bits_[i]) {
      bits_[i] = 0;
      --count_;
    }
  }

  void insert_all(const StratumSet& other) {
    for (std::size_t i = 0; i < other.bits_.size(); ++i)
      if (other.bits_[i]) insert(i);
  }

  void erase_all(const StratumSet& other) {
    for (std::size_t i = 0; i < other.bits_.size(); ++i)
      if (other.bits_[i]) erase(i);
  }

  bool intersects(const StratumSet& other) const {
    const std::size_t n = std::min(bits_.size(), other.bits_.size());
    for (std::size_t i = 0; i < n; ++i)
      if (bits_[i] && other.bits_[i]) return true;
    return false;
  }

  /// True when every member of `other` is also a member of this set.
  bool contains_all(const StratumSet& other) const {
    if (other.bits_.size() != bits_.size()) return false;
    for (std::size_t i = 0; i < bits_.size(); ++i)
      if (other.bits_[i] && !bits_[i]) return false;
    return true;
  }

  bool operator==(const StratumSet& other) const {
    return bits_ == other.bits_;
  }

  /// Member positions in increasing order (convenience for I/O and tests).
  std::vector<std::size_t> items() const {
    std::vector<std::size_t> out;
    out.reserve(count_);
    for (std::size_t i = 0; i < bits_.size(); ++i)
      if (bits_[i]) out.push_back(i);
    return out;
  }

 private:
  std::vector<char> bits_;
  std::size_t count_ = 0;
};

}  // namespace stratbox
