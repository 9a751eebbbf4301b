#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "flashgen/core/types.hpp"

namespace flashgen {

// Empirical frequency of voltage bins. `total` is kept equal to the sum of
// counts; `normalized()` is the conditional PDF view.
struct Histogram {
  std::vector<std::uint64_t> counts;
  std::uint64_t total = 0;

  Histogram() : counts(kVoltageBins, 0) {}
  explicit Histogram(int bin_count) : counts(static_cast<std::size_t>(bin_count), 0) {
    if (bin_count < 1) throw std::invalid_argument("histogram needs at least one bin");
  }

  int bin_count() const { return static_cast<int>(counts.size()); }

  void add(int bin, std::uint64_t n = 1) {
    counts.at(static_cast<std::size_t>(bin)) += n;
    total += n;
  }

  void merge(const Histogram& other) {
    if (other.bin_count() != bin_count())
      throw std::invalid_argument("histogram bin grids differ");
    for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += other.counts[i];
    total += other.total;
  }

  std::vector<double> normalized() const {
    std::vector<double> p(counts.size(), 0.0);
    if (total == 0) return p;
    const double inv = 1.0 / static_cast<double>(total);
    for (std::size_t i = 0; i < counts.size(); ++i)
      p[i] = static_cast<double>(counts[i]) * inv;
    return p;
  }

  bool operator==(const Histogram&) const = default;
};

}  // namespace flashgen
