#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "flashgen/core/grid.hpp"
#include "flashgen/core/histogram.hpp"
#include "flashgen/core/types.hpp"

namespace flashgen {

// Conditional VL histogram over all cells with the requested program level,
// restricted to records taken at the requested stamp.
inline Histogram estimate_pdf(const std::vector<ChannelRecord>& records, ProgramLevel level,
                              PECycle pe) {
  Histogram h;
  for (const auto& rec : records) {
    if (rec.pe != pe) continue;
    if (!rec.vl.same_shape(rec.pl.rows, rec.pl.cols))
      throw std::invalid_argument("estimate_pdf: record grids differ in shape");
    for (std::size_t i = 0; i < rec.pl.size(); ++i)
      if (rec.pl.cells[i] == level) h.add(rec.vl.cells[i].bin);
  }
  return h;
}

// d_TV(p, q) = 1/2 sum |p - q| over the shared bin grid.
inline double total_variation(const Histogram& p, const Histogram& q) {
  if (p.bin_count() != q.bin_count())
    throw std::invalid_argument("total_variation: histogram bin grids differ");
  if (p.total == 0 || q.total == 0)
    throw std::invalid_argument("total_variation: empty histogram");
  // Subtract pre-rounded frequencies rather than forming the two products
  // inside one expression: fused multiply-subtract would keep one product
  // exact and leave a rounding residue even for identical histograms. This
  // also makes d = 0 coincide bitwise with normalized() equality.
  const std::vector<double> a = p.normalized();
  const std::vector<double> b = q.normalized();
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += std::abs(a[i] - b[i]);
  // Accumulated rounding can push the half-l1 sum epsilon past the
  // mathematical ceiling of 1; clamp so the range invariant holds exactly.
  return std::min(1.0, 0.5 * acc);
}

// Per-level hard-read error counts of one read against fixed thresholds.
// A level-k cell errs iff VL < V_th(k-1,k) or VL > V_th(k,k+1); comparisons
// are strict, so a read exactly on a boundary is correct.
struct LevelErrorTable {
  PECycle pe;
  std::array<std::uint64_t, kNumLevels> errors{};
  std::array<std::uint64_t, kNumLevels> cells{};

  std::uint64_t total(int lo = 1, int hi = kNumLevels - 1) const {
    std::uint64_t t = 0;
    for (int l = lo; l <= hi; ++l) t += errors[static_cast<std::size_t>(l)];
    return t;
  }

  void merge(const LevelErrorTable& other) {
    if (other.pe != pe) throw std::invalid_argument("level-error tables from different stamps");
    for (int l = 0; l < kNumLevels; ++l) {
      errors[l] += other.errors[l];
      cells[l] += other.cells[l];
    }
  }
};

inline LevelErrorTable count_level_errors(const ProgramGrid& pl, const VoltageGrid& vl,
                                          const ThresholdSet& th, PECycle pe = PECycle(0)) {
  if (!vl.same_shape(pl.rows, pl.cols))
    throw std::invalid_argument("count_level_errors: grid dimensions differ");
  th.validate();
  LevelErrorTable t;
  t.pe = pe;
  for (std::size_t i = 0; i < pl.size(); ++i) {
    const int k = pl.cells[i].value;
    const int v = vl.cells[i].bin;
    ++t.cells[k];
    const bool below = k > 0 && v < th.between(k - 1).bin;
    const bool above = k < kNumLevels - 1 && v > th.between(k).bin;
    if (below || above) ++t.errors[k];
  }
  return t;
}

// Directional neighbor-pattern tallies over erased-cell upward errors:
// interior cells with PL = 0 whose VL exceeds V_th(01). The 64 entries are
// indexed prev * 8 + next.
struct PatternFrequencyTable {
  Direction direction = Direction::BL;
  std::array<std::uint64_t, 64> counts{};
  std::uint64_t total_errors = 0;

  static int index(ProgramLevel prev, ProgramLevel next) { return prev.value * 8 + next.value; }

  double frequency(ProgramLevel prev, ProgramLevel next) const {
    if (total_errors == 0) return 0.0;
    return static_cast<double>(counts[static_cast<std::size_t>(index(prev, next))]) /
           static_cast<double>(total_errors);
  }

  std::array<double, 64> frequencies() const {
    std::array<double, 64> f{};
    if (total_errors == 0) return f;
    for (int i = 0; i < 64; ++i)
      f[i] = static_cast<double>(counts[i]) / static_cast<double>(total_errors);
    return f;
  }

  // Pattern index with the largest tally; -1 when no errors were seen.
  int argmax() const {
    if (total_errors == 0) return -1;
    return static_cast<int>(
        std::max_element(counts.begin(), counts.end()) - counts.begin());
  }

  void merge(const PatternFrequencyTable& other) {
    if (other.direction != direction)
      throw std::invalid_argument("pattern tables of different directions");
    for (int i = 0; i < 64; ++i) counts[i] += other.counts[i];
    total_errors += other.total_errors;
  }
};

// "aCb" digits of a pattern table index, e.g. index 57 -> "707".
inline std::string pattern_digits(int index) {
  return std::to_string(index / 8) + "0" + std::to_string(index % 8);
}

inline PatternFrequencyTable ici_error_frequencies(const ProgramGrid& pl, const VoltageGrid& vl,
                                                   const ThresholdSet& th, Direction direction) {
  if (!vl.same_shape(pl.rows, pl.cols))
    throw std::invalid_argument("ici_error_frequencies: grid dimensions differ");
  th.validate();
  PatternFrequencyTable t;
  t.direction = direction;
  const int v01 = th.between(0).bin;
  const int r0 = direction == Direction::BL ? 1 : 0;
  const int c0 = direction == Direction::WL ? 1 : 0;
  for (int r = r0; r < pl.rows - r0; ++r) {
    for (int c = c0; c < pl.cols - c0; ++c) {
      if (pl.at(r, c).value != 0) continue;
      if (vl.at(r, c).bin <= v01) continue;
      const NeighborPattern pat = pattern_at(pl, r, c, direction);
      ++t.counts[static_cast<std::size_t>(PatternFrequencyTable::index(pat.prev, pat.next))];
      ++t.total_errors;
    }
  }
  return t;
}

// Sum of the k largest relative frequencies.
inline double top_pattern_share(const PatternFrequencyTable& table, int k) {
  if (table.total_errors == 0) throw std::invalid_argument("top_pattern_share: empty table");
  if (k < 0) throw std::invalid_argument("top_pattern_share: negative k");
  k = std::min(k, 64);
  auto f = table.frequencies();
  std::partial_sort(f.begin(), f.begin() + k, f.end(), std::greater<double>());
  double s = 0.0;
  for (int i = 0; i < k; ++i) s += f[i];
  return s;
}

// Spearman rank correlation with average ranks on ties.
inline double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2)
    throw std::invalid_argument("spearman: need two equal-length series");
  const auto ranks = [](const std::vector<double>& v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
    std::vector<double> r(n);
    std::size_t i = 0;
    while (i < n) {
      std::size_t j = i;
      while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
      const double avg = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
      for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
      i = j + 1;
    }
    return r;
  };
  const auto ra = ranks(a);
  const auto rb = ranks(b);
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += ra[i];
    mb += rb[i];
  }
  ma /= n;
  mb /= n;
  double num = 0.0, da = 0.0, db = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (ra[i] - ma) * (rb[i] - mb);
    da += (ra[i] - ma) * (ra[i] - ma);
    db += (rb[i] - mb) * (rb[i] - mb);
  }
  if (da == 0.0 || db == 0.0) throw std::invalid_argument("spearman: constant series");
  return num / std::sqrt(da * db);
}

}  // namespace flashgen
