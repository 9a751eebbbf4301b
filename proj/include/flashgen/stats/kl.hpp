#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "flashgen/core/histogram.hpp"

namespace flashgen {

// Floor applied to discretized model masses before renormalization, so KL
// stays finite when the empirical histogram has mass outside the model's
// numeric support.
inline constexpr double kKlEpsFloor = 1e-12;

// Model density evaluated at the bin centers of the ADC grid (bin b covers
// [b - 1/2, b + 1/2), so its center is the bin index itself).
template <typename Pdf>
std::vector<double> discretize_pdf(Pdf&& pdf, int bins = kVoltageBins) {
  if (bins < 1) throw std::invalid_argument("discretize_pdf: need at least one bin");
  std::vector<double> q(static_cast<std::size_t>(bins));
  for (int b = 0; b < bins; ++b) q[static_cast<std::size_t>(b)] = pdf(static_cast<double>(b));
  return q;
}

// D_KL(p || q) = sum_b p_b ln(p_b / q_b) with q eps-floored then renormalized
// and the 0 ln 0 convention. `eps_floored`, when given, reports whether the
// floor was active on any bin carrying empirical mass.
inline double kl_divergence(const Histogram& p, const std::vector<double>& q_raw,
                            bool* eps_floored = nullptr) {
  if (static_cast<int>(q_raw.size()) != p.bin_count())
    throw std::invalid_argument("kl_divergence: bin grids differ");
  if (p.total == 0) throw std::invalid_argument("kl_divergence: empty histogram");

  bool floored = false;
  double qsum = 0.0;
  for (std::size_t i = 0; i < q_raw.size(); ++i) {
    const double q = q_raw[i];
    if (!(q >= 0.0) || !std::isfinite(q))
      throw std::invalid_argument("kl_divergence: model mass must be finite and non-negative");
    if (q < kKlEpsFloor && p.counts[i] > 0) floored = true;
    qsum += q < kKlEpsFloor ? kKlEpsFloor : q;
  }
  if (eps_floored) *eps_floored = floored;

  const double inv_total = 1.0 / static_cast<double>(p.total);
  double kl = 0.0;
  for (std::size_t i = 0; i < q_raw.size(); ++i) {
    if (p.counts[i] == 0) continue;
    const double pi = static_cast<double>(p.counts[i]) * inv_total;
    const double qi = (q_raw[i] < kKlEpsFloor ? kKlEpsFloor : q_raw[i]) / qsum;
    kl += pi * std::log(pi / qi);
  }
  return kl;
}

}  // namespace flashgen
