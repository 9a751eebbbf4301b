#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "flashgen/core/grid.hpp"
#include "flashgen/core/types.hpp"
#include "flashgen/rng/philox.hpp"
#include "flashgen/sim/normal_laplace.hpp"

namespace flashgen {

// Temporal wear of one program level: location shift and Gaussian widening
// following a power law in the normalized cycle count,
//   dmu(pe) = a_mu * (pe/pe_ref)^b_mu,  dsigma(pe) = a_sig * (pe/pe_ref)^b_sig.
struct WearLaw {
  double a_mu = 0.0;
  double b_mu = 1.0;
  double a_sig = 0.0;
  double b_sig = 1.0;
  PECycle pe_ref{10000};

  void validate() const {
    if (b_mu < 0.0 || b_sig < 0.0) throw std::invalid_argument("wear exponents must be >= 0");
    if (a_sig < 0.0) throw std::invalid_argument("sigma widening must be non-negative");
    if (pe_ref.count == 0) throw std::invalid_argument("pe_ref must be positive");
  }

  double delta_mu(PECycle pe) const {
    return a_mu * std::pow(static_cast<double>(pe.count) / pe_ref.count, b_mu);
  }
  double delta_sigma(PECycle pe) const {
    return a_sig * std::pow(static_cast<double>(pe.count) / pe_ref.count, b_sig);
  }
};

// Directional inter-cell coupling. A victim's read voltage gains
// gamma * f(aggressor level) from each programmed neighbor; bitline
// neighbors couple more strongly than wordline neighbors.
struct ICICoupling {
  double gamma_wl = 0.0;
  double gamma_bl = 0.0;

  void validate() const {
    if (gamma_wl < 0.0 || gamma_bl < 0.0) throw std::invalid_argument("couplings must be >= 0");
    if (gamma_bl < gamma_wl)
      throw std::invalid_argument("BL coupling must be at least the WL coupling");
  }

  // Monotone aggressor strength, f(L) = L / 7.
  static double aggressor(ProgramLevel l) { return static_cast<double>(l.value) / 7.0; }
  static double mean_aggressor() { return 0.5; }
};

// Full parametric description of the reference read channel.
struct ChannelParams {
  std::array<NormalLaplaceParams, kNumLevels> levels;
  std::array<WearLaw, kNumLevels> wear;
  ICICoupling coupling;

  void validate() const {
    for (const auto& p : levels) p.validate();
    for (const auto& w : wear) w.validate();
    coupling.validate();
    for (int l = 1; l < kNumLevels; ++l)
      if (!(levels[l - 1].mu < levels[l].mu))
        throw std::invalid_argument("level locations must be strictly increasing at pe = 0");
  }
};

// Baseline level params shifted and widened by the level's wear law.
inline NormalLaplaceParams level_params_at(const ChannelParams& params, ProgramLevel level,
                                           PECycle pe) {
  NormalLaplaceParams p = params.levels[level.value];
  const WearLaw& w = params.wear[level.value];
  p.mu += w.delta_mu(pe);
  p.sigma += w.delta_sigma(pe);
  return p;
}

// Per-cell i.i.d. uniform levels, a pure function of (seed, cell index).
inline ProgramGrid program_pseudorandom(std::uint64_t seed, int rows, int cols) {
  ProgramGrid grid(rows, cols);
  const rng::Philox gen(seed);
  const std::uint64_t stream = rng::stream_id(rng::StreamPurpose::program);
  for (std::size_t i = 0; i < grid.size(); ++i)
    grid.cells[i].value = static_cast<std::uint8_t>(gen.uniform_u32(stream, i) & 7u);
  return grid;
}

// Adds the directional coupling terms; neighbors outside the grid contribute
// nothing.
inline CellGrid<double> apply_ici(const CellGrid<double>& base, const ProgramGrid& pl,
                                  const ICICoupling& coupling) {
  if (base.rows != pl.rows || base.cols != pl.cols)
    throw std::invalid_argument("apply_ici: grid dimensions differ");
  CellGrid<double> out(base.rows, base.cols);
  for (int r = 0; r < base.rows; ++r) {
    for (int c = 0; c < base.cols; ++c) {
      double v = base.at(r, c);
      if (r > 0) v += coupling.gamma_bl * ICICoupling::aggressor(pl.at(r - 1, c));
      if (r < base.rows - 1) v += coupling.gamma_bl * ICICoupling::aggressor(pl.at(r + 1, c));
      if (c > 0) v += coupling.gamma_wl * ICICoupling::aggressor(pl.at(r, c - 1));
      if (c < base.cols - 1) v += coupling.gamma_wl * ICICoupling::aggressor(pl.at(r, c + 1));
      out.at(r, c) = v;
    }
  }
  return out;
}

// One full read of a programmed grid at a P/E stamp: per-cell Normal-Laplace
// draw, directional ICI, then ADC clamp and round-half-up quantization.
// Noise counters are indexed by absolute cell position, so the result is
// independent of any evaluation order.
inline VoltageGrid simulate_read(const ProgramGrid& pl, PECycle pe, const ChannelParams& params,
                                 std::uint64_t seed) {
  std::array<NormalLaplaceParams, kNumLevels> at_pe;
  for (int l = 0; l < kNumLevels; ++l) at_pe[l] = level_params_at(params, ProgramLevel(l), pe);

  const rng::Philox gen(seed);
  const std::uint64_t stream = rng::stream_id(rng::StreamPurpose::read_noise, pe.count);
  CellGrid<double> raw(pl.rows, pl.cols);
  for (std::size_t i = 0; i < pl.size(); ++i)
    raw.cells[i] = sample_normal_laplace(at_pe[pl.cells[i].value], gen, stream, i);

  const CellGrid<double> with_ici = apply_ici(raw, pl, params.coupling);

  VoltageGrid out(pl.rows, pl.cols);
  for (std::size_t i = 0; i < pl.size(); ++i) {
    double v = std::floor(with_ici.cells[i] + 0.5);
    if (v < 0.0) v = 0.0;
    if (v > kVoltageBins - 1) v = kVoltageBins - 1;
    out.cells[i].bin = static_cast<std::uint16_t>(v);
  }
  return out;
}

// Default calibration. Chosen so that, against fixed beginning-of-life
// thresholds, the level 1-7 error total at 10000 cycles is about 2.5x the
// 4000-cycle total, BL 707 is the dominant error pattern, and the most
// error-prone patterns all have a level-0 victim.
inline ChannelParams default_channel_params() {
  ChannelParams p;
  const double mus[kNumLevels] = {70, 180, 300, 420, 540, 660, 780, 900};
  const double sigmas[kNumLevels] = {13, 11, 11, 11, 11, 11, 11, 11};
  const double alphas[kNumLevels] = {0.095, 0.08, 0.08, 0.08, 0.08, 0.08, 0.08, 0.08};
  const double betas[kNumLevels] = {0.25, 0.11, 0.11, 0.11, 0.11, 0.11, 0.11, 0.11};
  for (int l = 0; l < kNumLevels; ++l) {
    p.levels[l] = {mus[l], sigmas[l], alphas[l], betas[l]};
    p.wear[l] = {19.0, 1.0, 3.5, 1.0, PECycle(10000)};
  }
  p.wear[0] = {16.0, 1.0, 3.0, 1.0, PECycle(10000)};
  p.coupling = {12.0, 18.0};
  p.validate();
  return p;
}

// Fixed default read thresholds: midpoints between the analytic
// beginning-of-life read means of adjacent levels (Normal-Laplace mean plus
// the average interior ICI shift).
inline ThresholdSet default_thresholds(const ChannelParams& params) {
  const double ici_mean =
      2.0 * (params.coupling.gamma_bl + params.coupling.gamma_wl) * ICICoupling::mean_aggressor();
  ThresholdSet th;
  for (int k = 0; k + 1 < kNumLevels; ++k) {
    const double lo = params.levels[k].mean() + ici_mean;
    const double hi = params.levels[k + 1].mean() + ici_mean;
    th.thresholds[static_cast<std::size_t>(k)] =
        VoltageLevel(static_cast<int>(std::floor((lo + hi) / 2.0 + 0.5)));
  }
  th.validate();
  return th;
}

}  // namespace flashgen
