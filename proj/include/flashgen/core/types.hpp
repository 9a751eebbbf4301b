#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace flashgen {

// TLC geometry: 3 bits/cell, 8 program levels, 10-bit read quantization.
inline constexpr int kNumLevels = 8;
inline constexpr int kVoltageBins = 1024;
inline constexpr int kTileSize = 64;

// Intended stored level of a cell; level 0 is the erased state.
struct ProgramLevel {
  std::uint8_t value = 0;

  ProgramLevel() = default;
  explicit ProgramLevel(int v) : value(static_cast<std::uint8_t>(v)) {
    if (v < 0 || v >= kNumLevels)
      throw std::out_of_range("program level out of range: " + std::to_string(v));
  }
  bool operator==(const ProgramLevel&) const = default;
  auto operator<=>(const ProgramLevel&) const = default;
};

// Quantized soft read voltage (dimensionless ADC bin).
struct VoltageLevel {
  std::uint16_t bin = 0;

  VoltageLevel() = default;
  explicit VoltageLevel(int b) : bin(static_cast<std::uint16_t>(b)) {
    if (b < 0 || b >= kVoltageBins)
      throw std::out_of_range("voltage bin out of range: " + std::to_string(b));
  }
  bool operator==(const VoltageLevel&) const = default;
  auto operator<=>(const VoltageLevel&) const = default;
};

// Program/erase cycle count, the temporal wear variable.
struct PECycle {
  std::uint32_t count = 0;

  PECycle() = default;
  explicit PECycle(std::uint32_t c) : count(c) {}
  bool operator==(const PECycle&) const = default;
  auto operator<=>(const PECycle&) const = default;
};

// The 7 fixed hard-read boundaries V_th(01) .. V_th(67), strictly ascending.
struct ThresholdSet {
  std::array<VoltageLevel, kNumLevels - 1> thresholds;

  void validate() const {
    for (std::size_t i = 1; i < thresholds.size(); ++i)
      if (!(thresholds[i - 1].bin < thresholds[i].bin))
        throw std::invalid_argument("read thresholds must be strictly increasing");
  }

  // Boundary between level k and level k+1, k in [0, 6].
  VoltageLevel between(int k) const { return thresholds.at(static_cast<std::size_t>(k)); }
};

}  // namespace flashgen
