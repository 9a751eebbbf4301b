#pragma once

#include <array>
#include <stdexcept>
#include <string>

#include "flashgen/core/types.hpp"

namespace flashgen {

// Bijective level <-> 3-bit-string table with the Gray property:
// consecutive levels differ in exactly one bit.
struct LevelBitMapping {
  std::array<std::string, kNumLevels> table;
};

// Default TLC mapping. Anchored at 0 <-> "111" and 7 <-> "011"; the interior
// entries complete a Gray sequence between those endpoints.
inline const LevelBitMapping& default_level_bit_mapping() {
  static const LevelBitMapping m{
      {"111", "110", "100", "101", "001", "000", "010", "011"}};
  return m;
}

inline const std::string& level_to_bits(ProgramLevel level,
                                        const LevelBitMapping& map = default_level_bit_mapping()) {
  return map.table[level.value];
}

inline ProgramLevel bits_to_level(const std::string& bits,
                                  const LevelBitMapping& map = default_level_bit_mapping()) {
  for (int l = 0; l < kNumLevels; ++l)
    if (map.table[l] == bits) return ProgramLevel(l);
  throw std::invalid_argument("bit string not present in level mapping: " + bits);
}

}  // namespace flashgen
