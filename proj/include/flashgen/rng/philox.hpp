#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace flashgen::rng {

// Philox4x32-10 counter-based generator. Every draw is addressed by
// (key, counter), so per-cell noise can be replayed in any iteration order.
// Reference: Salmon et al., "Parallel random numbers: as easy as 1, 2, 3".

using Counter = std::array<std::uint32_t, 4>;
using Key = std::array<std::uint32_t, 2>;
using Block = std::array<std::uint32_t, 4>;

namespace detail {

inline constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
inline constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
inline constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
inline constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline Counter philox_round(const Counter& c, const Key& k) {
  const std::uint64_t p0 = static_cast<std::uint64_t>(kPhiloxM0) * c[0];
  const std::uint64_t p1 = static_cast<std::uint64_t>(kPhiloxM1) * c[2];
  const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
  const auto lo0 = static_cast<std::uint32_t>(p0);
  const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
  const auto lo1 = static_cast<std::uint32_t>(p1);
  return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
}

}  // namespace detail

inline Block philox4x32(Counter counter, Key key) {
  counter = detail::philox_round(counter, key);
  for (int round = 1; round < 10; ++round) {
    key[0] += detail::kPhiloxW0;
    key[1] += detail::kPhiloxW1;
    counter = detail::philox_round(counter, key);
  }
  return counter;
}

// splitmix64 finalizer; combines a master seed with substream indices into
// an independent child seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  auto mix = [](std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(seed) ^ a) ^ b);
}

// Fixed stream ids so independent consumers of one master seed never collide.
enum class StreamPurpose : std::uint64_t {
  program = 1,
  read_noise = 2,
  weight_init = 3,
  shuffle = 4,
  train_eps = 5,
  latent_sample = 6,
};

inline std::uint64_t stream_id(StreamPurpose purpose, std::uint64_t sub = 0) {
  return (static_cast<std::uint64_t>(purpose) << 56) | (sub & 0x00FFFFFFFFFFFFFFULL);
}

// Keyed generator; blocks are pure functions of (seed, stream, index).
class Philox {
 public:
  explicit Philox(std::uint64_t seed)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

  Block block(std::uint64_t stream, std::uint64_t index) const {
    return philox4x32({static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                       static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)},
                      key_);
  }

  // Two doubles in (0, 1], 53-bit resolution.
  std::array<double, 2> uniform2(std::uint64_t stream, std::uint64_t index) const {
    const Block b = block(stream, index);
    const auto u0 = (static_cast<std::uint64_t>(b[1]) << 32) | b[0];
    const auto u1 = (static_cast<std::uint64_t>(b[3]) << 32) | b[2];
    constexpr double scale = 0x1.0p-53;
    return {static_cast<double>((u0 >> 11) + 1) * scale,
            static_cast<double>((u1 >> 11) + 1) * scale};
  }

  // Standard normal pair by Box-Muller.
  std::array<double, 2> normal2(std::uint64_t stream, std::uint64_t index) const {
    const auto [u1, u2] = uniform2(stream, index);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * 3.14159265358979323846 * u2;
    return {r * std::cos(theta), r * std::sin(theta)};
  }

  // Unit-rate exponential pair.
  std::array<double, 2> exponential2(std::uint64_t stream, std::uint64_t index) const {
    const auto [u1, u2] = uniform2(stream, index);
    return {-std::log(u1), -std::log(u2)};
  }

  std::uint32_t uniform_u32(std::uint64_t stream, std::uint64_t index) const {
    return block(stream, index)[0];
  }

 private:
  Key key_;
};

// Stateful view over one stream for sequential consumers (weight init,
// shuffles, latent draws). Order-dependent by construction.
class SequentialStream {
 public:
  SequentialStream(std::uint64_t seed, std::uint64_t stream) : gen_(seed), stream_(stream) {}

  double uniform() {
    if (pending_uniform_) {
      pending_uniform_ = false;
      return spare_uniform_;
    }
    const auto [a, b] = gen_.uniform2(stream_, index_++);
    spare_uniform_ = b;
    pending_uniform_ = true;
    return a;
  }

  double normal() {
    if (pending_normal_) {
      pending_normal_ = false;
      return spare_normal_;
    }
    const auto [a, b] = gen_.normal2(stream_, index_++);
    spare_normal_ = b;
    pending_normal_ = true;
    return a;
  }

  // Integer in [0, n) by rejection-free 64-bit scaling.
  std::uint64_t below(std::uint64_t n) {
    const auto [a, b] = gen_.uniform2(stream_, index_++);
    (void)b;
    const auto r = static_cast<std::uint64_t>(a * static_cast<double>(n));
    return r >= n ? n - 1 : r;
  }

 private:
  Philox gen_;
  std::uint64_t stream_;
  std::uint64_t index_ = 0;
  double spare_uniform_ = 0.0;
  double spare_normal_ = 0.0;
  bool pending_uniform_ = false;
  bool pending_normal_ = false;
};

}  // namespace flashgen::rng
