#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <memory>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "flashgen/model/model.hpp"

namespace flashgen::model {

// FLSHCKP1 checkpoint stream, little-endian, no padding:
//   magic "FLSHCKP1" | version u16 = 1
//   config: alpha f64 | beta f64 | lr f64 | epochs i32 | batch i32 |
//           pe_max u32 | seed u64 | width_scale f64 | spatial_size i32
//   step_count i64
//   params  u32 count, each: name (u16 len + bytes) | shape 4 x i32 | f32 payload
//   buffers u32 count, same record layout
//   optimizers (encoder+generator first, then discriminator), each:
//           t i64 | u32 count, each: m f64 payload | v f64 payload
inline constexpr std::array<char, 8> kCheckpointMagic = {'F', 'L', 'S', 'H', 'C', 'K', 'P', '1'};
inline constexpr std::uint16_t kCheckpointVersion = 1;

struct checkpoint_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

template <typename Int>
void put_le(std::ostream& os, Int v) {
  unsigned char buf[sizeof(Int)];
  for (std::size_t i = 0; i < sizeof(Int); ++i)
    buf[i] = static_cast<unsigned char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(buf), sizeof(Int));
}

template <typename Int>
Int get_le(std::istream& is) {
  unsigned char buf[sizeof(Int)];
  if (!is.read(reinterpret_cast<char*>(buf), sizeof(Int)))
    throw checkpoint_error("truncated checkpoint stream");
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(Int); ++i)
    v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return static_cast<Int>(v);
}

inline void put_f64(std::ostream& os, double v) { put_le(os, std::bit_cast<std::uint64_t>(v)); }
inline double get_f64(std::istream& is) { return std::bit_cast<double>(get_le<std::uint64_t>(is)); }
inline void put_f32(std::ostream& os, float v) { put_le(os, std::bit_cast<std::uint32_t>(v)); }
inline float get_f32(std::istream& is) { return std::bit_cast<float>(get_le<std::uint32_t>(is)); }

inline void put_name(std::ostream& os, const std::string& name) {
  put_le<std::uint16_t>(os, static_cast<std::uint16_t>(name.size()));
  os.write(name.data(), static_cast<std::streamsize>(name.size()));
}

inline std::string get_name(std::istream& is) {
  const auto len = get_le<std::uint16_t>(is);
  std::string name(len, '\0');
  if (!is.read(name.data(), len)) throw checkpoint_error("truncated checkpoint stream");
  return name;
}

template <typename T>
void put_tensor(std::ostream& os, const std::string& name, const nn::Tensor<T>& t) {
  put_name(os, name);
  put_le<std::int32_t>(os, t.n);
  put_le<std::int32_t>(os, t.c);
  put_le<std::int32_t>(os, t.h);
  put_le<std::int32_t>(os, t.w);
  for (const T x : t.v) put_f32(os, static_cast<float>(x));
}

template <typename T>
void get_tensor_into(std::istream& is, const std::string& expect_name, nn::Tensor<T>& t) {
  const std::string name = get_name(is);
  if (name != expect_name)
    throw checkpoint_error("checkpoint tensor order mismatch: expected '" + expect_name +
                           "', found '" + name + "'");
  const int n = get_le<std::int32_t>(is), c = get_le<std::int32_t>(is),
            h = get_le<std::int32_t>(is), w = get_le<std::int32_t>(is);
  if (n != t.n || c != t.c || h != t.h || w != t.w)
    throw checkpoint_error("checkpoint tensor shape mismatch for '" + name + "'");
  for (T& x : t.v) x = static_cast<T>(get_f32(is));
}

}  // namespace detail

template <typename T>
void serialize_checkpoint(GenerativeModel<T>& m, std::ostream& os) {
  const TrainConfig& cfg = m.config();
  os.write(kCheckpointMagic.data(), kCheckpointMagic.size());
  detail::put_le<std::uint16_t>(os, kCheckpointVersion);
  detail::put_f64(os, cfg.alpha);
  detail::put_f64(os, cfg.beta);
  detail::put_f64(os, cfg.lr);
  detail::put_le<std::int32_t>(os, cfg.epochs);
  detail::put_le<std::int32_t>(os, cfg.batch);
  detail::put_le<std::uint32_t>(os, cfg.pe_max.count);
  detail::put_le<std::uint64_t>(os, cfg.seed);
  detail::put_f64(os, cfg.width_scale);
  detail::put_le<std::int32_t>(os, m.spatial_size());
  detail::put_le<std::int64_t>(os, m.step_count());

  const auto params = m.all_params();
  detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(params.size()));
  for (const nn::Param<T>* p : params) detail::put_tensor(os, p->name, p->w);

  const auto buffers = m.buffers();
  detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(buffers.size()));
  for (const auto& [name, t] : buffers) detail::put_tensor(os, name, *t);

  for (nn::Adam<T>* opt : {&m.optimizer_eg(), &m.optimizer_d()}) {
    detail::put_le<std::int64_t>(os, opt->steps());
    detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(opt->param_count()));
    for (const auto& mv : opt->moments_m())
      for (const double x : mv) detail::put_f64(os, x);
    for (const auto& vv : opt->moments_v())
      for (const double x : vv) detail::put_f64(os, x);
  }
  if (!os) throw checkpoint_error("checkpoint write failed");
}

template <typename T>
std::unique_ptr<GenerativeModel<T>> deserialize_checkpoint(std::istream& is) {
  std::array<char, 8> magic{};
  if (!is.read(magic.data(), magic.size()) || magic != kCheckpointMagic)
    throw checkpoint_error("bad checkpoint magic");
  const auto version = detail::get_le<std::uint16_t>(is);
  if (version != kCheckpointVersion)
    throw checkpoint_error("unsupported checkpoint version " + std::to_string(version));

  TrainConfig cfg;
  cfg.alpha = detail::get_f64(is);
  cfg.beta = detail::get_f64(is);
  cfg.lr = detail::get_f64(is);
  cfg.epochs = detail::get_le<std::int32_t>(is);
  cfg.batch = detail::get_le<std::int32_t>(is);
  cfg.pe_max = PECycle(detail::get_le<std::uint32_t>(is));
  cfg.seed = detail::get_le<std::uint64_t>(is);
  cfg.width_scale = detail::get_f64(is);
  const int spatial = detail::get_le<std::int32_t>(is);
  const auto step_count = detail::get_le<std::int64_t>(is);

  auto m = std::make_unique<GenerativeModel<T>>(cfg, spatial);
  m->set_step_count(step_count);

  const auto params = m->all_params();
  const auto n_params = detail::get_le<std::uint32_t>(is);
  if (n_params != params.size())
    throw checkpoint_error("checkpoint parameter count mismatch");
  for (nn::Param<T>* p : params) detail::get_tensor_into(is, p->name, p->w);

  const auto buffers = m->buffers();
  const auto n_buffers = detail::get_le<std::uint32_t>(is);
  if (n_buffers != buffers.size()) throw checkpoint_error("checkpoint buffer count mismatch");
  for (const auto& [name, t] : buffers) detail::get_tensor_into(is, name, *t);

  for (nn::Adam<T>* opt : {&m->optimizer_eg(), &m->optimizer_d()}) {
    opt->set_steps(detail::get_le<std::int64_t>(is));
    const auto count = detail::get_le<std::uint32_t>(is);
    if (count != opt->param_count()) throw checkpoint_error("checkpoint moment count mismatch");
    for (auto& mv : opt->moments_m())
      for (double& x : mv) x = detail::get_f64(is);
    for (auto& vv : opt->moments_v())
      for (double& x : vv) x = detail::get_f64(is);
  }
  return m;
}

template <typename T>
void save_checkpoint(GenerativeModel<T>& m, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw checkpoint_error("cannot open for writing: " + path);
  serialize_checkpoint(m, os);
}

template <typename T>
std::unique_ptr<GenerativeModel<T>> load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw checkpoint_error("cannot open checkpoint: " + path);
  return deserialize_checkpoint<T>(is);
}

}  // namespace flashgen::model
