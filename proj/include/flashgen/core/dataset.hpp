#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "flashgen/core/grid.hpp"

namespace flashgen {

// FLSHDS1 dataset stream, little-endian, no padding:
//   magic "FLSHDS1\0" | version u16 = 1 | rows u16 | cols u16 | record_count u32
//   per record: pe u32 | rows*cols PL bytes (u8) | rows*cols VL bins (u16)
inline constexpr std::array<char, 8> kDatasetMagic = {'F', 'L', 'S', 'H', 'D', 'S', '1', '\0'};
inline constexpr std::uint16_t kDatasetVersion = 1;

struct dataset_error : std::runtime_error {
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
    throw dataset_error("truncated dataset stream");
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(Int); ++i)
    v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return static_cast<Int>(v);
}

}  // namespace detail

inline void serialize_dataset(const std::vector<ChannelRecord>& records, std::ostream& os) {
  int rows = kTileSize, cols = kTileSize;
  if (!records.empty()) {
    rows = records.front().pl.rows;
    cols = records.front().pl.cols;
  }
  for (const auto& r : records) {
    if (!r.pl.same_shape(rows, cols) || !r.vl.same_shape(rows, cols))
      throw dataset_error("records do not share grid dimensions");
  }
  os.write(kDatasetMagic.data(), kDatasetMagic.size());
  detail::put_le<std::uint16_t>(os, kDatasetVersion);
  detail::put_le<std::uint16_t>(os, static_cast<std::uint16_t>(rows));
  detail::put_le<std::uint16_t>(os, static_cast<std::uint16_t>(cols));
  detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(records.size()));
  std::vector<unsigned char> buf;
  for (const auto& r : records) {
    detail::put_le<std::uint32_t>(os, r.pe.count);
    buf.resize(r.pl.size());
    for (std::size_t i = 0; i < r.pl.size(); ++i) buf[i] = r.pl.cells[i].value;
    os.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    buf.resize(r.vl.size() * 2);
    for (std::size_t i = 0; i < r.vl.size(); ++i) {
      buf[2 * i] = static_cast<unsigned char>(r.vl.cells[i].bin & 0xff);
      buf[2 * i + 1] = static_cast<unsigned char>(r.vl.cells[i].bin >> 8);
    }
    os.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  }
  if (!os) throw dataset_error("dataset write failed");
}

inline std::vector<ChannelRecord> deserialize_dataset(std::istream& is) {
  std::array<char, 8> magic{};
  if (!is.read(magic.data(), magic.size()) || magic != kDatasetMagic)
    throw dataset_error("bad dataset magic");
  const auto version = detail::get_le<std::uint16_t>(is);
  if (version != kDatasetVersion)
    throw dataset_error("unsupported dataset version " + std::to_string(version));
  const int rows = detail::get_le<std::uint16_t>(is);
  const int cols = detail::get_le<std::uint16_t>(is);
  const auto count = detail::get_le<std::uint32_t>(is);
  if (rows < 1 || cols < 1) throw dataset_error("invalid dataset dimensions");

  std::vector<ChannelRecord> records;
  records.reserve(count);
  const std::size_t n = static_cast<std::size_t>(rows) * cols;
  std::vector<unsigned char> buf;
  for (std::uint32_t k = 0; k < count; ++k) {
    ChannelRecord rec;
    rec.pe = PECycle(detail::get_le<std::uint32_t>(is));
    rec.pl = ProgramGrid(rows, cols);
    buf.resize(n);
    if (!is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(n)))
      throw dataset_error("truncated dataset stream");
    for (std::size_t i = 0; i < n; ++i) {
      if (buf[i] >= kNumLevels)
        throw dataset_error("program level out of range in dataset");
      rec.pl.cells[i].value = buf[i];
    }
    rec.vl = VoltageGrid(rows, cols);
    buf.resize(n * 2);
    if (!is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(2 * n)))
      throw dataset_error("truncated dataset stream");
    for (std::size_t i = 0; i < n; ++i) {
      const std::uint16_t bin =
          static_cast<std::uint16_t>(buf[2 * i] | (static_cast<std::uint16_t>(buf[2 * i + 1]) << 8));
      if (bin >= kVoltageBins) throw dataset_error("voltage bin out of range in dataset");
      rec.vl.cells[i].bin = bin;
    }
    records.push_back(std::move(rec));
  }
  return records;
}

inline void save_dataset(const std::vector<ChannelRecord>& records, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw dataset_error("cannot open for writing: " + path);
  serialize_dataset(records, os);
}

inline std::vector<ChannelRecord> load_dataset(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw dataset_error("cannot open dataset: " + path);
  return deserialize_dataset(is);
}

}  // namespace flashgen
