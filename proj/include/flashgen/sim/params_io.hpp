#pragma once

#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "flashgen/core/kv.hpp"
#include "flashgen/sim/channel.hpp"

namespace flashgen {

inline constexpr const char* kParamsFormatTag = "flashgen-params-1";

namespace detail {

inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct KvReader {
  std::map<std::string, std::string> kv;
  std::string what;

  const std::string& raw(const std::string& key) {
    auto it = kv.find(key);
    if (it == kv.end()) throw std::runtime_error(what + ": missing key '" + key + "'");
    return it->second;
  }
  double num(const std::string& key) { return kv_to_double(key, raw(key)); }
  long long integer(const std::string& key) { return kv_to_int(key, raw(key)); }
};

}  // namespace detail

// Plain-text channel parameter file: one key per line, grouped by level.
inline void write_channel_params(std::ostream& out, const ChannelParams& p) {
  out << "# flashgen read-channel parameters\n";
  out << "format = " << kParamsFormatTag << "\n";
  out << "\n";
  for (int l = 0; l < kNumLevels; ++l) {
    const std::string k = "level." + std::to_string(l) + ".";
    out << k << "mu = " << detail::fmt_double(p.levels[l].mu) << "\n";
    out << k << "sigma = " << detail::fmt_double(p.levels[l].sigma) << "\n";
    out << k << "alpha = " << detail::fmt_double(p.levels[l].alpha) << "\n";
    out << k << "beta = " << detail::fmt_double(p.levels[l].beta_l) << "\n";
  }
  out << "\n";
  for (int l = 0; l < kNumLevels; ++l) {
    const std::string k = "wear." + std::to_string(l) + ".";
    out << k << "a_mu = " << detail::fmt_double(p.wear[l].a_mu) << "\n";
    out << k << "b_mu = " << detail::fmt_double(p.wear[l].b_mu) << "\n";
    out << k << "a_sig = " << detail::fmt_double(p.wear[l].a_sig) << "\n";
    out << k << "b_sig = " << detail::fmt_double(p.wear[l].b_sig) << "\n";
    out << k << "pe_ref = " << p.wear[l].pe_ref.count << "\n";
  }
  out << "\n";
  out << "coupling.gamma_wl = " << detail::fmt_double(p.coupling.gamma_wl) << "\n";
  out << "coupling.gamma_bl = " << detail::fmt_double(p.coupling.gamma_bl) << "\n";
}

inline ChannelParams read_channel_params(std::istream& in,
                                         const std::string& what = "channel params") {
  detail::KvReader r{parse_kv(in, what), what};
  if (r.raw("format") != kParamsFormatTag)
    throw std::runtime_error(what + ": unsupported format '" + r.raw("format") + "'");
  r.kv.erase("format");

  ChannelParams p;
  for (int l = 0; l < kNumLevels; ++l) {
    const std::string k = "level." + std::to_string(l) + ".";
    p.levels[l].mu = r.num(k + "mu");
    p.levels[l].sigma = r.num(k + "sigma");
    p.levels[l].alpha = r.num(k + "alpha");
    p.levels[l].beta_l = r.num(k + "beta");
    const std::string w = "wear." + std::to_string(l) + ".";
    p.wear[l].a_mu = r.num(w + "a_mu");
    p.wear[l].b_mu = r.num(w + "b_mu");
    p.wear[l].a_sig = r.num(w + "a_sig");
    p.wear[l].b_sig = r.num(w + "b_sig");
    const long long pe_ref = r.integer(w + "pe_ref");
    if (pe_ref <= 0 || pe_ref > 0xffffffffLL)
      throw std::runtime_error(what + ": " + w + "pe_ref out of range");
    p.wear[l].pe_ref = PECycle(static_cast<std::uint32_t>(pe_ref));
    for (const char* f : {"mu", "sigma", "alpha", "beta"}) r.kv.erase(k + f);
    for (const char* f : {"a_mu", "b_mu", "a_sig", "b_sig", "pe_ref"}) r.kv.erase(w + f);
  }
  p.coupling.gamma_wl = r.num("coupling.gamma_wl");
  p.coupling.gamma_bl = r.num("coupling.gamma_bl");
  r.kv.erase("coupling.gamma_wl");
  r.kv.erase("coupling.gamma_bl");
  if (!r.kv.empty())
    throw std::runtime_error(what + ": unknown key '" + r.kv.begin()->first + "'");

  p.validate();
  return p;
}

inline void save_channel_params(const std::string& path, const ChannelParams& p) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  write_channel_params(out, p);
  if (!out.flush()) throw std::runtime_error("write failed: " + path);
}

inline ChannelParams load_channel_params(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  return read_channel_params(in, path);
}

}  // namespace flashgen
