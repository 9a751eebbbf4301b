#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "flashgen/core/kv.hpp"
#include "flashgen/core/types.hpp"

namespace flashgen::cli {

struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One run's parameter bundle: the key=value config file plus command-line
// overrides, with typed accessors. Keys are tracked as they are consumed so
// unknown (misspelled) keys fail the run instead of silently using defaults.
class RunConfig {
 public:
  RunConfig() = default;
  explicit RunConfig(std::map<std::string, std::string> values) : values_(std::move(values)) {}

  static RunConfig from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config: " + path);
    return RunConfig(parse_kv(in, path));
  }

  void override_value(const std::string& key, const std::string& value) {
    values_[key] = value;
  }

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::string require(const std::string& key) {
    const auto it = values_.find(key);
    if (it == values_.end()) throw config_error("missing required config key '" + key + "'");
    consumed_.insert(key);
    return it->second;
  }

  std::string get_or(const std::string& key, const std::string& fallback) {
    const auto it = values_.find(key);
    consumed_.insert(key);
    if (it == values_.end()) {
      resolved_defaults_[key] = fallback;
      return fallback;
    }
    return it->second;
  }

  std::uint64_t require_u64(const std::string& key) { return to_u64(key, require(key)); }

  long long get_int_or(const std::string& key, long long fallback) {
    return kv_to_int(key, get_or(key, std::to_string(fallback)));
  }

  double get_double_or(const std::string& key, double fallback) {
    std::ostringstream os;
    os.precision(17);
    os << fallback;
    return kv_to_double(key, get_or(key, os.str()));
  }

  // Whitespace-separated ascending P/E stamps, e.g. "4000 7000 10000".
  std::vector<PECycle> require_stamps(const std::string& key = "stamps") {
    std::istringstream is(require(key));
    std::vector<PECycle> stamps;
    unsigned long v = 0;
    while (is >> v) stamps.emplace_back(static_cast<std::uint32_t>(v));
    if (!is.eof()) throw config_error("value of '" + key + "' is not a stamp list");
    if (stamps.empty()) throw config_error("'" + key + "' lists no stamps");
    for (std::size_t i = 1; i < stamps.size(); ++i)
      if (!(stamps[i - 1] < stamps[i]))
        throw config_error("'" + key + "' must be strictly increasing");
    return stamps;
  }

  // Fails on config keys no accessor asked for.
  void reject_unconsumed() const {
    std::string unknown;
    for (const auto& [key, value] : values_)
      if (!consumed_.count(key)) unknown += (unknown.empty() ? "" : ", ") + key;
    if (!unknown.empty()) throw config_error("unknown config keys: " + unknown);
  }

  // Full effective configuration — file values, overrides, and the defaults
  // that filled unset keys — in sorted key order for byte-stable provenance.
  std::string resolved_text() const {
    std::map<std::string, std::string> merged = resolved_defaults_;
    for (const auto& [key, value] : values_) merged[key] = value;
    std::ostringstream os;
    os << "# flashgen resolved run configuration\n";
    for (const auto& [key, value] : merged) os << key << " = " << value << "\n";
    return os.str();
  }

 private:
  static std::uint64_t to_u64(const std::string& key, const std::string& value) {
    if (value.empty() || value.find_first_not_of("0123456789") != std::string::npos)
      throw config_error("value of '" + key + "' is not an unsigned integer: '" + value + "'");
    return std::stoull(value);
  }

  std::map<std::string, std::string> values_;
  std::map<std::string, std::string> resolved_defaults_;
  std::set<std::string> consumed_;
};

}  // namespace flashgen::cli
