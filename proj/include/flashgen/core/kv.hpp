#pragma once

#include <cctype>
#include <cstdlib>
#include <istream>
#include <map>
#include <stdexcept>
#include <string>

namespace flashgen {

inline std::string trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

// Parses "key = value" lines; '#' starts a comment, blank lines are skipped.
// Duplicate keys are an error so config typos cannot silently win.
inline std::map<std::string, std::string> parse_kv(std::istream& in,
                                                   const std::string& what = "config") {
  std::map<std::string, std::string> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(what + ": line " + std::to_string(lineno) + ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw std::runtime_error(what + ": line " + std::to_string(lineno) + ": empty key");
    if (!out.emplace(key, value).second)
      throw std::runtime_error(what + ": line " + std::to_string(lineno) + ": duplicate key '" +
                               key + "'");
  }
  return out;
}

inline double kv_to_double(const std::string& key, const std::string& value) {
  char* end = nullptr;
  const double v = std::strtod(value.c_str(), &end);
  if (end == value.c_str() || *end != '\0')
    throw std::runtime_error("value of '" + key + "' is not a number: '" + value + "'");
  return v;
}

inline long long kv_to_int(const std::string& key, const std::string& value) {
  char* end = nullptr;
  const long long v = std::strtoll(value.c_str(), &end, 10);
  if (end == value.c_str() || *end != '\0')
    throw std::runtime_error("value of '" + key + "' is not an integer: '" + value + "'");
  return v;
}

}  // namespace flashgen
