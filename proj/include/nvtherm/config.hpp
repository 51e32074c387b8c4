#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace nvtherm {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Flat key = value configuration with dotted keys. A bare [section] header
// prefixes the keys that follow it; "a.b = v" works with or without
// headers. '#' and ';' start comments.
class KeyValueConfig {
 public:
  KeyValueConfig() = default;

  static KeyValueConfig parse_text(const std::string& text) {
    KeyValueConfig cfg;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto cut = line.find_first_of("#;");
      if (cut != std::string::npos) line.erase(cut);
      line = trim(line);
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']')
          throw ConfigError("line " + std::to_string(lineno) + ": unterminated section header");
        section = trim(line.substr(1, line.size() - 2));
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
      std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      if (key.empty())
        throw ConfigError("line " + std::to_string(lineno) + ": empty key");
      // already-dotted keys are absolute even inside a section
      if (!section.empty() && key.find('.') == std::string::npos)
        key = section + "." + key;
      cfg.values_[key] = value;
    }
    return cfg;
  }

  static KeyValueConfig parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_text(buf.str());
  }

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  void set(const std::string& key, const std::string& value) { values_[key] = value; }

  std::string get_string(const std::string& key, const std::string& fallback) const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  std::string require_string(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("missing required key: " + key);
    return it->second;
  }

  double get_double(const std::string& key, double fallback) const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : to_double(key, it->second);
  }

  long long get_int(const std::string& key, long long fallback) const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : to_int(key, it->second);
  }

  bool get_bool(const std::string& key, bool fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    std::string v = it->second;
    std::transform(v.begin(), v.end(), v.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (v == "true" || v == "yes" || v == "on" || v == "1") return true;
    if (v == "false" || v == "no" || v == "off" || v == "0") return false;
    throw ConfigError(key + ": not a boolean: " + it->second);
  }

  // whitespace- or comma-separated list of numbers
  std::vector<double> get_double_list(const std::string& key,
                                      const std::vector<double>& fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    std::string v = it->second;
    std::replace(v.begin(), v.end(), ',', ' ');
    std::istringstream in(v);
    std::vector<double> out;
    std::string tok;
    while (in >> tok) out.push_back(to_double(key, tok));
    if (out.empty()) throw ConfigError(key + ": empty list");
    return out;
  }

  const std::map<std::string, std::string>& items() const { return values_; }

  // keys actually present under a dotted prefix, for unknown-key reporting
  std::vector<std::string> keys_with_prefix(const std::string& prefix) const {
    std::vector<std::string> out;
    for (const auto& [k, v] : values_)
      if (k.rfind(prefix, 0) == 0) out.push_back(k);
    return out;
  }

  // FNV-1a over the sorted canonical key=value listing; stable across key
  // order and formatting differences in the source file. output_dir is
  // excluded: where a run lands must not change what it computes.
  std::uint64_t digest() const {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&](const std::string& s) {
      for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
      }
    };
    for (const auto& [k, v] : values_) {
      if (k == "output_dir") continue;
      mix(k);
      mix("=");
      mix(v);
      mix("\n");
    }
    return h;
  }

  std::string digest_hex() const {
    std::ostringstream out;
    out << std::hex << digest();
    return out.str();
  }

 private:
  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
  }

  static double to_double(const std::string& key, const std::string& v) {
    try {
      std::size_t pos = 0;
      const double x = std::stod(v, &pos);
      if (pos != v.size()) throw std::invalid_argument("trailing characters");
      return x;
    } catch (const std::exception&) {
      throw ConfigError(key + ": not a number: " + v);
    }
  }

  static long long to_int(const std::string& key, const std::string& v) {
    try {
      std::size_t pos = 0;
      const long long x = std::stoll(v, &pos);
      if (pos != v.size()) throw std::invalid_argument("trailing characters");
      return x;
    } catch (const std::exception&) {
      throw ConfigError(key + ": not an integer: " + v);
    }
  }

  std::map<std::string, std::string> values_;
};

}  // namespace nvtherm
