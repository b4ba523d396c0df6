#pragma once

// Flat key-value configuration files:
//   key = value        one pair per line
//   # comment          full-line or trailing
// Repeated keys accumulate into lists.

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "delayfb/errors.hpp"

namespace delayfb::config {

class KeyValues {
 public:
  void parse_line(const std::string& raw) {
    std::string line = raw;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      if (line.find_first_not_of(" \t\r\n") != std::string::npos)
        throw InvalidParameterError("config: expected 'key = value', got: " + raw);
      return;
    }
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (key.empty()) throw InvalidParameterError("config: empty key in: " + raw);
    values_[key].push_back(value);
  }

  static KeyValues from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config: " + path);
    KeyValues kv;
    std::string line;
    while (std::getline(in, line)) kv.parse_line(line);
    return kv;
  }

  static KeyValues from_string(const std::string& text) {
    KeyValues kv;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) kv.parse_line(line);
    return kv;
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string get_string(const std::string& key, const std::string& fallback = "") const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second.back();
  }

  double get_double(const std::string& key, double fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    return parse_double(key, it->second.back());
  }

  long long get_int(const std::string& key, long long fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    long long v{};
    const auto& s = it->second.back();
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size())
      throw InvalidParameterError("config: key '" + key + "' is not an integer: " + s);
    return v;
  }

  std::vector<double> get_list(const std::string& key) const {
    std::vector<double> out;
    const auto it = values_.find(key);
    if (it == values_.end()) return out;
    for (const auto& s : it->second) out.push_back(parse_double(key, s));
    return out;
  }

 private:
  static std::string trim(std::string s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    const auto b = s.find_last_not_of(" \t\r\n");
    return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
  }
  static double parse_double(const std::string& key, const std::string& s) {
    double v{};
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size())
      throw InvalidParameterError("config: key '" + key + "' is not a number: " + s);
    return v;
  }

  std::map<std::string, std::vector<std::string>> values_;
};

}  // namespace delayfb::config
