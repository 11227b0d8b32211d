#pragma once

#include <istream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "fdlab/errors.hpp"

namespace fdlab::detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

// Flat key = value file with '#' comments; duplicate and unknown keys error.
struct KvFile {
  std::map<std::string, std::string> kv;
  mutable std::set<std::string> consumed;

  bool has(const std::string& key) const { return kv.count(key) > 0; }

  std::string get_string(const std::string& key, const std::string& fallback = "",
                         bool required = false) const {
    auto it = kv.find(key);
    if (it == kv.end()) {
      if (required) throw config_error("missing required config key '" + key + "'");
      return fallback;
    }
    consumed.insert(key);
    return it->second;
  }

  double get_double(const std::string& key, double fallback, bool required = false) const {
    auto it = kv.find(key);
    if (it == kv.end()) {
      if (required) throw config_error("missing required config key '" + key + "'");
      return fallback;
    }
    consumed.insert(key);
    try {
      std::size_t pos = 0;
      const double v = std::stod(it->second, &pos);
      if (pos != it->second.size()) throw std::invalid_argument("trailing");
      return v;
    } catch (const std::exception&) {
      throw config_error("config key '" + key + "' is not a number: '" + it->second + "'");
    }
  }

  long long get_int(const std::string& key, long long fallback, bool required = false) const {
    auto it = kv.find(key);
    if (it == kv.end()) {
      if (required) throw config_error("missing required config key '" + key + "'");
      return fallback;
    }
    consumed.insert(key);
    try {
      std::size_t pos = 0;
      const long long v = std::stoll(it->second, &pos);
      if (pos != it->second.size()) throw std::invalid_argument("trailing");
      return v;
    } catch (const std::exception&) {
      throw config_error("config key '" + key + "' is not an integer: '" + it->second + "'");
    }
  }

  std::vector<double> get_double_list(const std::string& key,
                                      const std::vector<double>& fallback) const {
    auto it = kv.find(key);
    if (it == kv.end()) return fallback;
    consumed.insert(key);
    std::vector<double> out;
    std::string item;
    std::stringstream ss(it->second);
    while (std::getline(ss, item, ',')) {
      try {
        out.push_back(std::stod(trim(item)));
      } catch (const std::exception&) {
        throw config_error("config key '" + key + "' has a non-numeric entry: '" + item + "'");
      }
    }
    return out;
  }

  void reject_unknown() const {
    std::vector<std::string> unknown;
    for (const auto& [k, v] : kv)
      if (!consumed.count(k)) unknown.push_back(k);
    if (!unknown.empty()) {
      std::string msg = "unknown config keys:";
      for (const auto& k : unknown) msg += " '" + k + "'";
      throw config_error(msg);
    }
  }
};

inline KvFile read_kv(std::istream& in) {
  KvFile f;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw config_error("config line " + std::to_string(lineno) + " is not key = value: '" +
                         line + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key.empty()) throw config_error("config line " + std::to_string(lineno) + ": empty key");
    if (f.kv.count(key))
      throw config_error("duplicate config key '" + key + "' at line " + std::to_string(lineno));
    f.kv[key] = val;
  }
  return f;
}

}  // namespace fdlab::detail
