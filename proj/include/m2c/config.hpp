// m2c/config.hpp

// Copyright 2026  m2c authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef M2C_CONFIG_HPP_
#define M2C_CONFIG_HPP_

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "m2c/common.hpp"

namespace m2c {

/// Flat key = value configuration. Lines starting with '#' (and inline
/// '#' tails) are comments; later assignments win.
class ConfigMap {
 public:
  static ConfigMap from_file(const std::string& path) {
    std::ifstream in(path);
    M2C_CHECK(in.good(), "cannot open config file: ", path);
    ConfigMap cfg;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      std::size_t hash = line.find('#');
      if (hash != std::string::npos) line = line.substr(0, hash);
      std::string trimmed = trim(line);
      if (trimmed.empty()) continue;
      std::size_t eq = trimmed.find('=');
      M2C_CHECK(eq != std::string::npos, path, ":", lineno,
                ": expected 'key = value'");
      cfg.set(trim(trimmed.substr(0, eq)), trim(trimmed.substr(eq + 1)));
    }
    return cfg;
  }

  void set(const std::string& key, const std::string& value) {
    M2C_CHECK(!key.empty(), "empty config key");
    kv_[key] = value;
  }

  /// Applies a "key=value" override (the CLI's --set form).
  void apply_override(const std::string& assignment) {
    std::size_t eq = assignment.find('=');
    M2C_CHECK(eq != std::string::npos, "override must be key=value: ",
              assignment);
    set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
  }

  bool has(const std::string& key) const { return kv_.count(key) > 0; }

  std::string get_str(const std::string& key) const {
    auto it = kv_.find(key);
    M2C_CHECK(it != kv_.end(), "missing required config key: ", key);
    return it->second;
  }

  std::string get_str(const std::string& key, const std::string& dflt) const {
    auto it = kv_.find(key);
    return it == kv_.end() ? dflt : it->second;
  }

  std::int64_t get_int(const std::string& key) const {
    return parse_int(key, get_str(key));
  }
  std::int64_t get_int(const std::string& key, std::int64_t dflt) const {
    return has(key) ? get_int(key) : dflt;
  }

  double get_real(const std::string& key) const {
    return parse_real(key, get_str(key));
  }
  double get_real(const std::string& key, double dflt) const {
    return has(key) ? get_real(key) : dflt;
  }

  bool get_bool(const std::string& key, bool dflt) const {
    if (!has(key)) return dflt;
    std::string v = get_str(key);
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw Error(detail::concat_msg("config key '", key, "': bad boolean '",
                                   v, "'"));
  }

  std::vector<int> get_int_list(const std::string& key,
                                const std::vector<int>& dflt) const {
    if (!has(key)) return dflt;
    std::vector<int> out;
    std::stringstream ss(get_str(key));
    std::string item;
    while (std::getline(ss, item, ','))
      out.push_back(static_cast<int>(parse_int(key, trim(item))));
    M2C_CHECK(!out.empty(), "config key '", key, "': empty list");
    return out;
  }

  const std::map<std::string, std::string>& entries() const { return kv_; }

 private:
  static std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
  }

  static std::int64_t parse_int(const std::string& key,
                                const std::string& v) {
    try {
      std::size_t used = 0;
      std::int64_t x = std::stoll(v, &used);
      M2C_CHECK(used == v.size(), "trailing characters");
      return x;
    } catch (const std::exception&) {
      throw Error(detail::concat_msg("config key '", key,
                                     "': bad integer '", v, "'"));
    }
  }

  static double parse_real(const std::string& key, const std::string& v) {
    try {
      std::size_t used = 0;
      double x = std::stod(v, &used);
      M2C_CHECK(used == v.size(), "trailing characters");
      return x;
    } catch (const std::exception&) {
      throw Error(detail::concat_msg("config key '", key, "': bad number '",
                                     v, "'"));
    }
  }

  std::map<std::string, std::string> kv_;
};

}  // namespace m2c

#endif  // M2C_CONFIG_HPP_
