// m2c/common.hpp

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

#ifndef M2C_COMMON_HPP_
#define M2C_COMMON_HPP_

#include <cmath>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>

namespace m2c {

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

namespace detail {
template <typename... Args>
std::string concat_msg(Args&&... args) {
  std::ostringstream os;
  (os << ... << args);
  return os.str();
}
}  // namespace detail

#define M2C_CHECK(cond, ...)                                              \
  do {                                                                    \
    if (!(cond))                                                          \
      throw ::m2c::Error(::m2c::detail::concat_msg("check failed: " #cond \
                                                   ": ",                  \
                                                   __VA_ARGS__));         \
  } while (0)

// Checked mode: when enabled, tensor primitives raise on the first
// non-finite value they produce. Off by default (values propagate).
inline bool& check_finite_mode() {
  static thread_local bool enabled = false;
  return enabled;
}

inline void set_check_finite(bool enabled) { check_finite_mode() = enabled; }

struct CheckFiniteGuard {
  bool prev;
  explicit CheckFiniteGuard(bool enabled) : prev(check_finite_mode()) {
    check_finite_mode() = enabled;
  }
  ~CheckFiniteGuard() { check_finite_mode() = prev; }
};

}  // namespace m2c

#endif  // M2C_COMMON_HPP_
