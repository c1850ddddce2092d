// m2c/adam.hpp

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

#ifndef M2C_ADAM_HPP_
#define M2C_ADAM_HPP_

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "m2c/checkpoint.hpp"
#include "m2c/tensor.hpp"

namespace m2c {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adaptive-moment optimizer with bias correction. Moments live per
/// parameter and round-trip through checkpoints exactly, so a reloaded
/// optimizer reproduces the next step bit for bit.
class AdamOptimizer {
 public:
  AdamOptimizer(ParamList params, AdamConfig cfg = {})
      : params_(std::move(params)), cfg_(cfg) {
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (const auto& p : params_) {
      m_.emplace_back(p.tensor.numel(), 0.0);
      v_.emplace_back(p.tensor.numel(), 0.0);
    }
  }

  const ParamList& params() const { return params_; }
  ParamList& params() { return params_; }
  std::int64_t iterations() const { return t_; }
  const AdamConfig& config() const { return cfg_; }

  void zero_grad() {
    for (auto& p : params_) p.tensor.zero_grad();
  }

  void step() {
    ++t_;
    double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
      auto& value = params_[i].tensor.value();
      const auto& grad = params_[i].tensor.grad();
      auto& m = m_[i];
      auto& v = v_[i];
      for (std::size_t k = 0; k < value.size(); ++k) {
        double g = grad[k];
        m[k] = cfg_.beta1 * m[k] + (1.0 - cfg_.beta1) * g;
        v[k] = cfg_.beta2 * v[k] + (1.0 - cfg_.beta2) * g * g;
        value[k] -= cfg_.lr * (m[k] / bc1) / (std::sqrt(v[k] / bc2) + cfg_.eps);
      }
    }
  }

  void save_state(Checkpoint& ck, const std::string& prefix) const {
    ck.put_int(prefix + "t", t_);
    for (std::size_t i = 0; i < params_.size(); ++i) {
      ck.put_values(prefix + "m." + params_[i].name, m_[i],
                    params_[i].tensor.shape());
      ck.put_values(prefix + "v." + params_[i].name, v_[i],
                    params_[i].tensor.shape());
    }
  }

  void load_state(const Checkpoint& ck, const std::string& prefix) {
    t_ = ck.get_int(prefix + "t");
    for (std::size_t i = 0; i < params_.size(); ++i) {
      m_[i] = ck.get_values(prefix + "m." + params_[i].name);
      v_[i] = ck.get_values(prefix + "v." + params_[i].name);
      M2C_CHECK(m_[i].size() == params_[i].tensor.numel() &&
                    v_[i].size() == params_[i].tensor.numel(),
                "optimizer state size mismatch for ", params_[i].name);
    }
  }

 private:
  ParamList params_;
  AdamConfig cfg_;
  std::vector<std::vector<double>> m_, v_;
  std::int64_t t_ = 0;
};

}  // namespace m2c

#endif  // M2C_ADAM_HPP_
