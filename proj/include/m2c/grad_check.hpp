// m2c/grad_check.hpp

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

#ifndef M2C_GRAD_CHECK_HPP_
#define M2C_GRAD_CHECK_HPP_

#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "m2c/ops.hpp"
#include "m2c/tensor.hpp"

namespace m2c {

/// Compares reverse-mode gradients of the scalar function `f` at `theta`
/// against central finite differences. Returns the maximum over coordinates
/// of |autodiff - central| / (|central| + eps).
///
/// `theta` is perturbed in place and restored. Rejects non-finite losses.
inline double grad_check(const std::function<Tensor(const Tensor&)>& f,
                         Tensor& theta, double eps = 1e-5) {
  M2C_CHECK(eps >= 1e-6 && eps <= 1e-3, "grad_check: eps ", eps,
            " outside [1e-6, 1e-3]");
  theta.zero_grad();
  Tensor loss = f(theta);
  M2C_CHECK(loss.numel() == 1, "grad_check: f must return a scalar");
  M2C_CHECK(std::isfinite(loss.item()), "grad_check: non-finite loss");
  backward(loss);
  std::vector<double> analytic = theta.grad();

  double worst = 0.0;
  NoGradGuard no_grad;
  auto& v = theta.value();
  for (std::size_t i = 0; i < v.size(); ++i) {
    double keep = v[i];
    v[i] = keep + eps;
    double up = f(theta).item();
    v[i] = keep - eps;
    double dn = f(theta).item();
    v[i] = keep;
    M2C_CHECK(std::isfinite(up) && std::isfinite(dn),
              "grad_check: non-finite loss during perturbation");
    double central = (up - dn) / (2.0 * eps);
    double err = std::abs(analytic[i] - central) / (std::abs(central) + eps);
    worst = std::max(worst, err);
  }
  return worst;
}

/// Finite-difference check over a set of named parameters against a loss
/// closure that reads their current values. `max_coords_per_tensor` limits
/// the probed coordinates (0 = all), using an even stride so every region
/// of a large tensor is exercised.
inline double grad_check_params(const std::function<Tensor()>& loss_fn,
                                ParamList& params, double eps = 1e-5,
                                std::size_t max_coords_per_tensor = 0,
                                std::string* worst_name = nullptr) {
  M2C_CHECK(eps >= 1e-6 && eps <= 1e-3, "grad_check_params: eps ", eps,
            " outside [1e-6, 1e-3]");
  for (auto& p : params) p.tensor.zero_grad();
  Tensor loss = loss_fn();
  M2C_CHECK(loss.numel() == 1, "grad_check_params: scalar loss required");
  M2C_CHECK(std::isfinite(loss.item()), "grad_check_params: non-finite loss");
  backward(loss);

  std::vector<std::vector<double>> analytic;
  analytic.reserve(params.size());
  for (auto& p : params) analytic.push_back(p.tensor.grad());

  double worst = 0.0;
  NoGradGuard no_grad;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    auto& v = params[pi].tensor.value();
    std::size_t n = v.size();
    std::size_t step = 1;
    if (max_coords_per_tensor > 0 && n > max_coords_per_tensor)
      step = n / max_coords_per_tensor;
    for (std::size_t i = 0; i < n; i += step) {
      double keep = v[i];
      v[i] = keep + eps;
      double up = loss_fn().item();
      v[i] = keep - eps;
      double dn = loss_fn().item();
      v[i] = keep;
      double central = (up - dn) / (2.0 * eps);
      double err =
          std::abs(analytic[pi][i] - central) / (std::abs(central) + eps);
      if (err > worst) {
        worst = err;
        if (worst_name) *worst_name = params[pi].name;
      }
    }
  }
  return worst;
}

}  // namespace m2c

#endif  // M2C_GRAD_CHECK_HPP_
