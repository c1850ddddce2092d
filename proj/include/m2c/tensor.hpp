// m2c/tensor.hpp

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

#ifndef M2C_TENSOR_HPP_
#define M2C_TENSOR_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <numeric>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "m2c/common.hpp"
#include "m2c/rng.hpp"

namespace m2c {

class Tensor;
struct TensorData;

using Shape = std::vector<std::size_t>;

inline std::size_t shape_numel(const Shape& s) {
  std::size_t n = 1;
  for (std::size_t d : s) n *= d;
  return n;
}

inline std::string shape_str(const Shape& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

/// One node of the reverse-mode graph: a value, an optional gradient
/// accumulator, and the recipe for pushing gradients to its inputs.
struct TensorData {
  Shape shape;
  std::vector<double> value;
  bool requires_grad = false;
  std::vector<double> grad;  // sized lazily; same length as value
  const char* op = "leaf";

  // Graph edges and the backward rule. Both empty for leaves and for
  // results produced while gradient recording is off.
  std::vector<Tensor> parents;
  std::function<void(const TensorData&)> backprop;

  std::size_t numel() const { return value.size(); }

  void ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
  }
};

// Gradient recording switch. When off, ops produce detached constants.
inline bool& grad_mode() {
  static thread_local bool enabled = true;
  return enabled;
}

struct NoGradGuard {
  bool prev;
  NoGradGuard() : prev(grad_mode()) { grad_mode() = false; }
  ~NoGradGuard() { grad_mode() = prev; }
};

/// Value-semantic handle to a graph node. Copies share the node.
class Tensor {
 public:
  Tensor() = default;

  static Tensor from(std::vector<double> value, Shape shape,
                     bool requires_grad = false) {
    M2C_CHECK(shape_numel(shape) == value.size(), "shape ", shape_str(shape),
              " does not match ", value.size(), " values");
    for (std::size_t d : shape)
      M2C_CHECK(d > 0, "zero extent in shape ", shape_str(shape));
    auto d = std::make_shared<TensorData>();
    d->shape = std::move(shape);
    d->value = std::move(value);
    d->requires_grad = requires_grad;
    if (requires_grad) d->ensure_grad();
    return Tensor(std::move(d));
  }

  static Tensor full(const Shape& shape, double v, bool requires_grad = false) {
    return from(std::vector<double>(shape_numel(shape), v), shape,
                requires_grad);
  }

  static Tensor zeros(const Shape& shape, bool requires_grad = false) {
    return full(shape, 0.0, requires_grad);
  }

  static Tensor ones(const Shape& shape, bool requires_grad = false) {
    return full(shape, 1.0, requires_grad);
  }

  static Tensor scalar(double v, bool requires_grad = false) {
    return from({v}, {1}, requires_grad);
  }

  static Tensor randn(const Shape& shape, RngStream& rng, double stddev = 1.0,
                      bool requires_grad = false) {
    std::vector<double> v(shape_numel(shape));
    for (double& x : v) x = rng.normal() * stddev;
    return from(std::move(v), shape, requires_grad);
  }

  static Tensor rand_uniform(const Shape& shape, RngStream& rng, double lo,
                             double hi, bool requires_grad = false) {
    std::vector<double> v(shape_numel(shape));
    for (double& x : v) x = rng.uniform(lo, hi);
    return from(std::move(v), shape, requires_grad);
  }

  bool defined() const { return d_ != nullptr; }
  const Shape& shape() const { return node().shape; }
  std::size_t rank() const { return node().shape.size(); }
  std::size_t dim(std::size_t i) const { return node().shape.at(i); }
  std::size_t numel() const { return node().numel(); }
  bool requires_grad() const { return node().requires_grad; }
  const char* op() const { return node().op; }

  std::vector<double>& value() { return node().value; }
  const std::vector<double>& value() const { return node().value; }
  std::vector<double>& grad() {
    node().ensure_grad();
    return node().grad;
  }
  const std::vector<double>& grad() const {
    const_cast<TensorData&>(node()).ensure_grad();
    return node().grad;
  }

  double item() const {
    M2C_CHECK(numel() == 1, "item() on tensor of ", numel(), " elements");
    return node().value[0];
  }

  double at(std::size_t r, std::size_t c) const {
    M2C_CHECK(rank() == 2, "at(r,c) needs a matrix");
    M2C_CHECK(r < dim(0) && c < dim(1), "index out of range");
    return node().value[r * dim(1) + c];
  }

  void zero_grad() {
    if (node().requires_grad) {
      node().ensure_grad();
      std::fill(node().grad.begin(), node().grad.end(), 0.0);
    }
  }

  /// Constant copy sharing no graph state; never receives gradients.
  Tensor detach() const {
    return from(node().value, node().shape, false);
  }

  bool same_node(const Tensor& other) const { return d_ == other.d_; }

  TensorData& node() {
    M2C_CHECK(d_ != nullptr, "undefined tensor");
    return *d_;
  }
  const TensorData& node() const {
    M2C_CHECK(d_ != nullptr, "undefined tensor");
    return *d_;
  }
  const std::shared_ptr<TensorData>& ptr() const { return d_; }

 private:
  explicit Tensor(std::shared_ptr<TensorData> d) : d_(std::move(d)) {}
  std::shared_ptr<TensorData> d_;

  friend Tensor make_op(const char* op, Shape shape, std::vector<double> value,
                        std::vector<Tensor> parents,
                        std::function<void(const TensorData&)> backprop);
};

/// Builds a result node. Records graph edges only when gradient mode is on
/// and at least one input participates in differentiation.
inline Tensor make_op(const char* op, Shape shape, std::vector<double> value,
                      std::vector<Tensor> parents,
                      std::function<void(const TensorData&)> backprop) {
  if (check_finite_mode()) {
    for (double v : value)
      M2C_CHECK(std::isfinite(v), "non-finite value produced by op '", op,
                "'");
  }
  auto d = std::make_shared<TensorData>();
  d->shape = std::move(shape);
  d->value = std::move(value);
  d->op = op;
  bool track = grad_mode() &&
               std::any_of(parents.begin(), parents.end(),
                           [](const Tensor& p) { return p.requires_grad(); });
  if (track) {
    d->requires_grad = true;
    d->parents = std::move(parents);
    d->backprop = std::move(backprop);
  }
  return Tensor(std::move(d));
}

/// Accumulate `v` into the gradient of `t` at flat index `i`, if it takes
/// one. The handle is shallow-const: a const Tensor still names a mutable
/// graph node, which is what backward rules need.
inline void accum_grad(const Tensor& t, std::size_t i, double v) {
  auto& d = const_cast<TensorData&>(t.node());
  if (!d.requires_grad) return;
  d.ensure_grad();
  d.grad[i] += v;
}

/// Gradient buffer of `t`, created on demand (see accum_grad on constness).
inline std::vector<double>& grad_buffer(const Tensor& t) {
  auto& d = const_cast<TensorData&>(t.node());
  d.ensure_grad();
  return d.grad;
}

/// Ordered record of the differentiable nodes reaching a root, inputs first.
/// Replaying it backward visits each node exactly once.
class ComputationTape {
 public:
  static ComputationTape trace(const Tensor& root) {
    ComputationTape tape;
    tape.root_ = root;
    if (!root.requires_grad()) return tape;

    struct Frame {
      std::shared_ptr<TensorData> node;
      std::size_t next_parent = 0;
    };
    std::vector<Frame> stack;
    std::unordered_set<const TensorData*> seen;
    stack.push_back({root.ptr()});
    seen.insert(root.ptr().get());
    while (!stack.empty()) {
      Frame& f = stack.back();
      if (f.next_parent < f.node->parents.size()) {
        const Tensor& p = f.node->parents[f.next_parent++];
        if (p.requires_grad() && !seen.count(p.ptr().get())) {
          seen.insert(p.ptr().get());
          stack.push_back({p.ptr()});
        }
      } else {
        tape.nodes_.push_back(f.node);
        stack.pop_back();
      }
    }
    return tape;
  }

  std::size_t size() const { return nodes_.size(); }
  const TensorData& at(std::size_t i) const { return *nodes_.at(i); }

  /// Invariant check: every node's inputs appear before the node itself.
  bool topologically_sorted() const {
    std::unordered_set<const TensorData*> placed;
    for (const auto& n : nodes_) {
      for (const Tensor& p : n->parents) {
        if (p.requires_grad() && !placed.count(p.ptr().get())) return false;
      }
      placed.insert(n.get());
    }
    return true;
  }

  /// Seeds d(root)/d(root) = 1 and pushes gradients through the record in
  /// reverse order. Gradients accumulate additively into leaf tensors; the
  /// caller zeroes those between steps. Interior node gradients are scratch
  /// and reset on every pass.
  void backward() {
    M2C_CHECK(root_.defined(), "backward on empty tape");
    M2C_CHECK(root_.numel() == 1, "backward needs a scalar root, got ",
              shape_str(root_.shape()));
    if (nodes_.empty()) return;  // root detached from all parameters
    for (auto& n : nodes_) {
      n->ensure_grad();
      if (!n->parents.empty()) std::fill(n->grad.begin(), n->grad.end(), 0.0);
    }
    nodes_.back()->grad[0] += 1.0;
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
      if ((*it)->backprop) (*it)->backprop(**it);
    }
  }

 private:
  std::vector<std::shared_ptr<TensorData>> nodes_;
  Tensor root_;
};

/// Convenience: trace the graph below `loss` and run one backward pass.
inline void backward(const Tensor& loss) {
  M2C_CHECK(loss.numel() == 1, "backward needs a scalar loss, got ",
            shape_str(loss.shape()));
  ComputationTape::trace(loss).backward();
}

struct NamedTensor {
  std::string name;
  Tensor tensor;
};
using ParamList = std::vector<NamedTensor>;

inline void zero_grads(ParamList& params) {
  for (auto& p : params) p.tensor.zero_grad();
}

}  // namespace m2c

#endif  // M2C_TENSOR_HPP_
