// m2c/ops.hpp

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

#ifndef M2C_OPS_HPP_
#define M2C_OPS_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "m2c/tensor.hpp"

namespace m2c {

namespace detail {

inline void check_same_shape(const Tensor& a, const Tensor& b,
                             const char* op) {
  M2C_CHECK(a.shape() == b.shape(), op, ": shape mismatch ",
            shape_str(a.shape()), " vs ", shape_str(b.shape()));
}

// Rows/cols of a tensor viewed as a matrix; rank-1 counts as a single row.
inline std::pair<std::size_t, std::size_t> as_matrix(const Tensor& t) {
  if (t.rank() == 1) return {1, t.dim(0)};
  M2C_CHECK(t.rank() == 2, "expected matrix or vector, got rank ", t.rank());
  return {t.dim(0), t.dim(1)};
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Elementwise arithmetic
// ---------------------------------------------------------------------------

inline Tensor add(const Tensor& a, const Tensor& b) {
  detail::check_same_shape(a, b, "add");
  std::vector<double> out(a.numel());
  const auto& av = a.value();
  const auto& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
  return make_op("add", a.shape(), std::move(out), {a, b},
                 [a, b](const TensorData& self) mutable {
                   for (std::size_t i = 0; i < self.grad.size(); ++i) {
                     accum_grad(a, i, self.grad[i]);
                     accum_grad(b, i, self.grad[i]);
                   }
                 });
}

inline Tensor sub(const Tensor& a, const Tensor& b) {
  detail::check_same_shape(a, b, "sub");
  std::vector<double> out(a.numel());
  const auto& av = a.value();
  const auto& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i];
  return make_op("sub", a.shape(), std::move(out), {a, b},
                 [a, b](const TensorData& self) mutable {
                   for (std::size_t i = 0; i < self.grad.size(); ++i) {
                     accum_grad(a, i, self.grad[i]);
                     accum_grad(b, i, -self.grad[i]);
                   }
                 });
}

inline Tensor mul(const Tensor& a, const Tensor& b) {
  detail::check_same_shape(a, b, "mul");
  std::vector<double> out(a.numel());
  const auto& av = a.value();
  const auto& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  return make_op("mul", a.shape(), std::move(out), {a, b},
                 [a, b](const TensorData& self) mutable {
                   const auto& av = a.value();
                   const auto& bv = b.value();
                   for (std::size_t i = 0; i < self.grad.size(); ++i) {
                     accum_grad(a, i, self.grad[i] * bv[i]);
                     accum_grad(b, i, self.grad[i] * av[i]);
                   }
                 });
}

inline Tensor neg(const Tensor& a) {
  std::vector<double> out(a.numel());
  const auto& av = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = -av[i];
  return make_op("neg", a.shape(), std::move(out), {a},
                 [a](const TensorData& self) mutable {
                   for (std::size_t i = 0; i < self.grad.size(); ++i)
                     accum_grad(a, i, -self.grad[i]);
                 });
}

inline Tensor scale(const Tensor& a, double c) {
  std::vector<double> out(a.numel());
  const auto& av = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = c * av[i];
  return make_op("scale", a.shape(), std::move(out), {a},
                 [a, c](const TensorData& self) mutable {
                   for (std::size_t i = 0; i < self.grad.size(); ++i)
                     accum_grad(a, i, c * self.grad[i]);
                 });
}

inline Tensor add_scalar(const Tensor& a, double c) {
  std::vector<double> out(a.numel());
  const auto& av = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + c;
  return make_op("add_scalar", a.shape(), std::move(out), {a},
                 [a](const TensorData& self) mutable {
                   for (std::size_t i = 0; i < self.grad.size(); ++i)
                     accum_grad(a, i, self.grad[i]);
                 });
}

/// m [R x C] + b [C], broadcast over rows.
inline Tensor add_bias(const Tensor& m, const Tensor& b) {
  auto [rows, cols] = detail::as_matrix(m);
  M2C_CHECK(b.rank() == 1 && b.dim(0) == cols, "add_bias: bias ",
            shape_str(b.shape()), " does not match ", shape_str(m.shape()));
  std::vector<double> out(m.numel());
  const auto& mv = m.value();
  const auto& bv = b.value();
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c)
      out[r * cols + c] = mv[r * cols + c] + bv[c];
  return make_op("add_bias", m.shape(), std::move(out), {m, b},
                 [m, b, rows, cols](const TensorData& self) mutable {
                   for (std::size_t r = 0; r < rows; ++r)
                     for (std::size_t c = 0; c < cols; ++c) {
                       double g = self.grad[r * cols + c];
                       accum_grad(m, r * cols + c, g);
                       accum_grad(b, c, g);
                     }
                 });
}

/// t * s where s is a scalar tensor; both sides receive gradients.
inline Tensor scale_by(const Tensor& t, const Tensor& s) {
  M2C_CHECK(s.numel() == 1, "scale_by: scale must be scalar");
  double sv = s.value()[0];
  std::vector<double> out(t.numel());
  const auto& tv = t.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = tv[i] * sv;
  return make_op("scale_by", t.shape(), std::move(out), {t, s},
                 [t, s, sv](const TensorData& self) mutable {
                   const auto& tv = t.value();
                   double gs = 0.0;
                   for (std::size_t i = 0; i < self.grad.size(); ++i) {
                     accum_grad(t, i, self.grad[i] * sv);
                     gs += self.grad[i] * tv[i];
                   }
                   accum_grad(s, 0, gs);
                 });
}

inline Tensor reciprocal(const Tensor& s) {
  M2C_CHECK(s.numel() == 1, "reciprocal: scalar only");
  double sv = s.value()[0];
  return make_op("reciprocal", s.shape(), {1.0 / sv}, {s},
                 [s, sv](const TensorData& self) mutable {
                   accum_grad(s, 0, -self.grad[0] / (sv * sv));
                 });
}

// ---------------------------------------------------------------------------
// Nonlinearities
// ---------------------------------------------------------------------------

inline Tensor sigmoid(const Tensor& a) {
  std::vector<double> out(a.numel());
  const auto& av = a.value();
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = 1.0 / (1.0 + std::exp(-av[i]));
  return make_op("sigmoid", a.shape(), std::move(out), {a},
                 [a](const TensorData& self) mutable {
                   for (std::size_t i = 0; i < self.grad.size(); ++i) {
                     double y = self.value[i];
                     accum_grad(a, i, self.grad[i] * y * (1.0 - y));
                   }
                 });
}

inline Tensor tanh(const Tensor& a) {
  std::vector<double> out(a.numel());
  const auto& av = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(av[i]);
  return make_op("tanh", a.shape(), std::move(out), {a},
                 [a](const TensorData& self) mutable {
                   for (std::size_t i = 0; i < self.grad.size(); ++i) {
                     double y = self.value[i];
                     accum_grad(a, i, self.grad[i] * (1.0 - y * y));
                   }
                 });
}

inline Tensor relu(const Tensor& a) {
  std::vector<double> out(a.numel());
  const auto& av = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] > 0 ? av[i] : 0;
  return make_op("relu", a.shape(), std::move(out), {a},
                 [a](const TensorData& self) mutable {
                   const auto& av = a.value();
                   for (std::size_t i = 0; i < self.grad.size(); ++i)
                     if (av[i] > 0) accum_grad(a, i, self.grad[i]);
                 });
}

inline Tensor log(const Tensor& a) {
  std::vector<double> out(a.numel());
  const auto& av = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::log(av[i]);
  return make_op("log", a.shape(), std::move(out), {a},
                 [a](const TensorData& self) mutable {
                   const auto& av = a.value();
                   for (std::size_t i = 0; i < self.grad.size(); ++i)
                     accum_grad(a, i, self.grad[i] / av[i]);
                 });
}

/// log(max(x, eps)); gradient is zero where the clamp is active.
inline Tensor log_eps(const Tensor& a, double eps) {
  M2C_CHECK(eps > 0, "log_eps: eps must be positive");
  std::vector<double> out(a.numel());
  const auto& av = a.value();
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = std::log(std::max(av[i], eps));
  return make_op("log_eps", a.shape(), std::move(out), {a},
                 [a, eps](const TensorData& self) mutable {
                   const auto& av = a.value();
                   for (std::size_t i = 0; i < self.grad.size(); ++i)
                     if (av[i] > eps) accum_grad(a, i, self.grad[i] / av[i]);
                 });
}

// ---------------------------------------------------------------------------
// Linear algebra
// ---------------------------------------------------------------------------

inline Tensor matmul(const Tensor& a, const Tensor& b) {
  M2C_CHECK(a.rank() == 2 && b.rank() == 2, "matmul: matrices required");
  std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  M2C_CHECK(b.dim(0) == k, "matmul: inner dims ", shape_str(a.shape()), " x ",
            shape_str(b.shape()));
  std::vector<double> out(m * n, 0.0);
  const double* av = a.value().data();
  const double* bv = b.value().data();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t p = 0; p < k; ++p) {
      double x = av[i * k + p];
      const double* brow = bv + p * n;
      double* orow = out.data() + i * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += x * brow[j];
    }
  return make_op(
      "matmul", {m, n}, std::move(out), {a, b},
      [a, b, m, k, n](const TensorData& self) mutable {
        const double* g = self.grad.data();
        const double* av = a.value().data();
        const double* bv = b.value().data();
        if (a.requires_grad()) {
          auto& ag = grad_buffer(a);
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t p = 0; p < k; ++p) {
              double s = 0.0;
              const double* brow = bv + p * n;
              const double* grow = g + i * n;
              for (std::size_t j = 0; j < n; ++j) s += grow[j] * brow[j];
              ag[i * k + p] += s;
            }
        }
        if (b.requires_grad()) {
          auto& bg = grad_buffer(b);
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t p = 0; p < k; ++p) {
              double x = av[i * k + p];
              double* brow = bg.data() + p * n;
              const double* grow = g + i * n;
              for (std::size_t j = 0; j < n; ++j) brow[j] += x * grow[j];
            }
        }
      });
}

/// v [K] times m [K x N] -> [N].
inline Tensor vecmat(const Tensor& v, const Tensor& m) {
  M2C_CHECK(v.rank() == 1 && m.rank() == 2 && m.dim(0) == v.dim(0),
            "vecmat: ", shape_str(v.shape()), " x ", shape_str(m.shape()));
  std::size_t k = v.dim(0), n = m.dim(1);
  std::vector<double> out(n, 0.0);
  const auto& vv = v.value();
  const auto& mv = m.value();
  for (std::size_t p = 0; p < k; ++p) {
    double x = vv[p];
    const double* mrow = mv.data() + p * n;
    for (std::size_t j = 0; j < n; ++j) out[j] += x * mrow[j];
  }
  return make_op("vecmat", {n}, std::move(out), {v, m},
                 [v, m, k, n](const TensorData& self) mutable {
                   const auto& vv = v.value();
                   const auto& mv = m.value();
                   const double* g = self.grad.data();
                   if (v.requires_grad()) {
                     auto& vg = grad_buffer(v);
                     for (std::size_t p = 0; p < k; ++p) {
                       double s = 0.0;
                       const double* mrow = mv.data() + p * n;
                       for (std::size_t j = 0; j < n; ++j) s += g[j] * mrow[j];
                       vg[p] += s;
                     }
                   }
                   if (m.requires_grad()) {
                     auto& mg = grad_buffer(m);
                     for (std::size_t p = 0; p < k; ++p) {
                       double x = vv[p];
                       double* mrow = mg.data() + p * n;
                       for (std::size_t j = 0; j < n; ++j) mrow[j] += x * g[j];
                     }
                   }
                 });
}

inline Tensor transpose(const Tensor& a) {
  M2C_CHECK(a.rank() == 2, "transpose: matrix required");
  std::size_t r = a.dim(0), c = a.dim(1);
  std::vector<double> out(a.numel());
  const auto& av = a.value();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = av[i * c + j];
  return make_op("transpose", {c, r}, std::move(out), {a},
                 [a, r, c](const TensorData& self) mutable {
                   for (std::size_t i = 0; i < r; ++i)
                     for (std::size_t j = 0; j < c; ++j)
                       accum_grad(a, i * c + j, self.grad[j * r + i]);
                 });
}

// ---------------------------------------------------------------------------
// Softmax family
// ---------------------------------------------------------------------------

/// Row-wise softmax with max-subtraction. Rank-1 input is one row.
inline Tensor softmax_rows(const Tensor& t) {
  auto [rows, cols] = detail::as_matrix(t);
  M2C_CHECK(cols > 0, "softmax_rows: empty rows");
  std::vector<double> out(t.numel());
  const auto& tv = t.value();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* x = tv.data() + r * cols;
    double* y = out.data() + r * cols;
    double mx = x[0];
    for (std::size_t c = 1; c < cols; ++c) mx = std::max(mx, x[c]);
    double sum = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      y[c] = std::exp(x[c] - mx);
      sum += y[c];
    }
    for (std::size_t c = 0; c < cols; ++c) y[c] /= sum;
  }
  return make_op("softmax_rows", t.shape(), std::move(out), {t},
                 [t, rows, cols](const TensorData& self) mutable {
                   for (std::size_t r = 0; r < rows; ++r) {
                     const double* y = self.value.data() + r * cols;
                     const double* g = self.grad.data() + r * cols;
                     double dot = 0.0;
                     for (std::size_t c = 0; c < cols; ++c) dot += g[c] * y[c];
                     for (std::size_t c = 0; c < cols; ++c)
                       accum_grad(t, r * cols + c, y[c] * (g[c] - dot));
                   }
                 });
}

inline Tensor log_softmax_rows(const Tensor& t) {
  auto [rows, cols] = detail::as_matrix(t);
  std::vector<double> out(t.numel());
  const auto& tv = t.value();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* x = tv.data() + r * cols;
    double* y = out.data() + r * cols;
    double mx = x[0];
    for (std::size_t c = 1; c < cols; ++c) mx = std::max(mx, x[c]);
    double sum = 0.0;
    for (std::size_t c = 0; c < cols; ++c) sum += std::exp(x[c] - mx);
    double lse = mx + std::log(sum);
    for (std::size_t c = 0; c < cols; ++c) y[c] = x[c] - lse;
  }
  return make_op("log_softmax_rows", t.shape(), std::move(out), {t},
                 [t, rows, cols](const TensorData& self) mutable {
                   for (std::size_t r = 0; r < rows; ++r) {
                     const double* y = self.value.data() + r * cols;
                     const double* g = self.grad.data() + r * cols;
                     double gsum = 0.0;
                     for (std::size_t c = 0; c < cols; ++c) gsum += g[c];
                     for (std::size_t c = 0; c < cols; ++c)
                       accum_grad(t, r * cols + c,
                                  g[c] - std::exp(y[c]) * gsum);
                   }
                 });
}

/// Sum over rows of -log softmax(row)[id]. The softmax+cross-entropy
/// gradient collapses to (p - onehot).
inline Tensor cross_entropy_with_logits(const Tensor& logits,
                                        const std::vector<int>& ids) {
  auto [rows, cols] = detail::as_matrix(logits);
  M2C_CHECK(ids.size() == rows, "cross_entropy: ", ids.size(), " targets for ",
            rows, " rows");
  const auto& lv = logits.value();
  double total = 0.0;
  std::vector<double> probs(rows * cols);
  for (std::size_t r = 0; r < rows; ++r) {
    int id = ids[r];
    M2C_CHECK(id >= 0 && static_cast<std::size_t>(id) < cols,
              "cross_entropy: target ", id, " out of range [0,", cols, ")");
    const double* x = lv.data() + r * cols;
    double* p = probs.data() + r * cols;
    double mx = x[0];
    for (std::size_t c = 1; c < cols; ++c) mx = std::max(mx, x[c]);
    double sum = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      p[c] = std::exp(x[c] - mx);
      sum += p[c];
    }
    for (std::size_t c = 0; c < cols; ++c) p[c] /= sum;
    total += mx + std::log(sum) - x[id];
  }
  return make_op(
      "cross_entropy_with_logits", {1}, {total}, {logits},
      [logits, ids, rows, cols, probs = std::move(probs)](
          const TensorData& self) mutable {
        double g = self.grad[0];
        for (std::size_t r = 0; r < rows; ++r) {
          const double* p = probs.data() + r * cols;
          for (std::size_t c = 0; c < cols; ++c) {
            double delta = (static_cast<std::size_t>(ids[r]) == c) ? 1.0 : 0.0;
            accum_grad(logits, r * cols + c, g * (p[c] - delta));
          }
        }
      });
}

// ---------------------------------------------------------------------------
// Reductions
// ---------------------------------------------------------------------------

inline Tensor sum_all(const Tensor& t) {
  double s = 0.0;
  for (double v : t.value()) s += v;
  return make_op("sum_all", {1}, {s}, {t},
                 [t](const TensorData& self) mutable {
                   double g = self.grad[0];
                   for (std::size_t i = 0; i < t.numel(); ++i)
                     accum_grad(t, i, g);
                 });
}

inline Tensor mean_all(const Tensor& t) {
  double s = 0.0;
  for (double v : t.value()) s += v;
  double n = static_cast<double>(t.numel());
  return make_op("mean_all", {1}, {s / n}, {t},
                 [t, n](const TensorData& self) mutable {
                   double g = self.grad[0] / n;
                   for (std::size_t i = 0; i < t.numel(); ++i)
                     accum_grad(t, i, g);
                 });
}

/// Column-wise max over rows (max-over-time pooling). Ties resolve to the
/// earliest row, which keeps backward deterministic.
inline Tensor max_over_rows(const Tensor& t) {
  M2C_CHECK(t.rank() == 2, "max_over_rows: matrix required");
  std::size_t rows = t.dim(0), cols = t.dim(1);
  std::vector<double> out(cols);
  std::vector<std::size_t> argmax(cols, 0);
  const auto& tv = t.value();
  for (std::size_t c = 0; c < cols; ++c) {
    double best = tv[c];
    std::size_t bi = 0;
    for (std::size_t r = 1; r < rows; ++r) {
      if (tv[r * cols + c] > best) {
        best = tv[r * cols + c];
        bi = r;
      }
    }
    out[c] = best;
    argmax[c] = bi;
  }
  return make_op("max_over_rows", {cols}, std::move(out), {t},
                 [t, cols, argmax = std::move(argmax)](
                     const TensorData& self) mutable {
                   for (std::size_t c = 0; c < cols; ++c)
                     accum_grad(t, argmax[c] * cols + c, self.grad[c]);
                 });
}

// ---------------------------------------------------------------------------
// Shape surgery
// ---------------------------------------------------------------------------

inline Tensor reshape(const Tensor& t, Shape shape) {
  M2C_CHECK(shape_numel(shape) == t.numel(), "reshape: ", shape_str(shape),
            " has wrong element count");
  return make_op("reshape", std::move(shape), t.value(), {t},
                 [t](const TensorData& self) mutable {
                   for (std::size_t i = 0; i < self.grad.size(); ++i)
                     accum_grad(t, i, self.grad[i]);
                 });
}

/// Stacks parts on top of each other; every part must have the same number
/// of columns (rank-1 parts count as one row).
inline Tensor concat_rows(const std::vector<Tensor>& parts) {
  M2C_CHECK(!parts.empty(), "concat_rows: no parts");
  std::size_t cols = detail::as_matrix(parts[0]).second;
  std::size_t rows = 0;
  for (const Tensor& p : parts) {
    auto [r, c] = detail::as_matrix(p);
    M2C_CHECK(c == cols, "concat_rows: column mismatch");
    rows += r;
  }
  std::vector<double> out;
  out.reserve(rows * cols);
  for (const Tensor& p : parts)
    out.insert(out.end(), p.value().begin(), p.value().end());
  return make_op("concat_rows", {rows, cols}, std::move(out), parts,
                 [parts, cols](const TensorData& self) {
                   std::size_t off = 0;
                   for (const Tensor& p : parts) {
                     for (std::size_t i = 0; i < p.numel(); ++i)
                       accum_grad(p, i, self.grad[off + i]);
                     off += p.numel();
                   }
                 });
}

inline Tensor concat_rows(const Tensor& a, const Tensor& b) {
  return concat_rows(std::vector<Tensor>{a, b});
}

/// Joins along the last axis: two vectors -> one vector, or two matrices
/// with equal row counts -> wider matrix.
inline Tensor concat_cols(const Tensor& a, const Tensor& b) {
  if (a.rank() == 1 && b.rank() == 1) {
    std::size_t n1 = a.dim(0), n2 = b.dim(0);
    std::vector<double> out;
    out.reserve(n1 + n2);
    out.insert(out.end(), a.value().begin(), a.value().end());
    out.insert(out.end(), b.value().begin(), b.value().end());
    return make_op("concat_cols", {n1 + n2}, std::move(out), {a, b},
                   [a, b, n1, n2](const TensorData& self) mutable {
                     for (std::size_t i = 0; i < n1; ++i)
                       accum_grad(a, i, self.grad[i]);
                     for (std::size_t i = 0; i < n2; ++i)
                       accum_grad(b, i, self.grad[n1 + i]);
                   });
  }
  M2C_CHECK(a.rank() == 2 && b.rank() == 2 && a.dim(0) == b.dim(0),
            "concat_cols: ", shape_str(a.shape()), " vs ",
            shape_str(b.shape()));
  std::size_t rows = a.dim(0), ca = a.dim(1), cb = b.dim(1);
  std::vector<double> out(rows * (ca + cb));
  const auto& av = a.value();
  const auto& bv = b.value();
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(av.data() + r * ca, ca, out.data() + r * (ca + cb));
    std::copy_n(bv.data() + r * cb, cb, out.data() + r * (ca + cb) + ca);
  }
  return make_op("concat_cols", {rows, ca + cb}, std::move(out), {a, b},
                 [a, b, rows, ca, cb](const TensorData& self) mutable {
                   for (std::size_t r = 0; r < rows; ++r) {
                     for (std::size_t c = 0; c < ca; ++c)
                       accum_grad(a, r * ca + c, self.grad[r * (ca + cb) + c]);
                     for (std::size_t c = 0; c < cb; ++c)
                       accum_grad(b, r * cb + c,
                                  self.grad[r * (ca + cb) + ca + c]);
                   }
                 });
}

inline Tensor slice_cols(const Tensor& t, std::size_t c0, std::size_t c1) {
  M2C_CHECK(t.rank() == 2, "slice_cols: matrix required");
  std::size_t rows = t.dim(0), cols = t.dim(1);
  M2C_CHECK(c0 < c1 && c1 <= cols, "slice_cols: bad range [", c0, ",", c1,
            ") of ", cols);
  std::size_t w = c1 - c0;
  std::vector<double> out(rows * w);
  const auto& tv = t.value();
  for (std::size_t r = 0; r < rows; ++r)
    std::copy_n(tv.data() + r * cols + c0, w, out.data() + r * w);
  return make_op("slice_cols", {rows, w}, std::move(out), {t},
                 [t, rows, cols, c0, w](const TensorData& self) mutable {
                   for (std::size_t r = 0; r < rows; ++r)
                     for (std::size_t c = 0; c < w; ++c)
                       accum_grad(t, r * cols + c0 + c, self.grad[r * w + c]);
                 });
}

inline Tensor slice_rows(const Tensor& t, std::size_t r0, std::size_t r1) {
  M2C_CHECK(t.rank() == 2, "slice_rows: matrix required");
  std::size_t rows = t.dim(0), cols = t.dim(1);
  M2C_CHECK(r0 < r1 && r1 <= rows, "slice_rows: bad range [", r0, ",", r1,
            ") of ", rows);
  std::size_t h = r1 - r0;
  std::vector<double> out(t.value().begin() + r0 * cols,
                          t.value().begin() + r1 * cols);
  return make_op("slice_rows", {h, cols}, std::move(out), {t},
                 [t, cols, r0, h](const TensorData& self) mutable {
                   for (std::size_t i = 0; i < h * cols; ++i)
                     accum_grad(t, r0 * cols + i, self.grad[i]);
                 });
}

/// Row i of a matrix as a vector.
inline Tensor row(const Tensor& t, std::size_t i) {
  M2C_CHECK(t.rank() == 2, "row: matrix required");
  std::size_t cols = t.dim(1);
  M2C_CHECK(i < t.dim(0), "row: index out of range");
  std::vector<double> out(t.value().begin() + i * cols,
                          t.value().begin() + (i + 1) * cols);
  return make_op("row", {cols}, std::move(out), {t},
                 [t, i, cols](const TensorData& self) mutable {
                   for (std::size_t c = 0; c < cols; ++c)
                     accum_grad(t, i * cols + c, self.grad[c]);
                 });
}

/// Gathers rows of `table` [V x d] into [len(ids) x d].
inline Tensor embedding_lookup(const Tensor& table,
                               const std::vector<int>& ids) {
  M2C_CHECK(table.rank() == 2, "embedding_lookup: table must be a matrix");
  std::size_t v = table.dim(0), d = table.dim(1);
  std::vector<double> out(ids.size() * d);
  const auto& tv = table.value();
  for (std::size_t r = 0; r < ids.size(); ++r) {
    int id = ids[r];
    M2C_CHECK(id >= 0 && static_cast<std::size_t>(id) < v,
              "embedding_lookup: id ", id, " out of range [0,", v, ")");
    std::copy_n(tv.data() + static_cast<std::size_t>(id) * d, d,
                out.data() + r * d);
  }
  return make_op("embedding_lookup", {ids.size(), d}, std::move(out), {table},
                 [table, ids, d](const TensorData& self) mutable {
                   for (std::size_t r = 0; r < ids.size(); ++r)
                     for (std::size_t c = 0; c < d; ++c)
                       accum_grad(table,
                                  static_cast<std::size_t>(ids[r]) * d + c,
                                  self.grad[r * d + c]);
                 });
}

// ---------------------------------------------------------------------------
// Convolution and pooling
// ---------------------------------------------------------------------------

/// Non-causal dilated 1-D convolution with symmetric zero padding, so the
/// output length equals the input length. Kernel layout [k x C_in x C_out],
/// k odd. output[t] looks at input[t - h*d ... t + h*d] with h = (k-1)/2.
inline Tensor conv1d_dilated(const Tensor& input, const Tensor& kernels,
                             std::size_t dilation) {
  M2C_CHECK(input.rank() == 2, "conv1d_dilated: input must be [L x C_in]");
  M2C_CHECK(kernels.rank() == 3,
            "conv1d_dilated: kernels must be [k x C_in x C_out]");
  M2C_CHECK(dilation >= 1, "conv1d_dilated: dilation must be >= 1");
  std::size_t len = input.dim(0), cin = input.dim(1);
  std::size_t k = kernels.dim(0), cout = kernels.dim(2);
  M2C_CHECK(k % 2 == 1, "conv1d_dilated: kernel width must be odd, got ", k);
  M2C_CHECK(kernels.dim(1) == cin, "conv1d_dilated: kernel C_in ",
            kernels.dim(1), " vs input C_in ", cin);
  std::ptrdiff_t half = static_cast<std::ptrdiff_t>(k / 2);
  std::ptrdiff_t dil = static_cast<std::ptrdiff_t>(dilation);
  std::ptrdiff_t slen = static_cast<std::ptrdiff_t>(len);

  std::vector<double> out(len * cout, 0.0);
  const double* x = input.value().data();
  const double* w = kernels.value().data();
  for (std::ptrdiff_t t = 0; t < slen; ++t) {
    double* orow = out.data() + t * cout;
    for (std::ptrdiff_t tap = 0; tap < static_cast<std::ptrdiff_t>(k); ++tap) {
      std::ptrdiff_t src = t + (tap - half) * dil;
      if (src < 0 || src >= slen) continue;
      const double* xrow = x + src * cin;
      const double* wtap = w + tap * cin * cout;
      for (std::size_t ci = 0; ci < cin; ++ci) {
        double xv = xrow[ci];
        if (xv == 0.0) continue;
        const double* wrow = wtap + ci * cout;
        for (std::size_t co = 0; co < cout; ++co) orow[co] += xv * wrow[co];
      }
    }
  }
  return make_op(
      "conv1d_dilated", {len, cout}, std::move(out), {input, kernels},
      [input, kernels, len, cin, k, cout, half, dil](
          const TensorData& self) mutable {
        std::ptrdiff_t slen = static_cast<std::ptrdiff_t>(len);
        const double* g = self.grad.data();
        const double* x = input.value().data();
        const double* w = kernels.value().data();
        bool gi = input.requires_grad(), gk = kernels.requires_grad();
        double* xg = gi ? grad_buffer(input).data() : nullptr;
        double* wg = gk ? grad_buffer(kernels).data() : nullptr;
        for (std::ptrdiff_t t = 0; t < slen; ++t) {
          const double* grow = g + t * cout;
          for (std::ptrdiff_t tap = 0; tap < static_cast<std::ptrdiff_t>(k);
               ++tap) {
            std::ptrdiff_t src = t + (tap - half) * dil;
            if (src < 0 || src >= slen) continue;
            for (std::size_t ci = 0; ci < cin; ++ci) {
              const double* wrow = w + (tap * cin + ci) * cout;
              double xv = x[src * cin + ci];
              double acc = 0.0;
              for (std::size_t co = 0; co < cout; ++co) {
                acc += wrow[co] * grow[co];
                if (gk) wg[(tap * cin + ci) * cout + co] += xv * grow[co];
              }
              if (gi) xg[src * cin + ci] += acc;
            }
          }
        }
      });
}

/// Valid-mode 1-D convolution (no padding); any kernel width 1..L.
/// Output length L - k + 1.
inline Tensor conv1d_valid(const Tensor& input, const Tensor& kernels) {
  M2C_CHECK(input.rank() == 2 && kernels.rank() == 3,
            "conv1d_valid: input [L x C_in], kernels [k x C_in x C_out]");
  std::size_t len = input.dim(0), cin = input.dim(1);
  std::size_t k = kernels.dim(0), cout = kernels.dim(2);
  M2C_CHECK(kernels.dim(1) == cin, "conv1d_valid: channel mismatch");
  M2C_CHECK(k >= 1 && k <= len, "conv1d_valid: kernel width ", k,
            " vs length ", len);
  std::size_t olen = len - k + 1;
  std::vector<double> out(olen * cout, 0.0);
  const double* x = input.value().data();
  const double* w = kernels.value().data();
  for (std::size_t t = 0; t < olen; ++t) {
    double* orow = out.data() + t * cout;
    for (std::size_t tap = 0; tap < k; ++tap) {
      const double* xrow = x + (t + tap) * cin;
      const double* wtap = w + tap * cin * cout;
      for (std::size_t ci = 0; ci < cin; ++ci) {
        double xv = xrow[ci];
        if (xv == 0.0) continue;
        const double* wrow = wtap + ci * cout;
        for (std::size_t co = 0; co < cout; ++co) orow[co] += xv * wrow[co];
      }
    }
  }
  return make_op(
      "conv1d_valid", {olen, cout}, std::move(out), {input, kernels},
      [input, kernels, olen, cin, k, cout](const TensorData& self) mutable {
        const double* g = self.grad.data();
        const double* x = input.value().data();
        const double* w = kernels.value().data();
        bool gi = input.requires_grad(), gk = kernels.requires_grad();
        double* xg = gi ? grad_buffer(input).data() : nullptr;
        double* wg = gk ? grad_buffer(kernels).data() : nullptr;
        for (std::size_t t = 0; t < olen; ++t) {
          const double* grow = g + t * cout;
          for (std::size_t tap = 0; tap < k; ++tap) {
            for (std::size_t ci = 0; ci < cin; ++ci) {
              const double* wrow = w + (tap * cin + ci) * cout;
              double xv = x[(t + tap) * cin + ci];
              double acc = 0.0;
              for (std::size_t co = 0; co < cout; ++co) {
                acc += wrow[co] * grow[co];
                if (gk) wg[(tap * cin + ci) * cout + co] += xv * grow[co];
              }
              if (gi) xg[(t + tap) * cin + ci] += acc;
            }
          }
        }
      });
}

/// Mean over full windows; partial tail windows are dropped, so the output
/// has floor((L - window)/stride) + 1 rows.
inline Tensor avg_pool1d(const Tensor& input, std::size_t window,
                         std::size_t stride) {
  M2C_CHECK(input.rank() == 2, "avg_pool1d: input must be [L x C]");
  std::size_t len = input.dim(0), ch = input.dim(1);
  M2C_CHECK(window >= 1 && stride >= 1, "avg_pool1d: window/stride >= 1");
  M2C_CHECK(window <= len, "avg_pool1d: window ", window, " > length ", len);
  std::size_t olen = (len - window) / stride + 1;
  std::vector<double> out(olen * ch, 0.0);
  const double* x = input.value().data();
  for (std::size_t o = 0; o < olen; ++o) {
    double* orow = out.data() + o * ch;
    for (std::size_t i = 0; i < window; ++i) {
      const double* xrow = x + (o * stride + i) * ch;
      for (std::size_t c = 0; c < ch; ++c) orow[c] += xrow[c];
    }
    for (std::size_t c = 0; c < ch; ++c) orow[c] /= static_cast<double>(window);
  }
  return make_op("avg_pool1d", {olen, ch}, std::move(out), {input},
                 [input, olen, ch, window, stride](
                     const TensorData& self) mutable {
                   double inv = 1.0 / static_cast<double>(window);
                   for (std::size_t o = 0; o < olen; ++o) {
                     const double* grow = self.grad.data() + o * ch;
                     for (std::size_t i = 0; i < window; ++i)
                       for (std::size_t c = 0; c < ch; ++c)
                         accum_grad(input, (o * stride + i) * ch + c,
                                    grow[c] * inv);
                   }
                 });
}

// ---------------------------------------------------------------------------
// Small non-differentiable helpers
// ---------------------------------------------------------------------------

inline std::size_t argmax(const std::vector<double>& v) {
  M2C_CHECK(!v.empty(), "argmax of empty vector");
  return static_cast<std::size_t>(
      std::max_element(v.begin(), v.end()) - v.begin());
}

/// One-hot rows as a constant tensor [len(ids) x width].
inline Tensor onehot_rows(const std::vector<int>& ids, std::size_t width) {
  std::vector<double> v(ids.size() * width, 0.0);
  for (std::size_t r = 0; r < ids.size(); ++r) {
    M2C_CHECK(ids[r] >= 0 && static_cast<std::size_t>(ids[r]) < width,
              "onehot_rows: id out of range");
    v[r * width + static_cast<std::size_t>(ids[r])] = 1.0;
  }
  return Tensor::from(std::move(v), {ids.size(), width});
}

}  // namespace m2c

#endif  // M2C_OPS_HPP_
