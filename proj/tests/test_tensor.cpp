// tests/test_tensor.cpp

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

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "m2c/grad_check.hpp"
#include "m2c/ops.hpp"
#include "m2c/tensor.hpp"

using namespace m2c;

namespace {

Tensor col(std::vector<double> v) {
  std::size_t n = v.size();
  return Tensor::from(std::move(v), {n, 1});
}

}  // namespace

TEST(Conv1dDilated, IdentityKernel) {
  Tensor x = col({1, 2, 3, 4});
  Tensor k = Tensor::from({1.0}, {1, 1, 1});
  Tensor y = conv1d_dilated(x, k, 1);
  EXPECT_EQ(y.shape(), (Shape{4, 1}));
  EXPECT_EQ(y.value(), (std::vector<double>{1, 2, 3, 4}));
}

TEST(Conv1dDilated, HandConvolutionDilationOne) {
  Tensor x = col({1, 2, 3, 4});
  Tensor k = Tensor::from({1.0, 0.0, 1.0}, {3, 1, 1});
  Tensor y = conv1d_dilated(x, k, 1);
  EXPECT_EQ(y.value(), (std::vector<double>{2, 4, 6, 3}));
}

TEST(Conv1dDilated, HandConvolutionDilationTwo) {
  Tensor x = col({1, 2, 3, 4});
  Tensor k = Tensor::from({1.0, 0.0, 1.0}, {3, 1, 1});
  Tensor y = conv1d_dilated(x, k, 2);
  EXPECT_EQ(y.value(), (std::vector<double>{3, 4, 1, 2}));
}

TEST(Conv1dDilated, RejectsEvenKernelAndZeroDilation) {
  Tensor x = col({1, 2, 3, 4});
  Tensor k2 = Tensor::from({1.0, 1.0}, {2, 1, 1});
  EXPECT_THROW(conv1d_dilated(x, k2, 1), Error);
  Tensor k3 = Tensor::from({1.0, 0.0, 1.0}, {3, 1, 1});
  EXPECT_THROW(conv1d_dilated(x, k3, 0), Error);
}

TEST(Conv1dDilated, IdentityKernelIsIdentityMapProperty) {
  RngStream rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    std::size_t len = 1 + rng.uniform_int(1, 8);
    std::size_t ch = 1 + rng.uniform_int(0, 3);
    Tensor x = Tensor::randn({len, ch}, rng);
    // Width-1 kernel carrying the channel identity.
    std::vector<double> kv(ch * ch, 0.0);
    for (std::size_t c = 0; c < ch; ++c) kv[c * ch + c] = 1.0;
    Tensor k = Tensor::from(std::move(kv), {1, ch, ch});
    Tensor y = conv1d_dilated(x, k, 1 + rng.uniform_int(0, 3));
    EXPECT_EQ(y.value(), x.value());
  }
}

TEST(AvgPool1d, ConstantInput) {
  Tensor x = Tensor::full({6, 2}, 3.25);
  Tensor y = avg_pool1d(x, 3, 2);
  EXPECT_EQ(y.shape(), (Shape{2, 2}));
  for (double v : y.value()) EXPECT_DOUBLE_EQ(v, 3.25);
}

TEST(AvgPool1d, DirectMeans) {
  Tensor x = col({1, 2, 3, 4});
  EXPECT_EQ(avg_pool1d(x, 2, 2).value(), (std::vector<double>{1.5, 3.5}));
  EXPECT_EQ(avg_pool1d(x, 4, 4).value(), (std::vector<double>{2.5}));
}

TEST(AvgPool1d, RejectsWindowLargerThanInput) {
  Tensor x = col({1, 2, 3});
  EXPECT_THROW(avg_pool1d(x, 4, 1), Error);
}

TEST(SoftmaxRows, UniformLogits) {
  Tensor x = Tensor::full({2, 4}, 0.7);
  Tensor y = softmax_rows(x);
  for (double v : y.value()) EXPECT_NEAR(v, 0.25, 1e-15);
}

TEST(SoftmaxRows, ClosedForm) {
  Tensor x = Tensor::from({0.0, std::log(2.0)}, {1, 2});
  Tensor y = softmax_rows(x);
  EXPECT_NEAR(y.value()[0], 1.0 / 3.0, 1e-12);
  EXPECT_NEAR(y.value()[1], 2.0 / 3.0, 1e-12);
}

TEST(SoftmaxRows, ShiftInvarianceBitwise) {
  // Dyadic logits and shift keep the subtraction exact, so the outputs must
  // agree bit for bit under max-subtraction.
  Tensor a = Tensor::from({0.5, 1.25, -0.75, 2.0}, {1, 4});
  Tensor b = Tensor::from({0.5 + 4.0, 1.25 + 4.0, -0.75 + 4.0, 2.0 + 4.0},
                          {1, 4});
  EXPECT_EQ(softmax_rows(a).value(), softmax_rows(b).value());
}

TEST(SoftmaxRows, RowsSumToOne) {
  RngStream rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    Tensor x = Tensor::randn({1 + rng.uniform_int(0, 5) * 1ul, 8}, rng, 5.0);
    Tensor y = softmax_rows(x);
    for (std::size_t r = 0; r < y.dim(0); ++r) {
      double s = 0;
      for (std::size_t c = 0; c < y.dim(1); ++c) s += y.at(r, c);
      EXPECT_NEAR(s, 1.0, 1e-6);
      for (std::size_t c = 0; c < y.dim(1); ++c) EXPECT_GE(y.at(r, c), 0.0);
    }
  }
}

TEST(Backward, SumOfSquares) {
  Tensor t = Tensor::from({1.0, -2.0}, {2}, /*requires_grad=*/true);
  Tensor loss = sum_all(mul(t, t));
  backward(loss);
  EXPECT_DOUBLE_EQ(t.grad()[0], 2.0);
  EXPECT_DOUBLE_EQ(t.grad()[1], -4.0);
}

TEST(Backward, SoftmaxCrossEntropyGradIsProbMinusOnehot) {
  RngStream rng(3);
  Tensor logits = Tensor::randn({3, 5}, rng, 1.0, /*requires_grad=*/true);
  std::vector<int> ids{4, 0, 2};
  Tensor loss = cross_entropy_with_logits(logits, ids);
  backward(loss);
  Tensor p = softmax_rows(logits.detach());
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c = 0; c < 5; ++c) {
      double expect = p.at(r, c) - (ids[r] == static_cast<int>(c) ? 1.0 : 0.0);
      EXPECT_NEAR(logits.grad()[r * 5 + c], expect, 1e-12);
    }
}

TEST(Backward, NonScalarLossRejected) {
  Tensor t = Tensor::from({1.0, 2.0}, {2}, true);
  EXPECT_THROW(backward(mul(t, t)), Error);
}

TEST(Backward, DetachedTensorsGetNoGradient) {
  Tensor t = Tensor::from({1.0, 2.0}, {2}, true);
  Tensor d = t.detach();
  Tensor loss = sum_all(mul(d, d));
  EXPECT_FALSE(loss.requires_grad());
  backward(loss);  // nothing to do; must not throw
  EXPECT_DOUBLE_EQ(t.grad()[0], 0.0);
  EXPECT_DOUBLE_EQ(t.grad()[1], 0.0);
}

TEST(Backward, DeterministicGradients) {
  RngStream rng(19);
  Tensor w = Tensor::randn({4, 4}, rng, 1.0, true);
  Tensor x = Tensor::randn({3, 4}, rng);
  auto run = [&]() {
    w.zero_grad();
    Tensor h = m2c::tanh(matmul(x, w));
    Tensor loss = mean_all(mul(h, h));
    backward(loss);
    return w.grad();
  };
  auto g1 = run();
  auto g2 = run();
  EXPECT_EQ(g1, g2);  // bitwise
}

TEST(Backward, GradsAccumulateAdditively) {
  Tensor t = Tensor::from({3.0}, {1}, true);
  Tensor l1 = mul(t, t);
  backward(l1);
  backward(l1);
  EXPECT_DOUBLE_EQ(t.grad()[0], 12.0);  // two passes of d(t^2)/dt = 6
}

TEST(Tape, TopologicalOrderAndSingleVisit) {
  Tensor a = Tensor::from({1.0, 2.0}, {2}, true);
  Tensor b = m2c::tanh(a);
  Tensor c = mul(b, b);  // b used twice through one node
  Tensor loss = sum_all(add(c, b));
  ComputationTape tape = ComputationTape::trace(loss);
  EXPECT_TRUE(tape.topologically_sorted());
  // a, b, c, add, sum -> 5 recorded nodes, each exactly once.
  EXPECT_EQ(tape.size(), 5u);
  tape.backward();
  // d/da [sum(tanh(a)^2 + tanh(a))] = (2 tanh(a) + 1)(1 - tanh(a)^2)
  for (std::size_t i = 0; i < 2; ++i) {
    double th = std::tanh(a.value()[i]);
    EXPECT_NEAR(a.grad()[i], (2 * th + 1) * (1 - th * th), 1e-12);
  }
}

TEST(CheckedMode, RaisesOnNonFinite) {
  CheckFiniteGuard guard(true);
  Tensor t = Tensor::from({1.0, 0.0}, {2});
  EXPECT_THROW(m2c::log(t), Error);  // log(0) = -inf
}

TEST(GradCheck, LinearIsExact) {
  Tensor theta = Tensor::from({0.3, -1.2, 2.0}, {3}, true);
  Tensor a = Tensor::from({2.0, -1.0, 0.5}, {3});
  double err = grad_check(
      [&](const Tensor& t) { return sum_all(mul(t, a)); }, theta, 1e-4);
  EXPECT_LT(err, 1e-8);
}

TEST(GradCheck, ConvLayer) {
  RngStream rng(23);
  Tensor x = Tensor::randn({7, 2}, rng);
  Tensor k = Tensor::randn({3, 2, 3}, rng, 0.5, true);
  double err = grad_check(
      [&](const Tensor& kk) {
        return mean_all(m2c::tanh(conv1d_dilated(x, kk, 2)));
      },
      k);
  EXPECT_LT(err, 1e-4);
}

TEST(GradCheck, SigmoidChainDepthFive) {
  Tensor theta = Tensor::from({0.2, -0.4, 0.9, 1.5}, {4}, true);
  double err = grad_check(
      [&](const Tensor& t) {
        Tensor h = t;
        for (int i = 0; i < 5; ++i) h = sigmoid(h);
        return sum_all(h);
      },
      theta);
  EXPECT_LT(err, 1e-4);
}

TEST(GradCheck, RejectsBadEpsAndNonFiniteLoss) {
  Tensor theta = Tensor::from({1.0}, {1}, true);
  EXPECT_THROW(
      grad_check([](const Tensor& t) { return sum_all(t); }, theta, 1e-2),
      Error);
  Tensor zero = Tensor::from({0.0}, {1}, true);
  EXPECT_THROW(
      grad_check([](const Tensor& t) { return m2c::log(t); }, zero), Error);
}

// ---------------------------------------------------------------------------
// Finite-difference property suite: every primitive, randomized small
// shapes (<= 8 per dim), 100 seeds, max relative error 1e-4.
// ---------------------------------------------------------------------------

namespace {

struct FdCase {
  const char* name;
  std::function<double(RngStream&)> run;  // returns max relative error
};

double check(Tensor& theta, const std::function<Tensor(const Tensor&)>& f) {
  return grad_check(f, theta);
}

// Values bounded away from zero; keeps relu/max kinks out of fd reach.
Tensor rand_away_from_zero(const Shape& s, RngStream& rng) {
  std::vector<double> v(shape_numel(s));
  for (double& x : v)
    x = (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform(0.2, 1.5);
  return Tensor::from(std::move(v), s, true);
}

}  // namespace

TEST(FiniteDifferenceSuite, AllPrimitivesHundredSeeds) {
  std::vector<FdCase> cases;

  cases.push_back({"add", [](RngStream& rng) {
    Shape s{1 + (std::size_t)rng.uniform_int(0, 7),
            1 + (std::size_t)rng.uniform_int(0, 7)};
    Tensor a = Tensor::randn(s, rng, 1.0, true);
    Tensor b = Tensor::randn(s, rng);
    return check(a, [&](const Tensor& t) { return sum_all(add(t, b)); });
  }});
  cases.push_back({"sub", [](RngStream& rng) {
    Shape s{1 + (std::size_t)rng.uniform_int(0, 7)};
    Tensor a = Tensor::randn(s, rng, 1.0, true);
    Tensor b = Tensor::randn(s, rng);
    return check(a, [&](const Tensor& t) { return sum_all(sub(b, t)); });
  }});
  cases.push_back({"mul", [](RngStream& rng) {
    Shape s{1 + (std::size_t)rng.uniform_int(0, 7),
            1 + (std::size_t)rng.uniform_int(0, 7)};
    Tensor a = Tensor::randn(s, rng, 1.0, true);
    Tensor b = Tensor::randn(s, rng);
    return check(a, [&](const Tensor& t) {
      return mean_all(mul(mul(t, b), t));
    });
  }});
  cases.push_back({"neg_scale_addscalar", [](RngStream& rng) {
    Shape s{2 + (std::size_t)rng.uniform_int(0, 6)};
    Tensor a = Tensor::randn(s, rng, 1.0, true);
    return check(a, [&](const Tensor& t) {
      return sum_all(add_scalar(scale(neg(t), 1.7), 0.3));
    });
  }});
  cases.push_back({"add_bias", [](RngStream& rng) {
    std::size_t r = 1 + rng.uniform_int(0, 7), c = 1 + rng.uniform_int(0, 7);
    Tensor m = Tensor::randn({r, c}, rng);
    Tensor b = Tensor::randn({c}, rng, 1.0, true);
    return check(b, [&](const Tensor& t) {
      return mean_all(m2c::tanh(add_bias(m, t)));
    });
  }});
  cases.push_back({"scale_by_reciprocal", [](RngStream& rng) {
    Tensor a = Tensor::randn({5}, rng, 1.0, true);
    return check(a, [&](const Tensor& t) {
      Tensor s = add_scalar(sum_all(mul(t, t)), 1.0);
      return sum_all(scale_by(t, reciprocal(s)));
    });
  }});
  cases.push_back({"sigmoid_tanh", [](RngStream& rng) {
    Shape s{1 + (std::size_t)rng.uniform_int(0, 7)};
    Tensor a = Tensor::randn(s, rng, 1.0, true);
    return check(a, [&](const Tensor& t) {
      return sum_all(mul(sigmoid(t), m2c::tanh(t)));
    });
  }});
  cases.push_back({"relu", [](RngStream& rng) {
    Shape s{2 + (std::size_t)rng.uniform_int(0, 6)};
    Tensor a = rand_away_from_zero(s, rng);
    return check(a, [&](const Tensor& t) { return sum_all(relu(t)); });
  }});
  cases.push_back({"log", [](RngStream& rng) {
    Shape s{1 + (std::size_t)rng.uniform_int(0, 7)};
    Tensor a = Tensor::rand_uniform(s, rng, 0.3, 2.0, true);
    return check(a, [&](const Tensor& t) { return mean_all(m2c::log(t)); });
  }});
  cases.push_back({"log_eps", [](RngStream& rng) {
    Shape s{1 + (std::size_t)rng.uniform_int(0, 7)};
    Tensor a = Tensor::rand_uniform(s, rng, 0.3, 2.0, true);
    return check(a, [&](const Tensor& t) {
      return sum_all(log_eps(t, 1e-7));
    });
  }});
  cases.push_back({"matmul", [](RngStream& rng) {
    std::size_t m = 1 + rng.uniform_int(0, 5), k = 1 + rng.uniform_int(0, 5),
                n = 1 + rng.uniform_int(0, 5);
    Tensor a = Tensor::randn({m, k}, rng, 1.0, true);
    Tensor b = Tensor::randn({k, n}, rng, 1.0, true);
    double e1 = check(a, [&](const Tensor& t) {
      return mean_all(matmul(t, b));
    });
    double e2 = check(b, [&](const Tensor& t) {
      return mean_all(m2c::tanh(matmul(a, t)));
    });
    return std::max(e1, e2);
  }});
  cases.push_back({"vecmat", [](RngStream& rng) {
    std::size_t k = 1 + rng.uniform_int(0, 5), n = 1 + rng.uniform_int(0, 5);
    Tensor v = Tensor::randn({k}, rng, 1.0, true);
    Tensor m = Tensor::randn({k, n}, rng, 1.0, true);
    double e1 = check(v, [&](const Tensor& t) {
      return sum_all(sigmoid(vecmat(t, m)));
    });
    double e2 = check(m, [&](const Tensor& t) {
      return sum_all(sigmoid(vecmat(v, t)));
    });
    return std::max(e1, e2);
  }});
  cases.push_back({"transpose", [](RngStream& rng) {
    std::size_t r = 1 + rng.uniform_int(0, 7), c = 1 + rng.uniform_int(0, 7);
    Tensor a = Tensor::randn({r, c}, rng, 1.0, true);
    return check(a, [&](const Tensor& t) {
      return mean_all(mul(transpose(t), transpose(t)));
    });
  }});
  cases.push_back({"softmax_rows", [](RngStream& rng) {
    std::size_t r = 1 + rng.uniform_int(0, 3), c = 2 + rng.uniform_int(0, 6);
    Tensor a = Tensor::randn({r, c}, rng, 2.0, true);
    Tensor w = Tensor::randn({r, c}, rng);
    return check(a, [&](const Tensor& t) {
      return sum_all(mul(softmax_rows(t), w));
    });
  }});
  cases.push_back({"log_softmax_rows", [](RngStream& rng) {
    std::size_t r = 1 + rng.uniform_int(0, 3), c = 2 + rng.uniform_int(0, 6);
    Tensor a = Tensor::randn({r, c}, rng, 2.0, true);
    Tensor w = Tensor::randn({r, c}, rng);
    return check(a, [&](const Tensor& t) {
      return sum_all(mul(log_softmax_rows(t), w));
    });
  }});
  cases.push_back({"cross_entropy", [](RngStream& rng) {
    std::size_t r = 1 + rng.uniform_int(0, 4), c = 2 + rng.uniform_int(0, 6);
    Tensor a = Tensor::randn({r, c}, rng, 1.5, true);
    std::vector<int> ids(r);
    for (auto& id : ids) id = rng.uniform_int(0, c - 1);
    return check(a, [&](const Tensor& t) {
      return cross_entropy_with_logits(t, ids);
    });
  }});
  cases.push_back({"reductions", [](RngStream& rng) {
    Shape s{1 + (std::size_t)rng.uniform_int(0, 7),
            1 + (std::size_t)rng.uniform_int(0, 7)};
    Tensor a = Tensor::randn(s, rng, 1.0, true);
    return check(a, [&](const Tensor& t) {
      return add(sum_all(m2c::tanh(t)), mean_all(mul(t, t)));
    });
  }});
  cases.push_back({"max_over_rows", [](RngStream& rng) {
    std::size_t r = 2 + rng.uniform_int(0, 5), c = 1 + rng.uniform_int(0, 5);
    // Distinct magnitudes keep the argmax stable under the fd step.
    std::vector<double> v(r * c);
    for (std::size_t i = 0; i < v.size(); ++i)
      v[i] = rng.uniform(0, 1) + 0.01 * static_cast<double>(i);
    Tensor a = Tensor::from(std::move(v), {r, c}, true);
    return check(a, [&](const Tensor& t) {
      return sum_all(max_over_rows(t));
    });
  }});
  cases.push_back({"reshape_concat_slice", [](RngStream& rng) {
    std::size_t r = 2 + rng.uniform_int(0, 4), c = 2 + rng.uniform_int(0, 4);
    Tensor a = Tensor::randn({r, c}, rng, 1.0, true);
    Tensor b = Tensor::randn({1, c}, rng);
    return check(a, [&](const Tensor& t) {
      Tensor cat = concat_rows(t, b);
      Tensor left = slice_cols(cat, 0, c > 1 ? c - 1 : 1);
      Tensor top = slice_rows(cat, 0, r);
      Tensor flat = reshape(top, {r * c});
      return add(mean_all(mul(left, left)), sum_all(m2c::tanh(flat)));
    });
  }});
  cases.push_back({"concat_cols_row", [](RngStream& rng) {
    std::size_t n = 2 + rng.uniform_int(0, 5);
    Tensor a = Tensor::randn({n}, rng, 1.0, true);
    Tensor b = Tensor::randn({n}, rng);
    return check(a, [&](const Tensor& t) {
      Tensor wide = concat_cols(t, b);
      Tensor m = reshape(wide, {2, n});
      return sum_all(mul(row(m, 0), row(m, 1)));
    });
  }});
  cases.push_back({"embedding_lookup", [](RngStream& rng) {
    std::size_t v = 3 + rng.uniform_int(0, 5), d = 1 + rng.uniform_int(0, 5);
    std::size_t len = 1 + rng.uniform_int(0, 6);
    Tensor table = Tensor::randn({v, d}, rng, 1.0, true);
    std::vector<int> ids(len);
    for (auto& id : ids) id = rng.uniform_int(0, v - 1);
    return check(table, [&](const Tensor& t) {
      return mean_all(m2c::tanh(embedding_lookup(t, ids)));
    });
  }});
  cases.push_back({"conv1d_dilated", [](RngStream& rng) {
    std::size_t len = 4 + rng.uniform_int(0, 4), cin = 1 + rng.uniform_int(0, 2),
                cout = 1 + rng.uniform_int(0, 2);
    std::size_t k = 1 + 2 * rng.uniform_int(0, 1);
    std::size_t dil = 1 + rng.uniform_int(0, 2);
    Tensor x = Tensor::randn({len, cin}, rng, 1.0, true);
    Tensor w = Tensor::randn({k, cin, cout}, rng, 0.7, true);
    double e1 = check(x, [&](const Tensor& t) {
      return mean_all(m2c::tanh(conv1d_dilated(t, w, dil)));
    });
    double e2 = check(w, [&](const Tensor& t) {
      return mean_all(m2c::tanh(conv1d_dilated(x, t, dil)));
    });
    return std::max(e1, e2);
  }});
  cases.push_back({"conv1d_valid", [](RngStream& rng) {
    std::size_t len = 5 + rng.uniform_int(0, 3), cin = 1 + rng.uniform_int(0, 2),
                cout = 1 + rng.uniform_int(0, 2);
    std::size_t k = 1 + rng.uniform_int(0, 3);
    Tensor x = Tensor::randn({len, cin}, rng, 1.0, true);
    Tensor w = Tensor::randn({k, cin, cout}, rng, 0.7, true);
    double e1 = check(x, [&](const Tensor& t) {
      return mean_all(sigmoid(conv1d_valid(t, w)));
    });
    double e2 = check(w, [&](const Tensor& t) {
      return mean_all(sigmoid(conv1d_valid(x, t)));
    });
    return std::max(e1, e2);
  }});
  cases.push_back({"avg_pool1d", [](RngStream& rng) {
    std::size_t len = 5 + rng.uniform_int(0, 3), ch = 1 + rng.uniform_int(0, 3);
    std::size_t w = 1 + rng.uniform_int(0, 3);
    std::size_t s = 1 + rng.uniform_int(0, 2);
    Tensor x = Tensor::randn({len, ch}, rng, 1.0, true);
    return check(x, [&](const Tensor& t) {
      return sum_all(m2c::tanh(avg_pool1d(t, w, s)));
    });
  }});

  for (const auto& fd : cases) {
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      RngStream rng(seed * 7919 + 13);
      worst = std::max(worst, fd.run(rng));
    }
    EXPECT_LT(worst, 1e-4) << "primitive: " << fd.name;
  }
}
