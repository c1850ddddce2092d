// tests/test_generator.cpp

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

#include "m2c/generator.hpp"
#include "m2c/grad_check.hpp"

using namespace m2c;

namespace {

GeneratorConfig toy_config(int vocab = 13) {
  GeneratorConfig cfg;
  cfg.vocab = vocab;
  cfg.embed_dim = 4;
  cfg.num_heads = 2;
  cfg.num_slots = 2;
  cfg.noise_dim = 3;
  cfg.feature_dim = 5;
  cfg.max_len = 50;
  return cfg;
}

double entropy(const std::vector<double>& p) {
  double h = 0;
  for (double v : p)
    if (v > 0) h -= v * std::log(v);
  return h;
}

}  // namespace

TEST(InitState, ZeroInputsGiveZeroMemory) {
  RngStream rng(1);
  GeneratorModel g = GeneratorModel::init(toy_config(), rng);
  Tensor e = Tensor::zeros({5});
  Tensor noise = Tensor::zeros({3});
  Tensor m = g.init_state(e, noise);  // bias is zero-initialized
  EXPECT_EQ(m.shape(), (Shape{2, 8}));
  for (double v : m.value()) EXPECT_DOUBLE_EQ(v, 0.0);
}

TEST(InitState, DeterministicAndNoiseSensitive) {
  RngStream rng(2);
  GeneratorModel g = GeneratorModel::init(toy_config(), rng);
  RngStream draws(3);
  Tensor e = Tensor::randn({5}, draws);
  Tensor n1 = Tensor::randn({3}, draws);
  Tensor n2 = Tensor::randn({3}, draws);
  EXPECT_EQ(g.init_state(e, n1).value(), g.init_state(e, n1).value());
  EXPECT_NE(g.init_state(e, n1).value(), g.init_state(e, n2).value());
}

TEST(MemoryStep, AttentionRowsSumToOneAndHaveSlotsPlusOneColumns) {
  RngStream rng(4);
  GeneratorConfig cfg = toy_config();
  cfg.num_slots = 1;
  GeneratorModel g = GeneratorModel::init(cfg, rng);
  RngStream draws(5);
  Tensor m = Tensor::randn({1, 8}, draws);
  Tensor v = Tensor::randn({4}, draws);
  GeneratorModel::StepTrace trace;
  NoGradGuard ng;
  g.memory_step(m, v, &trace);
  ASSERT_EQ(trace.attention.size(), 2u);  // one matrix per head
  for (const Tensor& a : trace.attention) {
    // One slot plus the input row.
    EXPECT_EQ(a.shape(), (Shape{1, 2}));
    double sum = 0;
    for (double x : a.value()) sum += x;
    EXPECT_NEAR(sum, 1.0, 1e-6);
  }
}

TEST(MemoryStep, PureFunctionBitwise) {
  RngStream rng(6);
  GeneratorModel g = GeneratorModel::init(toy_config(), rng);
  RngStream draws(7);
  Tensor m = Tensor::randn({2, 8}, draws);
  Tensor v = Tensor::randn({4}, draws);
  NoGradGuard ng;
  auto [m1, o1] = g.memory_step(m, v);
  auto [m2, o2] = g.memory_step(m, v);
  EXPECT_EQ(m1.value(), m2.value());
  EXPECT_EQ(o1.value(), o2.value());
}

TEST(MemoryStep, StepwiseDistributionsAreValid) {
  RngStream rng(8);
  GeneratorModel g = GeneratorModel::init(toy_config(), rng);
  RngStream draws(9);
  Tensor e = Tensor::randn({5}, draws);
  Tensor noise = Tensor::randn({3}, draws);
  NoGradGuard ng;
  Tensor m = g.init_state(e, noise);
  Tensor v = g.token_embedding(kBos);
  for (int t = 0; t < 6; ++t) {
    auto [next, logits] = g.memory_step(m, v);
    m = next;
    Tensor p = softmax_rows(logits);
    double sum = 0;
    for (double x : p.value()) {
      EXPECT_GE(x, 0.0);
      sum += x;
    }
    EXPECT_NEAR(sum, 1.0, 1e-6);
    v = g.token_embedding(static_cast<int>(argmax(p.value())));
  }
}

TEST(MleLoss, UniformModelClosedForm) {
  RngStream rng(10);
  GeneratorConfig cfg = toy_config(100);
  GeneratorModel g = GeneratorModel::init(cfg, rng);
  // Zero every parameter: logits are identically zero -> uniform model.
  for (auto& p : g.named_params())
    std::fill(p.tensor.value().begin(), p.tensor.value().end(), 0.0);
  Tensor e = Tensor::zeros({5});
  Tensor noise = Tensor::zeros({3});
  std::vector<int> content(18, 7);  // 18 tokens + EOS = 19 predictions
  NoGradGuard ng;
  double loss = g.mle_loss(e, noise, content).item();
  EXPECT_NEAR(loss, 19.0 * std::log(100.0), 1e-9);
}

TEST(MleLoss, GradCheckToyDims) {
  RngStream rng(11);
  GeneratorModel g = GeneratorModel::init(toy_config(9), rng);
  RngStream draws(12);
  Tensor e = Tensor::randn({5}, draws);
  Tensor noise = Tensor::randn({3}, draws);
  std::vector<int> content{6, 7, 8, 6};
  ParamList params = g.named_params();
  double err = grad_check_params(
      [&]() { return g.mle_loss(e, noise, content); }, params, 1e-5);
  EXPECT_LT(err, 1e-4);
}

TEST(MleLoss, GradientsReachFeatureGraph) {
  RngStream rng(13);
  GeneratorModel g = GeneratorModel::init(toy_config(9), rng);
  RngStream draws(14);
  Tensor e = Tensor::randn({5}, draws, 1.0, /*requires_grad=*/true);
  Tensor noise = Tensor::randn({3}, draws);
  Tensor loss = g.mle_loss(e, noise, {6, 7, 8});
  backward(loss);
  double norm = 0;
  for (double v : e.grad()) norm += v * v;
  EXPECT_GT(norm, 0.0);  // joint training path is open
}

TEST(GumbelSoftmax, SumsToOneAndRejectsBadBeta) {
  RngStream rng(15);
  GeneratorModel g = GeneratorModel::init(toy_config(11), rng);
  RngStream draws(16);
  Tensor logits = Tensor::randn({11}, draws, 2.0);
  for (double beta : {0.3, 1.0, 7.0, 1e4}) {
    RngStream r(17);
    Tensor u = gumbel_softmax_sample(logits, beta, r);
    double sum = 0;
    for (double v : u.value()) sum += v;
    EXPECT_NEAR(sum, 1.0, 1e-6);
  }
  RngStream r(18);
  EXPECT_THROW(gumbel_softmax_sample(logits, 0.0, r), Error);
  EXPECT_THROW(gumbel_softmax_sample(logits, -2.0, r), Error);
}

TEST(GumbelSoftmax, LargeBetaIsNearOneHotAtTheRightIndex) {
  RngStream draws(19);
  Tensor logits = Tensor::randn({9}, draws, 1.5);
  Tensor log_pi = log_softmax_rows(logits);
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    RngStream a(900 + seed), b(900 + seed);
    Tensor u = gumbel_softmax_sample(logits, 1e4, a);
    // Recreate the same Gumbel draws to find argmax(g + log pi).
    std::size_t want = 0;
    double best = -1e300;
    for (std::size_t i = 0; i < 9; ++i) {
      double x = b.gumbel() + log_pi.value()[i];
      if (x > best) {
        best = x;
        want = i;
      }
    }
    EXPECT_EQ(argmax(u.value()), want);
    EXPECT_GT(u.value()[want], 0.999);
  }
}

TEST(GumbelSoftmax, ReproducibleUnderSeed) {
  RngStream draws(20);
  Tensor logits = Tensor::randn({7}, draws);
  RngStream a(21), b(21);
  EXPECT_EQ(gumbel_softmax_sample(logits, 2.0, a).value(),
            gumbel_softmax_sample(logits, 2.0, b).value());
}

TEST(GumbelSoftmax, EntropyNonIncreasingAlongExponentialSchedule) {
  RngStream draws(22);
  Tensor logits = Tensor::randn({12}, draws, 1.0);
  const double beta_max = 100.0;
  const int levels = 10;
  std::vector<double> mean_entropy;
  for (int n = 0; n <= levels; ++n) {
    double beta = std::pow(beta_max, static_cast<double>(n) / levels);
    RngStream shared(123);  // same draws at every level
    double h = 0;
    for (int k = 0; k < 1000; ++k)
      h += entropy(gumbel_softmax_sample(logits, beta, shared).value());
    mean_entropy.push_back(h / 1000.0);
  }
  for (std::size_t i = 1; i < mean_entropy.size(); ++i)
    EXPECT_LE(mean_entropy[i], mean_entropy[i - 1] + 0.05);
}

TEST(AdjustEos, IdentityAndClosedForm) {
  std::vector<double> p(6, 0.16);
  p[kEos] = 0.2;
  // Renormalize exactly.
  double s = 0;
  for (double v : p) s += v;
  for (double& v : p) v /= s;
  Tensor probs = Tensor::from(p, {6});

  Tensor same = adjust_eos(probs, 1.0);
  for (std::size_t i = 0; i < 6; ++i)
    EXPECT_NEAR(same.value()[i], probs.value()[i], 1e-15);

  // [EOS 0.2, other 0.8] with lambda 2 -> [1/3, 2/3].
  std::vector<double> q(6, 0.16);
  q[kEos] = 0.2;
  double qs = 0;
  for (double v : q) qs += v;
  for (double& v : q) v /= qs;
  Tensor adjusted = adjust_eos(Tensor::from(q, {6}), 2.0);
  EXPECT_NEAR(adjusted.value()[kEos], 1.0 / 3.0, 1e-12);
  double rest = 0, total = 0;
  for (std::size_t i = 0; i < 6; ++i) {
    total += adjusted.value()[i];
    if (i != kEos) rest += adjusted.value()[i];
  }
  EXPECT_NEAR(rest, 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(total, 1.0, 1e-9);

  EXPECT_THROW(adjust_eos(probs, 0.0), Error);
  EXPECT_THROW(adjust_eos(probs, -1.0), Error);
}

TEST(UpdateLambda, FixedPointClosedFormAndClipping) {
  EXPECT_DOUBLE_EQ(update_lambda(1.7, 20.0, 20.0), 1.7);
  EXPECT_NEAR(update_lambda(1.0, 25.0, 20.0, 0.1), std::exp(0.025), 1e-12);
  EXPECT_DOUBLE_EQ(update_lambda(9.9, 100.0, 1.0, 5.0), 10.0);
  EXPECT_DOUBLE_EQ(update_lambda(0.11, 1.0, 100.0, 5.0), 0.1);
}

TEST(Generate, GreedyDeterministicBoundedAndTerminated) {
  RngStream rng(23);
  GeneratorModel g = GeneratorModel::init(toy_config(17), rng);
  RngStream draws(24);
  Tensor e = Tensor::randn({5}, draws);
  GenerateOptions opts;
  opts.mode = DecodeMode::kGreedy;
  RngStream r1(25), r2(25);
  opts.rng = &r1;
  auto a = g.generate(e, opts);
  opts.rng = &r2;
  auto b = g.generate(e, opts);
  EXPECT_EQ(a, b);
  EXPECT_GE(a.size(), 1u);
  EXPECT_LE(a.size(), 50u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == kEos) EXPECT_EQ(i, a.size() - 1);  // EOS only terminal
  }
}

TEST(SoftGenerate, SimplexRowsHardArgmaxAndGradFlow) {
  RngStream rng(26);
  GeneratorModel g = GeneratorModel::init(toy_config(11), rng);
  RngStream draws(27);
  Tensor e = Tensor::randn({5}, draws);
  Tensor noise = Tensor::randn({3}, draws);
  RngStream r(28);
  SoftSequence seq = g.soft_generate(e, noise, 2.0, 1.0, r);
  ASSERT_GE(seq.soft.dim(0), 1u);
  EXPECT_EQ(seq.soft.dim(1), 11u);
  EXPECT_EQ(seq.soft.dim(0), seq.hard.size());
  for (std::size_t t = 0; t < seq.soft.dim(0); ++t) {
    double sum = 0;
    double best = -1;
    std::size_t best_i = 0;
    for (std::size_t c = 0; c < 11; ++c) {
      double v = seq.soft.at(t, c);
      sum += v;
      if (v > best) {
        best = v;
        best_i = c;
      }
    }
    EXPECT_NEAR(sum, 1.0, 1e-6);
    EXPECT_EQ(static_cast<int>(best_i), seq.hard[t]);
  }
  EXPECT_EQ(seq.content_len,
            static_cast<int>(seq.hard.size()) -
                (seq.hard.back() == kEos ? 1 : 0));

  // The rollout is graph-connected to the generator parameters.
  g.embed.zero_grad();
  backward(mean_all(seq.soft));
  double norm = 0;
  for (double v : g.embed.grad()) norm += v * v;
  EXPECT_GT(norm, 0.0);
}

TEST(SoftGenerate, EosLambdaShiftsLengths) {
  RngStream rng(29);
  GeneratorModel g = GeneratorModel::init(toy_config(11), rng);
  RngStream draws(30);
  Tensor e = Tensor::randn({5}, draws);
  auto mean_len = [&](double lam, std::uint64_t seed) {
    NoGradGuard ng;
    RngStream r(seed);
    double total = 0;
    for (int k = 0; k < 40; ++k) {
      Tensor noise = Tensor::randn({3}, r);
      total += g.soft_generate(e, noise, 1.0, lam, r).content_len;
    }
    return total / 40.0;
  };
  // Strongly boosting EOS mass must shorten generations.
  EXPECT_LT(mean_len(10.0, 31), mean_len(0.1, 31));
}
