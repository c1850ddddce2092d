// m2c/generator.hpp

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

#ifndef M2C_GENERATOR_HPP_
#define M2C_GENERATOR_HPP_

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "m2c/ops.hpp"
#include "m2c/rng.hpp"
#include "m2c/tensor.hpp"
#include "m2c/text.hpp"

namespace m2c {

struct GeneratorConfig {
  int vocab = 0;
  int embed_dim = 128;    // word embedding width = per-head attention dim
  int num_heads = 2;
  int num_slots = 1;
  int noise_dim = 128;
  int feature_dim = 128;  // audio feature width
  int max_len = 50;

  int memory_width() const { return num_heads * embed_dim; }
};

/// EOS probability rescaling: multiply the EOS entry by lambda, then
/// renormalize. lambda = 1 is the identity.
inline Tensor adjust_eos(const Tensor& probs, double lambda) {
  M2C_CHECK(lambda > 0, "adjust_eos: lambda must be positive, got ", lambda);
  M2C_CHECK(probs.rank() == 1 && probs.dim(0) > static_cast<std::size_t>(kEos),
            "adjust_eos: expected a vocab distribution");
  double sum = 0;
  for (double v : probs.value()) sum += v;
  M2C_CHECK(std::abs(sum - 1.0) < 1e-4, "adjust_eos: input not a distribution"
            " (sums to ", sum, ")");
  std::vector<double> mask(probs.dim(0), 1.0);
  mask[kEos] = lambda;
  Tensor scaled = mul(probs, Tensor::from(std::move(mask), probs.shape()));
  return scale_by(scaled, reciprocal(sum_all(scaled)));
}

/// Multiplicative-exponential controller for the EOS factor: longer-than-
/// target generations raise lambda (more EOS mass), shorter ones lower it.
/// Clipped to [0.1, 10].
inline double update_lambda(double lambda, double mean_gen_len,
                            double target_len, double eta = 0.1) {
  M2C_CHECK(target_len > 0, "update_lambda: target length must be positive");
  double next =
      lambda * std::exp(eta * (mean_gen_len - target_len) / target_len);
  return std::clamp(next, 0.1, 10.0);
}

/// One draw of the categorical relaxation u = softmax(beta * (g + log pi))
/// with pi = softmax(logits) and g ~ Gumbel(0,1). Differentiable w.r.t.
/// the logits; beta is the inverse temperature.
inline Tensor gumbel_softmax_sample(const Tensor& logits, double beta,
                                    RngStream& rng) {
  M2C_CHECK(beta > 0, "gumbel_softmax_sample: beta must be positive, got ",
            beta);
  M2C_CHECK(logits.rank() == 1, "gumbel_softmax_sample: logits vector");
  std::vector<double> g(logits.dim(0));
  for (double& x : g) x = rng.gumbel();
  Tensor noise = Tensor::from(std::move(g), logits.shape());
  return softmax_rows(scale(add(noise, log_softmax_rows(logits)), beta));
}

enum class DecodeMode { kGreedy, kSample };

struct GenerateOptions {
  DecodeMode mode = DecodeMode::kGreedy;
  int max_len = 50;
  double eos_lambda = 1.0;   // applied only when adjust_eos_enabled
  bool adjust_eos_enabled = false;
  RngStream* rng = nullptr;  // noise draw; sampling in kSample mode
};

/// Differentiable rollout: simplex token rows plus the hard (argmax) ids.
struct SoftSequence {
  Tensor soft;             // [T x vocab], graph-connected
  std::vector<int> hard;   // argmax per step, EOS included if emitted
  int content_len = 0;     // tokens before EOS
};

/// Autoregressive text generator whose state is a set of memory slots
/// updated by two-head self-attention over [slots; input embedding].
class GeneratorModel {
 public:
  GeneratorConfig cfg;
  Tensor embed;                        // [vocab x d]
  std::vector<Tensor> wq, wk, wv;      // per head, [d x d]
  Tensor f1_w1, f1_b1, f1_w2, f1_b2;   // update candidate MLP (with skip)
  Tensor gate_mi, gate_ci, gate_bi;    // input gate
  Tensor gate_mf, gate_cf, gate_bf;    // forget gate
  Tensor out_w1, out_b1;               // (attended, memory) -> d
  Tensor vocab_w, vocab_b;             // d -> vocab logits
  Tensor init_w, init_b;               // [feature; noise] -> memory slots

  static GeneratorModel init(const GeneratorConfig& cfg, RngStream& rng,
                             double stddev = 0.1) {
    M2C_CHECK(cfg.vocab > kNumReserved, "generator vocab too small");
    M2C_CHECK(cfg.num_heads >= 1 && cfg.num_slots >= 1 && cfg.embed_dim >= 1,
              "bad generator config");
    M2C_CHECK(cfg.max_len >= 1, "bad max_len");
    GeneratorModel m;
    m.cfg = cfg;
    std::size_t v = static_cast<std::size_t>(cfg.vocab);
    std::size_t d = static_cast<std::size_t>(cfg.embed_dim);
    std::size_t w = static_cast<std::size_t>(cfg.memory_width());
    std::size_t s = static_cast<std::size_t>(cfg.num_slots);
    m.embed = Tensor::randn({v, d}, rng, stddev, true);
    for (int h = 0; h < cfg.num_heads; ++h) {
      m.wq.push_back(Tensor::randn({d, d}, rng, stddev, true));
      m.wk.push_back(Tensor::randn({d, d}, rng, stddev, true));
      m.wv.push_back(Tensor::randn({d, d}, rng, stddev, true));
    }
    m.f1_w1 = Tensor::randn({w, w}, rng, stddev, true);
    m.f1_b1 = Tensor::zeros({w}, true);
    m.f1_w2 = Tensor::randn({w, w}, rng, stddev, true);
    m.f1_b2 = Tensor::zeros({w}, true);
    m.gate_mi = Tensor::randn({w, w}, rng, stddev, true);
    m.gate_ci = Tensor::randn({w, w}, rng, stddev, true);
    m.gate_bi = Tensor::zeros({w}, true);
    m.gate_mf = Tensor::randn({w, w}, rng, stddev, true);
    m.gate_cf = Tensor::randn({w, w}, rng, stddev, true);
    // High forget bias keeps the initial state alive across a sentence.
    m.gate_bf = Tensor::full({w}, 2.0, true);
    m.out_w1 = Tensor::randn({2 * s * w, d}, rng, stddev, true);
    m.out_b1 = Tensor::zeros({d}, true);
    m.vocab_w = Tensor::randn({d, v}, rng, stddev, true);
    m.vocab_b = Tensor::zeros({v}, true);
    m.init_w = Tensor::randn(
        {static_cast<std::size_t>(cfg.feature_dim + cfg.noise_dim), s * w},
        rng, stddev, true);
    m.init_b = Tensor::zeros({s * w}, true);
    return m;
  }

  ParamList named_params() {
    ParamList out = {{"embed", embed}};
    for (std::size_t h = 0; h < wq.size(); ++h) {
      out.push_back({"wq" + std::to_string(h), wq[h]});
      out.push_back({"wk" + std::to_string(h), wk[h]});
      out.push_back({"wv" + std::to_string(h), wv[h]});
    }
    out.push_back({"f1_w1", f1_w1});
    out.push_back({"f1_b1", f1_b1});
    out.push_back({"f1_w2", f1_w2});
    out.push_back({"f1_b2", f1_b2});
    out.push_back({"gate_mi", gate_mi});
    out.push_back({"gate_ci", gate_ci});
    out.push_back({"gate_bi", gate_bi});
    out.push_back({"gate_mf", gate_mf});
    out.push_back({"gate_cf", gate_cf});
    out.push_back({"gate_bf", gate_bf});
    out.push_back({"out_w1", out_w1});
    out.push_back({"out_b1", out_b1});
    out.push_back({"vocab_w", vocab_w});
    out.push_back({"vocab_b", vocab_b});
    out.push_back({"init_w", init_w});
    out.push_back({"init_b", init_b});
    return out;
  }

  /// Memory slots from [feature; noise], deterministically.
  Tensor init_state(const Tensor& feature, const Tensor& noise) const {
    M2C_CHECK(feature.rank() == 1 &&
                  feature.dim(0) == static_cast<std::size_t>(cfg.feature_dim),
              "init_state: feature width mismatch");
    M2C_CHECK(noise.rank() == 1 &&
                  noise.dim(0) == static_cast<std::size_t>(cfg.noise_dim),
              "init_state: noise width mismatch");
    Tensor z = concat_cols(feature, noise);
    Tensor m = add(vecmat(z, init_w), init_b);
    return reshape(m, {static_cast<std::size_t>(cfg.num_slots),
                       static_cast<std::size_t>(cfg.memory_width())});
  }

  struct StepTrace {
    std::vector<Tensor> attention;  // per head, [slots x (slots+1)]
  };

  /// One step: self-attention of the slots over [slots; input embedding]
  /// per head, gated residual update of the memory, and vocab logits.
  std::pair<Tensor, Tensor> memory_step(const Tensor& memory,
                                        const Tensor& v_embed,
                                        StepTrace* trace = nullptr) const {
    std::size_t d = static_cast<std::size_t>(cfg.embed_dim);
    std::size_t slots = static_cast<std::size_t>(cfg.num_slots);
    M2C_CHECK(memory.rank() == 2 && memory.dim(0) == slots &&
                  memory.dim(1) == static_cast<std::size_t>(cfg.memory_width()),
              "memory_step: bad memory shape ", shape_str(memory.shape()));
    M2C_CHECK(v_embed.rank() == 1 && v_embed.dim(0) == d,
              "memory_step: bad embedding width");

    Tensor attended;  // heads concatenated
    for (int h = 0; h < cfg.num_heads; ++h) {
      std::size_t h0 = static_cast<std::size_t>(h) * d;
      Tensor mh = slice_cols(memory, h0, h0 + d);          // [slots x d]
      Tensor kin = concat_rows(mh, v_embed);               // [slots+1 x d]
      Tensor q = matmul(mh, wq[static_cast<std::size_t>(h)]);
      Tensor k = matmul(kin, wk[static_cast<std::size_t>(h)]);
      Tensor val = matmul(kin, wv[static_cast<std::size_t>(h)]);
      Tensor scores =
          scale(matmul(q, transpose(k)), 1.0 / std::sqrt(static_cast<double>(d)));
      Tensor weights = softmax_rows(scores);
      if (trace) trace->attention.push_back(weights);
      Tensor att = matmul(weights, val);                   // [slots x d]
      attended = h == 0 ? att : concat_cols(attended, att);
    }

    // Candidate: two-layer perceptron on the attended slots plus a skip.
    Tensor hidden = m2c::tanh(add_bias(matmul(attended, f1_w1), f1_b1));
    Tensor cand = add(attended, add_bias(matmul(hidden, f1_w2), f1_b2));
    // Input/forget gates from the previous memory and the candidate.
    Tensor gi = sigmoid(add_bias(
        add(matmul(memory, gate_mi), matmul(cand, gate_ci)), gate_bi));
    Tensor gf = sigmoid(add_bias(
        add(matmul(memory, gate_mf), matmul(cand, gate_cf)), gate_bf));
    Tensor next = add(mul(gf, memory), mul(gi, m2c::tanh(cand)));

    // Output head reads both the attended slots and the previous memory.
    Tensor flat = reshape(concat_cols(attended, memory),
                          {2 * slots * static_cast<std::size_t>(
                                           cfg.memory_width())});
    Tensor h2 = m2c::tanh(add(vecmat(flat, out_w1), out_b1));
    Tensor logits = add(vecmat(h2, vocab_w), vocab_b);
    return {next, logits};
  }

  Tensor token_embedding(int id) const { return row(embed, check_id(id)); }

  Tensor soft_embedding(const Tensor& simplex) const {
    return vecmat(simplex, embed);
  }

  /// Teacher-forced negative log-likelihood of `content` (EOS appended)
  /// given the clip feature. Gradients flow into everything reachable,
  /// including the feature's graph.
  Tensor mle_loss(const Tensor& feature, const Tensor& noise,
                  const std::vector<int>& content) const {
    M2C_CHECK(!content.empty(), "mle_loss: empty sequence");
    std::vector<int> inputs;
    std::vector<int> targets;
    inputs.push_back(kBos);
    for (int id : content) {
      inputs.push_back(check_id(id));
      targets.push_back(id);
    }
    targets.push_back(kEos);
    Tensor memory = init_state(feature, noise);
    Tensor in_emb = embedding_lookup(embed, inputs);
    std::vector<Tensor> step_logits;
    step_logits.reserve(targets.size());
    for (std::size_t t = 0; t < targets.size(); ++t) {
      auto [next, logits] = memory_step(memory, row(in_emb, t));
      memory = next;
      step_logits.push_back(logits);
    }
    return cross_entropy_with_logits(concat_rows(step_logits), targets);
  }

  /// Discrete decoding from BOS. Greedy mode is deterministic given the
  /// feature, parameters, EOS factor, and the rng used for the noise draw.
  /// The returned sequence carries EOS as its last token when one was
  /// emitted before max_len.
  std::vector<int> generate(const Tensor& feature,
                            const GenerateOptions& opts) const {
    M2C_CHECK(opts.rng != nullptr, "generate: rng required");
    M2C_CHECK(opts.max_len >= 1 && opts.max_len <= cfg.max_len,
              "generate: max_len out of range");
    NoGradGuard no_grad;
    Tensor noise = Tensor::randn({static_cast<std::size_t>(cfg.noise_dim)},
                                 *opts.rng);
    Tensor memory = init_state(feature.detach(), noise);
    Tensor v = token_embedding(kBos);
    std::vector<int> out;
    for (int t = 0; t < opts.max_len; ++t) {
      auto [next, logits] = memory_step(memory, v);
      memory = next;
      Tensor probs = softmax_rows(logits);
      if (opts.adjust_eos_enabled) probs = adjust_eos(probs, opts.eos_lambda);
      int id;
      if (opts.mode == DecodeMode::kGreedy) {
        id = static_cast<int>(argmax(probs.value()));
      } else {
        id = sample_from(probs.value(), *opts.rng);
      }
      out.push_back(id);
      if (id == kEos) break;
      v = token_embedding(id);
    }
    return out;
  }

  /// Differentiable rollout through the categorical relaxation. At each
  /// step pi = softmax(logits) gets the EOS adjustment (in log space, which
  /// is the same distribution), a relaxed sample u is drawn at inverse
  /// temperature beta, and u's soft embedding feeds the next step. The
  /// rollout stops when the hard (argmax) token is EOS.
  SoftSequence soft_generate(const Tensor& feature, const Tensor& noise,
                             double beta, double eos_lambda,
                             RngStream& rng) const {
    M2C_CHECK(beta > 0, "soft_generate: beta must be positive");
    M2C_CHECK(eos_lambda > 0, "soft_generate: eos_lambda must be positive");
    std::size_t v = static_cast<std::size_t>(cfg.vocab);
    std::vector<double> eos_shift(v, 0.0);
    eos_shift[kEos] = std::log(eos_lambda);
    Tensor shift = Tensor::from(std::move(eos_shift), {v});

    Tensor memory = init_state(feature, noise);
    Tensor vemb = token_embedding(kBos);
    SoftSequence seq;
    std::vector<Tensor> soft_rows;
    for (int t = 0; t < cfg.max_len; ++t) {
      auto [next, logits] = memory_step(memory, vemb);
      memory = next;
      // log pi' = log_softmax(log_softmax(logits) + shift)
      Tensor log_pi = log_softmax_rows(add(log_softmax_rows(logits), shift));
      std::vector<double> g(v);
      for (double& x : g) x = rng.gumbel();
      Tensor u = softmax_rows(
          scale(add(Tensor::from(std::move(g), {v}), log_pi), beta));
      soft_rows.push_back(u);
      int hard = static_cast<int>(argmax(u.value()));
      seq.hard.push_back(hard);
      if (hard == kEos) break;
      ++seq.content_len;
      vemb = soft_embedding(u);
    }
    seq.soft = concat_rows(soft_rows);
    return seq;
  }

 private:
  int check_id(int id) const {
    M2C_CHECK(id >= 0 && id < cfg.vocab, "token id ", id, " out of range");
    return id;
  }

  static int sample_from(const std::vector<double>& probs, RngStream& rng) {
    double u = rng.uniform();
    double acc = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      acc += probs[i];
      if (u < acc) return static_cast<int>(i);
    }
    return static_cast<int>(probs.size() - 1);
  }
};

}  // namespace m2c

#endif  // M2C_GENERATOR_HPP_
