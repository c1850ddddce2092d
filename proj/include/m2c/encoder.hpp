// m2c/encoder.hpp

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

#ifndef M2C_ENCODER_HPP_
#define M2C_ENCODER_HPP_

#include <string>
#include <vector>

#include "m2c/ops.hpp"
#include "m2c/rng.hpp"
#include "m2c/tensor.hpp"
#include "m2c/wav.hpp"

namespace m2c {

struct EncoderConfig {
  int channels = 32;       // dilated conv width
  int layers = 6;          // dilations 1, 2, 4, ..., 2^(layers-1)
  int feature_dim = 128;   // summary feature width
  int pool_window = 8000;  // average pooling window (= stride), in samples
  int num_songs = 2;       // classifier head size
};

/// Audio feature extractor: a stack of non-causal dilated convolutions with
/// gated activations whose per-layer outputs are summed, average pooling
/// down to a short sequence, and an LSTM whose final hidden state is the
/// clip feature. A softmax head over song labels drives pretraining.
class EncoderModel {
 public:
  EncoderConfig cfg;
  Tensor in_w, in_b;                  // input projection 1 -> channels
  std::vector<Tensor> conv_w, conv_b; // per layer, kernels [3 x ch x 2ch]
  Tensor proj_w, proj_b;              // pooled channels -> feature_dim
  Tensor lstm_wx, lstm_wh, lstm_b;    // summarizer cell
  Tensor cls_w, cls_b;                // feature_dim -> num_songs

  static EncoderModel init(const EncoderConfig& cfg, RngStream& rng,
                           double stddev = 0.1) {
    M2C_CHECK(cfg.layers >= 1, "encoder needs at least one dilated layer");
    M2C_CHECK(cfg.channels >= 1 && cfg.feature_dim >= 1 &&
                  cfg.pool_window >= 1 && cfg.num_songs >= 1,
              "bad encoder config");
    EncoderModel m;
    m.cfg = cfg;
    std::size_t ch = static_cast<std::size_t>(cfg.channels);
    std::size_t d = static_cast<std::size_t>(cfg.feature_dim);
    std::size_t n = static_cast<std::size_t>(cfg.num_songs);
    m.in_w = Tensor::randn({1, ch}, rng, stddev, true);
    m.in_b = Tensor::zeros({ch}, true);
    for (int l = 0; l < cfg.layers; ++l) {
      m.conv_w.push_back(Tensor::randn({3, ch, 2 * ch}, rng, stddev, true));
      m.conv_b.push_back(Tensor::zeros({2 * ch}, true));
    }
    m.proj_w = Tensor::randn({ch, d}, rng, stddev, true);
    m.proj_b = Tensor::zeros({d}, true);
    m.lstm_wx = Tensor::randn({d, 4 * d}, rng, stddev, true);
    m.lstm_wh = Tensor::randn({d, 4 * d}, rng, stddev, true);
    m.lstm_b = Tensor::zeros({4 * d}, true);
    m.cls_w = Tensor::randn({d, n}, rng, stddev, true);
    m.cls_b = Tensor::zeros({n}, true);
    return m;
  }

  ParamList named_params() {
    ParamList out = {{"in_w", in_w}, {"in_b", in_b}};
    for (std::size_t l = 0; l < conv_w.size(); ++l) {
      out.push_back({"conv" + std::to_string(l) + "_w", conv_w[l]});
      out.push_back({"conv" + std::to_string(l) + "_b", conv_b[l]});
    }
    out.push_back({"proj_w", proj_w});
    out.push_back({"proj_b", proj_b});
    out.push_back({"lstm_wx", lstm_wx});
    out.push_back({"lstm_wh", lstm_wh});
    out.push_back({"lstm_b", lstm_b});
    out.push_back({"cls_w", cls_w});
    out.push_back({"cls_b", cls_b});
    return out;
  }

  /// Copy with constant parameters; forwards through it build no graph
  /// into the encoder weights.
  EncoderModel detached() const {
    EncoderModel m;
    m.cfg = cfg;
    m.in_w = in_w.detach();
    m.in_b = in_b.detach();
    for (std::size_t l = 0; l < conv_w.size(); ++l) {
      m.conv_w.push_back(conv_w[l].detach());
      m.conv_b.push_back(conv_b[l].detach());
    }
    m.proj_w = proj_w.detach();
    m.proj_b = proj_b.detach();
    m.lstm_wx = lstm_wx.detach();
    m.lstm_wh = lstm_wh.detach();
    m.lstm_b = lstm_b.detach();
    m.cls_w = cls_w.detach();
    m.cls_b = cls_b.detach();
    return m;
  }

  struct ForwardTrace {
    std::vector<Tensor> layer_outputs;  // per-layer gated activations
    Tensor layer_sum;
  };

  /// Clip feature e. Shorter clips than one pooling window are rejected.
  Tensor features(const std::vector<double>& samples,
                  ForwardTrace* trace = nullptr) const {
    std::size_t len = samples.size();
    M2C_CHECK(len >= static_cast<std::size_t>(cfg.pool_window),
              "clip of ", len, " samples shorter than pooling window ",
              cfg.pool_window);
    std::size_t ch = static_cast<std::size_t>(cfg.channels);
    Tensor x = Tensor::from(samples, {len, 1});
    Tensor h = add_bias(matmul(x, in_w), in_b);  // [L x ch]
    Tensor layer_sum;
    for (int l = 0; l < cfg.layers; ++l) {
      std::size_t dilation = static_cast<std::size_t>(1) << l;
      Tensor c = add_bias(conv1d_dilated(h, conv_w[static_cast<std::size_t>(l)],
                                         dilation),
                          conv_b[static_cast<std::size_t>(l)]);
      Tensor filt = m2c::tanh(slice_cols(c, 0, ch));
      Tensor gate = sigmoid(slice_cols(c, ch, 2 * ch));
      Tensor a = mul(filt, gate);
      layer_sum = l == 0 ? a : add(layer_sum, a);
      h = a;
      if (trace) trace->layer_outputs.push_back(a);
    }
    if (trace) trace->layer_sum = layer_sum;
    Tensor pooled = avg_pool1d(layer_sum,
                               static_cast<std::size_t>(cfg.pool_window),
                               static_cast<std::size_t>(cfg.pool_window));
    Tensor seq = add_bias(matmul(pooled, proj_w), proj_b);  // [T x d]
    return summarize(seq);
  }

  Tensor features(const Waveform& clip) const { return features(clip.samples); }

  /// Number of pooled steps a clip of `len` samples produces.
  std::size_t pooled_steps(std::size_t len) const {
    return len / static_cast<std::size_t>(cfg.pool_window);
  }

  Tensor class_logits(const Tensor& e) const {
    return add(vecmat(e, cls_w), cls_b);
  }

  Tensor class_probs(const Tensor& e) const {
    return softmax_rows(class_logits(e));
  }

  /// -log P(label | clip): cross entropy of the song classifier.
  Tensor loss(const std::vector<double>& samples, int label) const {
    Tensor logits = class_logits(features(samples));
    return cross_entropy_with_logits(logits, {label});
  }

 private:
  // Single-layer LSTM over the pooled sequence; returns the final hidden
  // state.
  Tensor summarize(const Tensor& seq) const {
    std::size_t d = static_cast<std::size_t>(cfg.feature_dim);
    std::size_t steps = seq.dim(0);
    Tensor h = Tensor::zeros({d});
    Tensor c = Tensor::zeros({d});
    for (std::size_t t = 0; t < steps; ++t) {
      Tensor xt = row(seq, t);
      Tensor gates = add(add(vecmat(xt, lstm_wx), vecmat(h, lstm_wh)), lstm_b);
      Tensor gm = reshape(gates, {4, d});
      Tensor gi = sigmoid(row(gm, 0));
      Tensor gf = sigmoid(row(gm, 1));
      Tensor go = sigmoid(row(gm, 2));
      Tensor gc = m2c::tanh(row(gm, 3));
      c = add(mul(gf, c), mul(gi, gc));
      h = mul(go, m2c::tanh(c));
    }
    return h;
  }
};

}  // namespace m2c

#endif  // M2C_ENCODER_HPP_
