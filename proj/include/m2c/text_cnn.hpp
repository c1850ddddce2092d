// m2c/text_cnn.hpp

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

#ifndef M2C_TEXT_CNN_HPP_
#define M2C_TEXT_CNN_HPP_

#include <string>
#include <vector>

#include "m2c/ops.hpp"
#include "m2c/rng.hpp"
#include "m2c/tensor.hpp"
#include "m2c/text.hpp"

namespace m2c {

struct TextCnnConfig {
  int vocab = 0;
  int embed_dim = 128;
  int reps = 3;                      // independent embedding matrices
  int filters = 64;                  // per window width
  std::vector<int> widths = {2, 3, 4};
  int max_len = 50;                  // sentences padded to this length

  int feat_dim() const { return filters * static_cast<int>(widths.size()); }
};

/// Sentence encoder shared by the realness and topic scorers: r independent
/// embeddings of the same token rows, one shared convolution stack over the
/// token axis (several window widths, max-over-time pooling), one feature
/// vector per representation. Token rows may be one-hot (real text) or
/// simplex rows from the relaxed sampler; embeddings are applied by matrix
/// product so soft inputs stay differentiable. The PAD embedding row is
/// fixed at zero via a constant mask.
class TextCnn {
 public:
  TextCnnConfig cfg;
  std::vector<Tensor> embeds;        // reps x [vocab x embed_dim]
  std::vector<Tensor> conv_w;        // per width, [w x embed_dim x filters]
  std::vector<Tensor> conv_b;        // per width, [filters]

  static TextCnn init(const TextCnnConfig& cfg, RngStream& rng,
                      double stddev = 0.1) {
    M2C_CHECK(cfg.vocab > kNumReserved, "text cnn vocab too small");
    M2C_CHECK(cfg.reps >= 1, "need at least one representation");
    M2C_CHECK(!cfg.widths.empty(), "no convolution widths");
    for (int w : cfg.widths)
      M2C_CHECK(w >= 1 && w <= cfg.max_len, "bad conv width ", w);
    TextCnn t;
    t.cfg = cfg;
    std::size_t v = static_cast<std::size_t>(cfg.vocab);
    std::size_t d = static_cast<std::size_t>(cfg.embed_dim);
    for (int r = 0; r < cfg.reps; ++r)
      t.embeds.push_back(Tensor::randn({v, d}, rng, stddev, true));
    for (int w : cfg.widths) {
      t.conv_w.push_back(Tensor::randn(
          {static_cast<std::size_t>(w), d,
           static_cast<std::size_t>(cfg.filters)},
          rng, stddev, true));
      t.conv_b.push_back(
          Tensor::zeros({static_cast<std::size_t>(cfg.filters)}, true));
    }
    t.build_pad_mask();
    return t;
  }

  ParamList named_params(const std::string& prefix = "") {
    ParamList out;
    for (std::size_t r = 0; r < embeds.size(); ++r)
      out.push_back({prefix + "embed" + std::to_string(r), embeds[r]});
    for (std::size_t w = 0; w < conv_w.size(); ++w) {
      out.push_back({prefix + "conv" + std::to_string(w) + "_w", conv_w[w]});
      out.push_back({prefix + "conv" + std::to_string(w) + "_b", conv_b[w]});
    }
    return out;
  }

  TextCnn detached() const {
    TextCnn t;
    t.cfg = cfg;
    for (const auto& e : embeds) t.embeds.push_back(e.detach());
    for (const auto& w : conv_w) t.conv_w.push_back(w.detach());
    for (const auto& b : conv_b) t.conv_b.push_back(b.detach());
    t.build_pad_mask();
    return t;
  }

  /// Validates token rows and pads with PAD one-hots up to max_len.
  Tensor pad_rows(const Tensor& sentence) const {
    M2C_CHECK(sentence.rank() == 2 &&
                  sentence.dim(1) == static_cast<std::size_t>(cfg.vocab),
              "sentence must be [T x vocab], got ",
              shape_str(sentence.shape()));
    std::size_t len = sentence.dim(0);
    M2C_CHECK(len >= 1 && len <= static_cast<std::size_t>(cfg.max_len),
              "sentence length ", len, " out of [1, ", cfg.max_len, "]");
    for (std::size_t r = 0; r < len; ++r) {
      double sum = 0;
      for (std::size_t c = 0; c < sentence.dim(1); ++c)
        sum += sentence.at(r, c);
      M2C_CHECK(std::abs(sum - 1.0) <= 1e-4, "sentence row ", r,
                " not in the simplex (sums to ", sum, ")");
    }
    if (len == static_cast<std::size_t>(cfg.max_len)) return sentence;
    std::vector<int> pads(static_cast<std::size_t>(cfg.max_len) - len, kPad);
    return concat_rows(sentence,
                       onehot_rows(pads, static_cast<std::size_t>(cfg.vocab)));
  }

  Tensor onehot(const std::vector<int>& ids) const {
    return onehot_rows(ids, static_cast<std::size_t>(cfg.vocab));
  }

  /// One pooled feature vector [feat_dim] per representation.
  std::vector<Tensor> rep_features(const Tensor& sentence) const {
    Tensor padded = pad_rows(sentence);
    std::vector<Tensor> feats;
    feats.reserve(embeds.size());
    for (const auto& emb : embeds) {
      Tensor table = mul(emb, pad_mask_);  // PAD row pinned at zero
      Tensor x = matmul(padded, table);    // [max_len x embed_dim]
      Tensor feat;
      for (std::size_t w = 0; w < conv_w.size(); ++w) {
        Tensor c = relu(add_bias(conv1d_valid(x, conv_w[w]), conv_b[w]));
        Tensor pooled = max_over_rows(c);  // [filters]
        feat = w == 0 ? pooled : concat_cols(feat, pooled);
      }
      feats.push_back(feat);
    }
    return feats;
  }

 private:
  void build_pad_mask() {
    std::vector<double> m(static_cast<std::size_t>(cfg.vocab) *
                              static_cast<std::size_t>(cfg.embed_dim),
                          1.0);
    for (int c = 0; c < cfg.embed_dim; ++c)
      m[static_cast<std::size_t>(kPad) * cfg.embed_dim + c] = 0.0;
    pad_mask_ = Tensor::from(std::move(m),
                             {static_cast<std::size_t>(cfg.vocab),
                              static_cast<std::size_t>(cfg.embed_dim)});
  }

  Tensor pad_mask_;  // constant
};

}  // namespace m2c

#endif  // M2C_TEXT_CNN_HPP_
