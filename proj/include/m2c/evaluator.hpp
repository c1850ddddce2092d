// m2c/evaluator.hpp

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

#ifndef M2C_EVALUATOR_HPP_
#define M2C_EVALUATOR_HPP_

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "m2c/discriminator.hpp"
#include "m2c/text_cnn.hpp"

namespace m2c {

struct EvaluatorConfig {
  TextCnnConfig cnn;
  int feature_dim = 128;           // audio feature width
  bool concat_interaction = false; // elementwise product by default
};

/// Topic scorer V(s, e): the same CNN family as the realness scorer
/// encodes the sentence, the text feature is forced to the audio feature
/// width and combined with e (elementwise product, or concatenation behind
/// the flag), and a two-layer perceptron with a sigmoid head scores the
/// match. One score per representation, averaged.
class EvaluatorModel {
 public:
  EvaluatorConfig cfg;
  TextCnn cnn;
  Tensor text_w, text_b;     // feat_dim -> feature_dim
  Tensor mlp_w1, mlp_b1;     // interaction -> hidden
  Tensor mlp_w2, mlp_b2;     // hidden -> 1

  static EvaluatorModel init(const EvaluatorConfig& cfg, RngStream& rng,
                             double stddev = 0.1) {
    M2C_CHECK(cfg.feature_dim >= 1, "bad evaluator feature width");
    EvaluatorModel m;
    m.cfg = cfg;
    m.cnn = TextCnn::init(cfg.cnn, rng, stddev);
    std::size_t d = static_cast<std::size_t>(cfg.feature_dim);
    std::size_t in = cfg.concat_interaction ? 2 * d : d;
    m.text_w = Tensor::randn({static_cast<std::size_t>(cfg.cnn.feat_dim()), d},
                             rng, stddev, true);
    m.text_b = Tensor::zeros({d}, true);
    m.mlp_w1 = Tensor::randn({in, d}, rng, stddev, true);
    m.mlp_b1 = Tensor::zeros({d}, true);
    m.mlp_w2 = Tensor::randn({d, 1}, rng, stddev, true);
    m.mlp_b2 = Tensor::zeros({1}, true);
    return m;
  }

  ParamList named_params() {
    ParamList out = cnn.named_params();
    out.push_back({"text_w", text_w});
    out.push_back({"text_b", text_b});
    out.push_back({"mlp_w1", mlp_w1});
    out.push_back({"mlp_b1", mlp_b1});
    out.push_back({"mlp_w2", mlp_w2});
    out.push_back({"mlp_b2", mlp_b2});
    return out;
  }

  EvaluatorModel detached() const {
    EvaluatorModel m;
    m.cfg = cfg;
    m.cnn = cnn.detached();
    m.text_w = text_w.detach();
    m.text_b = text_b.detach();
    m.mlp_w1 = mlp_w1.detach();
    m.mlp_b1 = mlp_b1.detach();
    m.mlp_w2 = mlp_w2.detach();
    m.mlp_b2 = mlp_b2.detach();
    return m;
  }

  /// V(s, e) in (0,1). `sentence` is one-hot or simplex rows; `e` must be
  /// feature_dim wide.
  Tensor score(const Tensor& sentence, const Tensor& e) const {
    M2C_CHECK(e.rank() == 1 &&
                  e.dim(0) == static_cast<std::size_t>(cfg.feature_dim),
              "evaluator: audio feature must be [", cfg.feature_dim,
              "], got ", shape_str(e.shape()));
    auto feats = cnn.rep_features(sentence);
    Tensor total;
    for (std::size_t r = 0; r < feats.size(); ++r) {
      Tensor text_feat = add(vecmat(feats[r], text_w), text_b);
      Tensor interact = cfg.concat_interaction ? concat_cols(text_feat, e)
                                               : mul(text_feat, e);
      Tensor hidden = m2c::tanh(add(vecmat(interact, mlp_w1), mlp_b1));
      Tensor s = sigmoid(add(vecmat(hidden, mlp_w2), mlp_b2));
      total = r == 0 ? s : add(total, s);
    }
    return scale(total, 1.0 / static_cast<double>(feats.size()));
  }

  Tensor score_ids(const std::vector<int>& ids, const Tensor& e) const {
    return score(cnn.onehot(ids), e);
  }
};

/// Uniform draw over songs other than `current_song`. The caller encodes a
/// random clip of the chosen song to obtain the negative feature.
inline std::pair<int, int> sample_negative(
    const std::vector<std::vector<int>>& clips_by_song, int current_song,
    RngStream& rng) {
  int n = static_cast<int>(clips_by_song.size());
  M2C_CHECK(n >= 2, "sample_negative: need at least two songs, got ", n);
  M2C_CHECK(current_song >= 0 && current_song < n,
            "sample_negative: bad song index");
  int pick = static_cast<int>(rng.uniform_int(0, n - 2));
  if (pick >= current_song) ++pick;
  const auto& clips = clips_by_song[static_cast<std::size_t>(pick)];
  M2C_CHECK(!clips.empty(), "sample_negative: song ", pick, " has no clips");
  int clip = clips[static_cast<std::size_t>(
      rng.uniform_int(0, static_cast<std::int64_t>(clips.size()) - 1))];
  return {pick, clip};
}

/// Topic loss on real sentences only (the API takes hard token ids, so a
/// relaxed generated sentence cannot be passed in): batch mean of
/// log(1 - V(s_r, e_pos)) + log(V(s_r, e_neg)). Minimizing drives matched
/// pairs to 1 and mismatched ones to 0.
inline Tensor v_loss(const EvaluatorModel& v,
                     const std::vector<std::vector<int>>& real_ids,
                     const std::vector<Tensor>& e_pos,
                     const std::vector<Tensor>& e_neg) {
  M2C_CHECK(!real_ids.empty() && real_ids.size() == e_pos.size() &&
                real_ids.size() == e_neg.size(),
            "v_loss: batch size mismatch");
  Tensor total;
  for (std::size_t i = 0; i < real_ids.size(); ++i) {
    Tensor s = v.cnn.onehot(real_ids[i]);
    Tensor term =
        add(log_eps(add_scalar(neg(v.score(s, e_pos[i])), 1.0), kLogClamp),
            log_eps(v.score(s, e_neg[i]), kLogClamp));
    total = i == 0 ? term : add(total, term);
  }
  return scale(total, 1.0 / static_cast<double>(real_ids.size()));
}

/// Label-smoothed topic loss; matched targets ~ U[0.9,1], mismatched
/// ~ U[0,0.1], drawn by the caller.
inline Tensor v_loss_smoothed(const EvaluatorModel& v,
                              const std::vector<std::vector<int>>& real_ids,
                              const std::vector<Tensor>& e_pos,
                              const std::vector<Tensor>& e_neg,
                              const std::vector<double>& pos_targets,
                              const std::vector<double>& neg_targets) {
  M2C_CHECK(!real_ids.empty() && real_ids.size() == e_pos.size() &&
                real_ids.size() == e_neg.size() &&
                real_ids.size() == pos_targets.size() &&
                real_ids.size() == neg_targets.size(),
            "v_loss_smoothed: batch size mismatch");
  Tensor total;
  for (std::size_t i = 0; i < real_ids.size(); ++i) {
    Tensor s = v.cnn.onehot(real_ids[i]);
    Tensor term =
        add(score_cross_entropy(v.score(s, e_pos[i]), pos_targets[i]),
            score_cross_entropy(v.score(s, e_neg[i]), neg_targets[i]));
    total = i == 0 ? term : add(total, term);
  }
  return scale(total, 1.0 / (2.0 * static_cast<double>(real_ids.size())));
}

/// Thematic generator loss, batch mean of log(1 - V(s_g, e_pos)). The
/// evaluator inside is detached: its parameters receive no gradient, only
/// the generator does (through the soft sentences).
inline Tensor g_loss_topic(const EvaluatorModel& v,
                           const std::vector<Tensor>& generated,
                           const std::vector<Tensor>& e_pos) {
  M2C_CHECK(!generated.empty() && generated.size() == e_pos.size(),
            "g_loss_topic: batch size mismatch");
  EvaluatorModel frozen = v.detached();
  Tensor total;
  for (std::size_t i = 0; i < generated.size(); ++i) {
    Tensor term = log_eps(
        add_scalar(neg(frozen.score(generated[i], e_pos[i])), 1.0), kLogClamp);
    total = i == 0 ? term : add(total, term);
  }
  return scale(total, 1.0 / static_cast<double>(generated.size()));
}

}  // namespace m2c

#endif  // M2C_EVALUATOR_HPP_
