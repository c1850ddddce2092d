// m2c/discriminator.hpp

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

#ifndef M2C_DISCRIMINATOR_HPP_
#define M2C_DISCRIMINATOR_HPP_

#include <string>
#include <vector>

#include "m2c/text_cnn.hpp"

namespace m2c {

constexpr double kLogClamp = 1e-7;  // floor inside adversarial logs

/// Realness scorer: the shared CNN stack runs over each of the r sentence
/// representations, a linear head turns each pooled feature into a score,
/// and the final score is the average of the r sigmoid scores.
class DiscriminatorModel {
 public:
  TextCnn cnn;
  Tensor head_w, head_b;  // feat_dim -> 1, shared across representations

  static DiscriminatorModel init(const TextCnnConfig& cfg, RngStream& rng,
                                 double stddev = 0.1) {
    DiscriminatorModel m;
    m.cnn = TextCnn::init(cfg, rng, stddev);
    m.head_w = Tensor::randn({static_cast<std::size_t>(cfg.feat_dim()), 1},
                             rng, stddev, true);
    m.head_b = Tensor::zeros({1}, true);
    return m;
  }

  ParamList named_params() {
    ParamList out = cnn.named_params();
    out.push_back({"head_w", head_w});
    out.push_back({"head_b", head_b});
    return out;
  }

  DiscriminatorModel detached() const {
    DiscriminatorModel m;
    m.cnn = cnn.detached();
    m.head_w = head_w.detach();
    m.head_b = head_b.detach();
    return m;
  }

  /// Score in (0,1); soft (simplex-row) and hard (one-hot) sentences take
  /// the same path, so the two agree exactly at one-hot corners.
  Tensor score(const Tensor& sentence) const {
    Tensor total;
    auto feats = cnn.rep_features(sentence);
    for (std::size_t r = 0; r < feats.size(); ++r) {
      Tensor s = sigmoid(add(vecmat(feats[r], head_w), head_b));
      total = r == 0 ? s : add(total, s);
    }
    return scale(total, 1.0 / static_cast<double>(feats.size()));
  }

  Tensor score_ids(const std::vector<int>& ids) const {
    return score(cnn.onehot(ids));
  }
};

/// Realness loss over a batch of real/generated pairs: the batch mean of
/// log(1 - D(s_r)) + log(D(s_g)), logs clamped. Its minimizer drives
/// D(real) -> 1 and D(generated) -> 0.
inline Tensor d_loss(const DiscriminatorModel& d,
                     const std::vector<Tensor>& real,
                     const std::vector<Tensor>& generated) {
  M2C_CHECK(!real.empty() && real.size() == generated.size(),
            "d_loss: real/generated batches must be equal and nonempty");
  Tensor total;
  for (std::size_t i = 0; i < real.size(); ++i) {
    Tensor term =
        add(log_eps(add_scalar(neg(d.score(real[i])), 1.0), kLogClamp),
            log_eps(d.score(generated[i]), kLogClamp));
    total = i == 0 ? term : add(total, term);
  }
  return scale(total, 1.0 / static_cast<double>(real.size()));
}

/// Cross-entropy of a realness score against a (smoothed) target:
/// -(t log p + (1-t) log(1-p)).
inline Tensor score_cross_entropy(const Tensor& score, double target) {
  Tensor pos = scale(log_eps(score, kLogClamp), -target);
  Tensor ne = scale(log_eps(add_scalar(neg(score), 1.0), kLogClamp),
                    -(1.0 - target));
  return add(pos, ne);
}

/// Label-smoothed variant: per-sample targets (real ~ U[0.9,1],
/// generated ~ U[0,0.1]) drawn by the caller.
inline Tensor d_loss_smoothed(const DiscriminatorModel& d,
                              const std::vector<Tensor>& real,
                              const std::vector<Tensor>& generated,
                              const std::vector<double>& real_targets,
                              const std::vector<double>& fake_targets) {
  M2C_CHECK(real.size() == real_targets.size() &&
                generated.size() == fake_targets.size() && !real.empty(),
            "d_loss_smoothed: batch/target mismatch");
  Tensor total;
  std::size_t n = 0;
  for (std::size_t i = 0; i < real.size(); ++i, ++n) {
    Tensor t = score_cross_entropy(d.score(real[i]), real_targets[i]);
    total = n == 0 ? t : add(total, t);
  }
  for (std::size_t i = 0; i < generated.size(); ++i, ++n) {
    Tensor t = score_cross_entropy(d.score(generated[i]), fake_targets[i]);
    total = add(total, t);
  }
  return scale(total, 1.0 / static_cast<double>(n));
}

/// Adversarial generator loss, batch mean of log(1 - D(s_g)). The
/// discriminator inside is detached: only the generator (through the soft
/// sentences) receives gradients.
inline Tensor g_loss_adv(const DiscriminatorModel& d,
                         const std::vector<Tensor>& generated) {
  M2C_CHECK(!generated.empty(), "g_loss_adv: empty batch");
  DiscriminatorModel frozen = d.detached();
  Tensor total;
  for (std::size_t i = 0; i < generated.size(); ++i) {
    Tensor term =
        log_eps(add_scalar(neg(frozen.score(generated[i])), 1.0), kLogClamp);
    total = i == 0 ? term : add(total, term);
  }
  return scale(total, 1.0 / static_cast<double>(generated.size()));
}

}  // namespace m2c

#endif  // M2C_DISCRIMINATOR_HPP_
