// tests/test_trainer.cpp

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
#include <filesystem>
#include <vector>

#include "m2c/synth.hpp"
#include "m2c/trainer.hpp"

using namespace m2c;
namespace fs = std::filesystem;

namespace {

fs::path corpus_dir() {
  static fs::path dir = [] {
    fs::path p = fs::temp_directory_path() / "m2c_trainer_corpus";
    fs::remove_all(p);
    SynthSpec spec;
    spec.num_songs = 3;
    spec.clips_per_song = 4;
    spec.comments_per_song = 12;
    spec.seed = 7;
    spec.clip_seconds = 0.5;  // 8000 samples at 16 kHz
    synth_corpus(p.string(), spec);
    return p;
  }();
  return dir;
}

TrainingConfig tiny_config() {
  TrainingConfig cfg;
  cfg.seed = 3;
  cfg.clip_seconds = 0.5;
  cfg.tokenizer = "word";
  cfg.feature_dim = 8;
  cfg.enc_channels = 3;
  cfg.enc_layers = 2;
  cfg.pool_window = 8000;
  cfg.heads = 2;
  cfg.slots = 1;
  cfg.noise_dim = 6;
  cfg.disc_reps = 2;
  cfg.disc_filters = 4;
  cfg.disc_widths = {2, 3};
  cfg.batch_pretrain = 4;
  cfg.batch_mle = 4;
  cfg.batch_gan = 3;
  cfg.iters_pretrain = 3;
  cfg.iters_mle = 6;
  cfg.iters_gan = 4;
  cfg.beta_max = 10.0;
  cfg.iters_eval = 3;
  cfg.batch_eval = 4;
  return cfg;
}

std::vector<double> all_values(ParamList params) {
  std::vector<double> out;
  for (auto& p : params)
    out.insert(out.end(), p.tensor.value().begin(), p.tensor.value().end());
  return out;
}

}  // namespace

TEST(BetaSchedule, EndpointsMidpointAndErrors) {
  EXPECT_DOUBLE_EQ(beta_schedule(0, 50, 123.0), 1.0);
  EXPECT_DOUBLE_EQ(beta_schedule(50, 50, 123.0), 123.0);
  EXPECT_NEAR(beta_schedule(50, 100, 100.0), 10.0, 1e-12);
  EXPECT_THROW(beta_schedule(51, 50, 10.0), Error);
  EXPECT_THROW(beta_schedule(-1, 50, 10.0), Error);
  EXPECT_THROW(beta_schedule(1, 50, 0.5), Error);
}

TEST(SmoothLabel, RangesAndMeans) {
  RngStream rng(1);
  double real_sum = 0, fake_sum = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    double r = smooth_label(true, rng);
    double f = smooth_label(false, rng);
    EXPECT_GE(r, 0.9);
    EXPECT_LE(r, 1.0);
    EXPECT_GE(f, 0.0);
    EXPECT_LE(f, 0.1);
    real_sum += r;
    fake_sum += f;
  }
  EXPECT_NEAR(real_sum / n, 0.95, 0.005);
  EXPECT_NEAR(fake_sum / n, 0.05, 0.005);
}

TEST(SmoothedLoss, BoundedBelowByTargetEntropy) {
  // Cross entropy against target t is at least the binary entropy H(t), so
  // the smoothed realness loss can never reach the unsmoothed minimum.
  RngStream rng(2);
  TextCnnConfig cfg;
  cfg.vocab = 12;
  cfg.embed_dim = 4;
  cfg.reps = 2;
  cfg.filters = 3;
  cfg.widths = {2};
  cfg.max_len = 8;
  auto entropy = [](double t) {
    double h = 0;
    if (t > 0) h -= t * std::log(t);
    if (t < 1) h -= (1 - t) * std::log(1 - t);
    return h;
  };
  for (int trial = 0; trial < 10; ++trial) {
    DiscriminatorModel d = DiscriminatorModel::init(cfg, rng);
    std::vector<Tensor> real, fake;
    std::vector<double> tr, tf;
    for (int b = 0; b < 3; ++b) {
      std::vector<int> r{7, 8, 9, 10}, f{6, 6, 11, 7};
      real.push_back(d.cnn.onehot(r));
      fake.push_back(d.cnn.onehot(f));
      tr.push_back(smooth_label(true, rng));
      tf.push_back(smooth_label(false, rng));
    }
    double bound = 0;
    for (double t : tr) bound += entropy(t);
    for (double t : tf) bound += entropy(t);
    bound /= static_cast<double>(tr.size() + tf.size());
    NoGradGuard ng;
    double loss = d_loss_smoothed(d, real, fake, tr, tf).item();
    EXPECT_GE(loss, bound - 1e-9);
  }
}

TEST(Stages, OrderingEnforcedAndVocabChecked) {
  TrainingConfig cfg = tiny_config();
  Trainer trainer(cfg, load_train_data(cfg, corpus_dir().string()));
  TrainLogger quiet;
  Checkpoint enc_ck = trainer.pretrain_encoder(quiet);
  EXPECT_EQ(enc_ck.get_string("meta.stage"), "encoder");

  // The adversarial stage refuses a checkpoint that never saw the
  // teacher-forced stage.
  EXPECT_THROW(trainer.finetune_gan(enc_ck, quiet), Error);

  // A corpus with a different vocabulary is rejected.
  fs::path other = fs::temp_directory_path() / "m2c_trainer_other";
  fs::remove_all(other);
  SynthSpec spec;
  spec.num_songs = 3;
  spec.clips_per_song = 4;
  spec.comments_per_song = 12;
  spec.seed = 7;
  spec.clip_seconds = 0.5;
  synth_corpus(other.string(), spec);
  {
    std::ofstream extra(other / "comments.jsonl", std::ios::app);
    extra << R"({"audio_id":"song00","text":"novelword w1 w2 w3 w4 w5 w6 )"
          << R"(w7 w8 w9","votes":0})" << "\n";
  }
  Trainer mismatched(cfg, load_train_data(cfg, other.string()));
  EXPECT_THROW(mismatched.train_mle(enc_ck, quiet), Error);
}

TEST(Stages, GradientIsolationPerStepKind) {
  // One hand-built D step, V step, and G step over the stage-3 models:
  // each optimizer owns exactly its network, so the other parameter sets
  // must come out bitwise unchanged.
  TrainingConfig cfg = tiny_config();
  TrainData data = load_train_data(cfg, corpus_dir().string());
  RngStream rng(11);
  ModelDims dims =
      ModelDims::from_config(cfg, data.num_songs,
                             static_cast<int>(data.vocab.size()));
  EncoderModel enc = EncoderModel::init(dims.encoder_config(), rng);
  GeneratorModel gen = GeneratorModel::init(dims.generator_config(), rng);
  DiscriminatorModel disc = DiscriminatorModel::init(dims.disc_config(), rng);
  EvaluatorModel eval = EvaluatorModel::init(dims.eval_config(), rng);

  NoGradGuard* no = nullptr;  // (markers: graphs run with grads on)
  (void)no;
  std::vector<Tensor> feats;
  {
    NoGradGuard ng;
    for (const auto& c : data.clips) feats.push_back(enc.features(c.audio.samples));
  }
  auto sample = data.split.train[0];
  std::vector<int> toks = sample.tokens;
  toks.push_back(kEos);

  auto enc_v = all_values(enc.named_params());
  auto gen_v = all_values(gen.named_params());
  auto disc_v = all_values(disc.named_params());
  auto eval_v = all_values(eval.named_params());

  // D step.
  {
    AdamOptimizer opt(disc.named_params(), {1e-3});
    SoftSequence roll;
    {
      NoGradGuard ng;
      Tensor noise = Tensor::randn({6}, rng);
      roll = gen.soft_generate(feats[0], noise, 2.0, 1.0, rng);
    }
    opt.zero_grad();
    backward(d_loss(disc, {disc.cnn.onehot(toks)}, {roll.soft}));
    opt.step();
  }
  EXPECT_NE(all_values(disc.named_params()), disc_v);
  EXPECT_EQ(all_values(gen.named_params()), gen_v);
  EXPECT_EQ(all_values(eval.named_params()), eval_v);
  EXPECT_EQ(all_values(enc.named_params()), enc_v);

  // V step.
  disc_v = all_values(disc.named_params());
  {
    AdamOptimizer opt(eval.named_params(), {1e-3});
    opt.zero_grad();
    backward(v_loss(eval, {toks}, {feats[0]}, {feats[4]}));
    opt.step();
  }
  EXPECT_NE(all_values(eval.named_params()), eval_v);
  EXPECT_EQ(all_values(disc.named_params()), disc_v);
  EXPECT_EQ(all_values(gen.named_params()), gen_v);
  EXPECT_EQ(all_values(enc.named_params()), enc_v);

  // G step (encoder frozen).
  eval_v = all_values(eval.named_params());
  {
    AdamOptimizer opt(gen.named_params(), {1e-3});
    Tensor noise = Tensor::randn({6}, rng);
    SoftSequence roll = gen.soft_generate(feats[0], noise, 2.0, 1.0, rng);
    opt.zero_grad();
    Tensor loss = add(g_loss_adv(disc, {roll.soft}),
                      g_loss_topic(eval, {roll.soft}, {feats[0]}));
    backward(loss);
    opt.step();
  }
  EXPECT_NE(all_values(gen.named_params()), gen_v);
  EXPECT_EQ(all_values(disc.named_params()), disc_v);
  EXPECT_EQ(all_values(eval.named_params()), eval_v);
  EXPECT_EQ(all_values(enc.named_params()), enc_v);
}

TEST(Checkpoint, ValueExactTensorRoundTrip) {
  fs::path path = fs::temp_directory_path() / "m2c_ck_roundtrip.bin";
  Checkpoint ck;
  RngStream rng(5);
  Tensor t = Tensor::randn({3, 4}, rng, 1.7);
  ck.put_tensor("w", t);
  ck.put_string("s", "line1\nline2 ");
  ck.put_int("i", -42);
  ck.put_real("r", 0.1 + 0.2);
  ck.save(path.string());
  Checkpoint back = Checkpoint::load(path.string());
  EXPECT_EQ(back.get_values("w"), t.value());  // bitwise
  EXPECT_EQ(back.get_dims("w"), (Shape{3, 4}));
  EXPECT_EQ(back.get_string("s"), "line1\nline2 ");
  EXPECT_EQ(back.get_int("i"), -42);
  EXPECT_DOUBLE_EQ(back.get_real("r"), 0.1 + 0.2);
  EXPECT_THROW(back.get_values("missing"), Error);
}

TEST(Checkpoint, MleResumeReproducesUninterruptedRunBitwise) {
  std::string dir = corpus_dir().string();
  TrainingConfig cfg = tiny_config();
  TrainLogger quiet;

  // Shared stage-1 checkpoint.
  Checkpoint enc_ck;
  {
    Trainer t(cfg, load_train_data(cfg, dir));
    enc_ck = t.pretrain_encoder(quiet);
  }

  // Interrupted: pause after 3 of 6 steps, then resume to the end.
  Checkpoint resumed;
  {
    TrainingConfig paused = cfg;
    paused.stop_after = 3;
    Trainer t(paused, load_train_data(paused, dir));
    Checkpoint mid = t.train_mle(enc_ck, quiet);
    EXPECT_EQ(mid.get_int("meta.iteration"), 3);
    Trainer t2(cfg, load_train_data(cfg, dir));
    resumed = t2.train_mle(mid, quiet);
  }

  // Uninterrupted.
  Checkpoint straight;
  {
    Trainer t(cfg, load_train_data(cfg, dir));
    straight = t.train_mle(enc_ck, quiet);
  }

  for (const auto& name : straight.names()) {
    if (name.rfind("encoder.", 0) == 0 || name.rfind("generator.", 0) == 0) {
      EXPECT_EQ(resumed.get_values(name), straight.get_values(name))
          << name;  // bitwise
    }
  }
  EXPECT_EQ(resumed.get_string("trainer.rng"),
            straight.get_string("trainer.rng"));
}

TEST(Checkpoint, GanResumeReproducesUninterruptedRunBitwise) {
  std::string dir = corpus_dir().string();
  TrainingConfig cfg = tiny_config();
  TrainLogger quiet;

  Checkpoint mle_ck;
  {
    Trainer t(cfg, load_train_data(cfg, dir));
    Checkpoint enc_ck = t.pretrain_encoder(quiet);
    Trainer t2(cfg, load_train_data(cfg, dir));
    mle_ck = t2.train_mle(enc_ck, quiet);
  }

  Checkpoint resumed;
  {
    TrainingConfig paused = cfg;
    paused.stop_after = 2;
    Trainer t(paused, load_train_data(paused, dir));
    Checkpoint mid = t.finetune_gan(mle_ck, quiet);
    Trainer t2(cfg, load_train_data(cfg, dir));
    resumed = t2.finetune_gan(mid, quiet);
  }

  Checkpoint straight;
  {
    Trainer t(cfg, load_train_data(cfg, dir));
    straight = t.finetune_gan(mle_ck, quiet);
  }

  for (const auto& name : straight.names()) {
    if (name.rfind("encoder.", 0) == 0 || name.rfind("generator.", 0) == 0 ||
        name.rfind("discriminator.", 0) == 0 ||
        name.rfind("evaluator.", 0) == 0) {
      EXPECT_EQ(resumed.get_values(name), straight.get_values(name)) << name;
    }
  }
  EXPECT_DOUBLE_EQ(resumed.get_real("trainer.lambda_eos"),
                   straight.get_real("trainer.lambda_eos"));
  EXPECT_EQ(resumed.get_string("trainer.rng"),
            straight.get_string("trainer.rng"));
}

TEST(MetricsEvaluator, TrainsAndSavesStandaloneCheckpoint) {
  TrainingConfig cfg = tiny_config();
  Trainer t(cfg, load_train_data(cfg, corpus_dir().string()));
  TrainLogger quiet;
  Checkpoint enc_ck = t.pretrain_encoder(quiet);
  Checkpoint ev_ck = t.train_metrics_evaluator(enc_ck, quiet);
  EXPECT_EQ(ev_ck.get_string("meta.stage"), "evaluator");
  EvaluatorModel eval = Trainer::evaluator_from(ev_ck);
  EncoderModel enc = Trainer::encoder_from(ev_ck);
  NoGradGuard ng;
  TrainData data = load_train_data(cfg, corpus_dir().string());
  Tensor e = enc.features(data.clips[0].audio.samples);
  std::vector<int> toks = data.split.train[0].tokens;
  double s = eval.score_ids(toks, e).item();
  EXPECT_GT(s, 0.0);
  EXPECT_LT(s, 1.0);
}
