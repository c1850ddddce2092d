// m2c/trainer.hpp

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

#ifndef M2C_TRAINER_HPP_
#define M2C_TRAINER_HPP_

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "m2c/adam.hpp"
#include "m2c/checkpoint.hpp"
#include "m2c/config.hpp"
#include "m2c/dataset.hpp"
#include "m2c/discriminator.hpp"
#include "m2c/encoder.hpp"
#include "m2c/evaluator.hpp"
#include "m2c/generator.hpp"
#include "m2c/text_cnn.hpp"

namespace m2c {

/// Exponential inverse-temperature schedule beta_n = beta_max^(n/N).
inline double beta_schedule(std::int64_t n, std::int64_t total,
                            double beta_max) {
  M2C_CHECK(total >= 1, "beta_schedule: total iterations must be >= 1");
  M2C_CHECK(n >= 0 && n <= total, "beta_schedule: iteration ", n,
            " outside [0, ", total, "]");
  M2C_CHECK(beta_max >= 1.0, "beta_schedule: beta_max must be >= 1");
  return std::pow(beta_max,
                  static_cast<double>(n) / static_cast<double>(total));
}

/// Smoothed target for the realness/topic scorers: real sentences draw
/// from U[0.9, 1], generated ones from U[0, 0.1].
inline double smooth_label(bool real, RngStream& rng) {
  return real ? rng.uniform(0.9, 1.0) : rng.uniform(0.0, 0.1);
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

struct TrainingConfig {
  std::uint64_t seed = 0;

  // data preparation
  double clip_seconds = 20.0;
  std::string tokenizer = "char";
  bool latin_to_eng = false;
  int min_len = 10, max_len = 50;
  int vote_threshold = 10, dup_factor = 10;
  bool per_song_split = false;

  // model dimensions
  int feature_dim = 128;
  int enc_channels = 32;
  int enc_layers = 6;
  int pool_window = 8000;
  int heads = 2;
  int slots = 1;
  int noise_dim = 128;
  int disc_reps = 3;
  int disc_filters = 64;
  std::vector<int> disc_widths = {2, 3, 4};
  bool eval_concat = false;

  // stage hyperparameters
  int batch_pretrain = 16, batch_mle = 512, batch_gan = 64;
  double lr_pretrain = 1e-3, lr_mle = 1e-2, lr_gan = 1e-4;
  double adam_beta1 = 0.9, adam_beta2 = 0.999, adam_eps = 1e-8;
  std::int64_t iters_pretrain = 0, iters_mle = 0, iters_gan = 0;
  std::int64_t stop_after = 0;  // pause a stage early; 0 = run to the end
  double beta_max = 100.0;
  bool label_smoothing = true;
  double lambda_init = 1.0, lambda_eta = 0.1;
  double target_len = 0.0;  // 0 = mean training-set comment length
  bool freeze_encoder_gan = true;
  bool use_evaluator = true;
  double init_stddev = 0.1;      // parameter init scale
  double init_stddev_enc = 0.1;  // encoder init scale (often larger)

  // standalone evaluator for the metrics
  std::int64_t iters_eval = 300;
  int batch_eval = 16;
  double lr_eval = 1e-3;

  AdamConfig adam(double lr) const {
    return AdamConfig{lr, adam_beta1, adam_beta2, adam_eps};
  }

  static TrainingConfig from(const ConfigMap& c) {
    TrainingConfig t;
    t.seed = static_cast<std::uint64_t>(c.get_int("seed", 0));
    t.clip_seconds = c.get_real("data.clip_seconds", 20.0);
    t.tokenizer = c.get_str("data.tokenizer", "char");
    M2C_CHECK(t.tokenizer == "char" || t.tokenizer == "word",
              "data.tokenizer must be char or word");
    t.latin_to_eng = c.get_bool("data.latin_to_eng", false);
    t.min_len = static_cast<int>(c.get_int("data.min_len", 10));
    t.max_len = static_cast<int>(c.get_int("data.max_len", 50));
    t.vote_threshold = static_cast<int>(c.get_int("data.vote_threshold", 10));
    t.dup_factor = static_cast<int>(c.get_int("data.dup_factor", 10));
    t.per_song_split = c.get_bool("data.per_song_split", false);

    t.feature_dim = static_cast<int>(c.get_int("model.feature_dim", 128));
    t.enc_channels = static_cast<int>(c.get_int("model.encoder_channels", 32));
    t.enc_layers = static_cast<int>(c.get_int("model.encoder_layers", 6));
    t.pool_window = static_cast<int>(c.get_int("model.pool_window", 8000));
    t.heads = static_cast<int>(c.get_int("model.heads", 2));
    t.slots = static_cast<int>(c.get_int("model.slots", 1));
    t.noise_dim = static_cast<int>(
        c.get_int("model.noise_dim", c.get_int("model.feature_dim", 128)));
    t.disc_reps = static_cast<int>(c.get_int("model.disc_reps", 3));
    t.disc_filters = static_cast<int>(c.get_int("model.disc_filters", 64));
    t.disc_widths = c.get_int_list("model.disc_widths", {2, 3, 4});
    t.eval_concat = c.get_bool("model.eval_concat", false);

    t.batch_pretrain = static_cast<int>(c.get_int("train.batch_pretrain", 16));
    t.batch_mle = static_cast<int>(c.get_int("train.batch_mle", 512));
    t.batch_gan = static_cast<int>(c.get_int("train.batch_gan", 64));
    t.lr_pretrain = c.get_real("train.lr_pretrain", 1e-3);
    t.lr_mle = c.get_real("train.lr_mle", 1e-2);
    t.lr_gan = c.get_real("train.lr_gan", 1e-4);
    t.adam_beta1 = c.get_real("train.adam_beta1", 0.9);
    t.adam_beta2 = c.get_real("train.adam_beta2", 0.999);
    t.adam_eps = c.get_real("train.adam_eps", 1e-8);
    t.iters_pretrain = c.get_int("train.iters_pretrain");  // required
    t.iters_mle = c.get_int("train.iters_mle");            // required
    t.iters_gan = c.get_int("train.iters_gan");            // required
    t.stop_after = c.get_int("train.stop_after", 0);
    t.beta_max = c.get_real("train.beta_max", 100.0);
    t.label_smoothing = c.get_bool("train.label_smoothing", true);
    t.lambda_init = c.get_real("train.lambda_init", 1.0);
    t.lambda_eta = c.get_real("train.lambda_eta", 0.1);
    t.target_len = c.get_real("train.target_len", 0.0);
    t.freeze_encoder_gan = c.get_bool("train.freeze_encoder_gan", true);
    t.use_evaluator = c.get_bool("train.use_evaluator", true);
    t.init_stddev = c.get_real("model.init_stddev", 0.1);
    t.init_stddev_enc =
        c.get_real("model.init_stddev_enc", t.init_stddev);

    t.iters_eval = c.get_int("eval.iters", 300);
    t.batch_eval = static_cast<int>(c.get_int("eval.batch", 16));
    t.lr_eval = c.get_real("eval.lr", 1e-3);
    return t;
  }

  Tokenizer make_tokenizer() const {
    return Tokenizer(tokenizer == "char" ? TokenMode::kChar : TokenMode::kWord,
                     latin_to_eng);
  }
};

// ---------------------------------------------------------------------------
// Line-oriented JSON logging
// ---------------------------------------------------------------------------

class TrainLogger {
 public:
  TrainLogger() = default;
  explicit TrainLogger(const std::string& path, bool echo = false)
      : echo_(echo) {
    if (!path.empty()) {
      file_.emplace(path, std::ios::app);
      M2C_CHECK(file_->good(), "cannot open log file: ", path);
    }
  }

  void log(const nlohmann::ordered_json& j) {
    std::string line = j.dump();
    if (file_) *file_ << line << "\n" << std::flush;
    if (echo_) std::cout << line << "\n";
  }

 private:
  std::optional<std::ofstream> file_;
  bool echo_ = false;
};

// ---------------------------------------------------------------------------
// Prepared training data
// ---------------------------------------------------------------------------

struct TrainData {
  Tokenizer tok{TokenMode::kChar};
  Vocabulary vocab;
  std::vector<Clip> clips;
  DataSplit split;
  std::vector<std::vector<int>> clips_by_song;  // clip indices per label
  int num_songs = 0;
  double mean_train_len = 0;
};

inline TrainData load_train_data(const TrainingConfig& cfg,
                                 const std::string& data_dir) {
  TrainData d;
  d.tok = cfg.make_tokenizer();
  Corpus corpus = load_corpus(data_dir);
  d.num_songs = static_cast<int>(corpus.song_ids.size());
  auto prepared = prepare_comments(corpus.comments, d.tok, cfg.min_len,
                                   cfg.max_len, cfg.vote_threshold,
                                   cfg.dup_factor);
  M2C_CHECK(!prepared.empty(),
            "no comments survive the length filter in ", data_dir);
  d.vocab = build_vocab(prepared, d.tok);
  d.clips = make_clips(corpus, cfg.clip_seconds);
  M2C_CHECK(!d.clips.empty(), "no clips from ", data_dir);
  d.split = pair_and_split(d.clips, prepared, d.tok, d.vocab, cfg.seed,
                           cfg.per_song_split);
  d.clips_by_song.assign(static_cast<std::size_t>(d.num_songs), {});
  for (std::size_t i = 0; i < d.clips.size(); ++i)
    d.clips_by_song[static_cast<std::size_t>(d.clips[i].song_label)].push_back(
        static_cast<int>(i));
  double total = 0;
  for (const auto& s : d.split.train) total += static_cast<double>(s.tokens.size());
  M2C_CHECK(!d.split.train.empty(), "empty training split");
  d.mean_train_len = total / static_cast<double>(d.split.train.size());
  return d;
}

// ---------------------------------------------------------------------------
// Checkpoint glue
// ---------------------------------------------------------------------------

struct ModelDims {
  int feature_dim = 0, enc_channels = 0, enc_layers = 0, pool_window = 0;
  int num_songs = 0, heads = 0, slots = 0, noise_dim = 0;
  int vocab_size = 0, max_len = 0, disc_reps = 0, disc_filters = 0;
  std::vector<int> disc_widths;
  bool eval_concat = false;
  std::string tokenizer = "char";
  bool latin_to_eng = false;

  static ModelDims from_config(const TrainingConfig& cfg, int num_songs,
                               int vocab_size) {
    ModelDims m;
    m.feature_dim = cfg.feature_dim;
    m.enc_channels = cfg.enc_channels;
    m.enc_layers = cfg.enc_layers;
    m.pool_window = cfg.pool_window;
    m.num_songs = num_songs;
    m.heads = cfg.heads;
    m.slots = cfg.slots;
    m.noise_dim = cfg.noise_dim;
    m.vocab_size = vocab_size;
    m.max_len = cfg.max_len;
    m.disc_reps = cfg.disc_reps;
    m.disc_filters = cfg.disc_filters;
    m.disc_widths = cfg.disc_widths;
    m.eval_concat = cfg.eval_concat;
    m.tokenizer = cfg.tokenizer;
    m.latin_to_eng = cfg.latin_to_eng;
    return m;
  }

  void save(Checkpoint& ck) const {
    ck.put_int("meta.feature_dim", feature_dim);
    ck.put_int("meta.enc_channels", enc_channels);
    ck.put_int("meta.enc_layers", enc_layers);
    ck.put_int("meta.pool_window", pool_window);
    ck.put_int("meta.num_songs", num_songs);
    ck.put_int("meta.heads", heads);
    ck.put_int("meta.slots", slots);
    ck.put_int("meta.noise_dim", noise_dim);
    ck.put_int("meta.vocab_size", vocab_size);
    ck.put_int("meta.max_len", max_len);
    ck.put_int("meta.disc_reps", disc_reps);
    ck.put_int("meta.disc_filters", disc_filters);
    std::string widths;
    for (std::size_t i = 0; i < disc_widths.size(); ++i)
      widths += (i ? "," : "") + std::to_string(disc_widths[i]);
    ck.put_string("meta.disc_widths", widths);
    ck.put_int("meta.eval_concat", eval_concat ? 1 : 0);
    ck.put_string("meta.tokenizer", tokenizer);
    ck.put_int("meta.latin_to_eng", latin_to_eng ? 1 : 0);
  }

  static ModelDims load(const Checkpoint& ck) {
    ModelDims m;
    m.feature_dim = static_cast<int>(ck.get_int("meta.feature_dim"));
    m.enc_channels = static_cast<int>(ck.get_int("meta.enc_channels"));
    m.enc_layers = static_cast<int>(ck.get_int("meta.enc_layers"));
    m.pool_window = static_cast<int>(ck.get_int("meta.pool_window"));
    m.num_songs = static_cast<int>(ck.get_int("meta.num_songs"));
    m.heads = static_cast<int>(ck.get_int("meta.heads"));
    m.slots = static_cast<int>(ck.get_int("meta.slots"));
    m.noise_dim = static_cast<int>(ck.get_int("meta.noise_dim"));
    m.vocab_size = static_cast<int>(ck.get_int("meta.vocab_size"));
    m.max_len = static_cast<int>(ck.get_int("meta.max_len"));
    m.disc_reps = static_cast<int>(ck.get_int("meta.disc_reps"));
    m.disc_filters = static_cast<int>(ck.get_int("meta.disc_filters"));
    std::stringstream ss(ck.get_string("meta.disc_widths"));
    std::string item;
    while (std::getline(ss, item, ','))
      m.disc_widths.push_back(std::stoi(item));
    m.eval_concat = ck.get_int("meta.eval_concat") != 0;
    m.tokenizer = ck.get_string("meta.tokenizer");
    m.latin_to_eng = ck.get_int("meta.latin_to_eng") != 0;
    return m;
  }

  EncoderConfig encoder_config() const {
    EncoderConfig c;
    c.channels = enc_channels;
    c.layers = enc_layers;
    c.feature_dim = feature_dim;
    c.pool_window = pool_window;
    c.num_songs = num_songs;
    return c;
  }

  GeneratorConfig generator_config() const {
    GeneratorConfig c;
    c.vocab = vocab_size;
    c.embed_dim = feature_dim;
    c.num_heads = heads;
    c.num_slots = slots;
    c.noise_dim = noise_dim;
    c.feature_dim = feature_dim;
    c.max_len = max_len;
    return c;
  }

  TextCnnConfig disc_config() const {
    TextCnnConfig c;
    c.vocab = vocab_size;
    c.embed_dim = feature_dim;
    c.reps = disc_reps;
    c.filters = disc_filters;
    c.widths = disc_widths;
    c.max_len = max_len + 1;  // room for the terminal EOS token
    return c;
  }

  EvaluatorConfig eval_config() const {
    EvaluatorConfig c;
    c.cnn = disc_config();
    c.feature_dim = feature_dim;
    c.concat_interaction = eval_concat;
    return c;
  }
};

// ---------------------------------------------------------------------------
// Trainer
// ---------------------------------------------------------------------------

/// Orchestrates the three training stages (encoder pretraining, joint
/// teacher-forced training, adversarial fine-tuning) plus the standalone
/// evaluator used by the metrics. One instance owns the data, the models
/// of the running stage, and the single random stream all stochastic
/// choices are drawn from, which is what makes checkpoint resumption
/// bitwise exact.
class Trainer {
 public:
  Trainer(TrainingConfig cfg, TrainData data)
      : cfg_(std::move(cfg)), data_(std::move(data)), rng_(cfg_.seed) {}

  const TrainData& data() const { return data_; }

  double target_length() const {
    return cfg_.target_len > 0 ? cfg_.target_len : data_.mean_train_len;
  }

  // ---- stage 1 -----------------------------------------------------------

  Checkpoint pretrain_encoder(TrainLogger& logger) {
    M2C_CHECK(data_.num_songs >= 2, "encoder pretraining needs >= 2 songs");
    RngStream init_rng(cfg_.seed + 101);
    ModelDims dims = ModelDims::from_config(cfg_, data_.num_songs,
                                            static_cast<int>(data_.vocab.size()));
    EncoderModel enc = EncoderModel::init(dims.encoder_config(), init_rng,
                                          cfg_.init_stddev_enc);
    AdamOptimizer opt(enc.named_params(), cfg_.adam(cfg_.lr_pretrain));

    std::int64_t last = run_limit(cfg_.iters_pretrain);
    for (std::int64_t step = 1; step <= last; ++step) {
      opt.zero_grad();
      double loss_sum = 0;
      int correct = 0;
      for (int b = 0; b < cfg_.batch_pretrain; ++b) {
        const PairedSample& s = pick_train_sample();
        const Clip& clip = data_.clips[static_cast<std::size_t>(s.clip)];
        Tensor e = enc.features(clip.audio.samples);
        Tensor logits = enc.class_logits(e);
        if (static_cast<int>(argmax(logits.value())) == s.song_label)
          ++correct;
        Tensor item = scale(cross_entropy_with_logits(logits, {s.song_label}),
                            1.0 / cfg_.batch_pretrain);
        loss_sum += item.item() * cfg_.batch_pretrain;
        backward(item);
      }
      opt.step();
      nlohmann::ordered_json j;
      j["stage"] = "pretrain_encoder";
      j["step"] = step;
      j["loss"] = loss_sum / cfg_.batch_pretrain;
      j["accuracy"] = static_cast<double>(correct) / cfg_.batch_pretrain;
      logger.log(j);
    }

    Checkpoint ck;
    ck.put_int("meta.format", 1);
    ck.put_string("meta.stage", "encoder");
    ck.put_int("meta.iteration", last);
    dims.save(ck);
    ck.put_string("meta.vocab", data_.vocab.serialize());
    ck.put_params("encoder.", enc.named_params());
    opt.save_state(ck, "adam_enc.");
    ck.put_string("trainer.rng", rng_.serialize());
    return ck;
  }

  /// Training-set classification accuracy of an encoder checkpoint.
  double encoder_train_accuracy(const Checkpoint& ck) {
    EncoderModel enc = encoder_from(ck);
    NoGradGuard ng;
    int correct = 0;
    for (const auto& s : data_.split.train) {
      const Clip& clip = data_.clips[static_cast<std::size_t>(s.clip)];
      Tensor p = enc.class_probs(enc.features(clip.audio.samples));
      if (static_cast<int>(argmax(p.value())) == s.song_label) ++correct;
    }
    return static_cast<double>(correct) /
           static_cast<double>(data_.split.train.size());
  }

  // ---- stage 2 -----------------------------------------------------------

  Checkpoint train_mle(const Checkpoint& in, TrainLogger& logger) {
    std::string stage = in.get_string("meta.stage");
    M2C_CHECK(stage == "encoder" || stage == "mle",
              "train_mle wants an encoder or mle checkpoint, got '", stage,
              "'");
    check_vocab(in);
    ModelDims dims = ModelDims::load(in);
    M2C_CHECK(dims.num_songs == data_.num_songs,
              "checkpoint songs ", dims.num_songs, " vs corpus ",
              data_.num_songs);

    EncoderModel enc = encoder_from(in);
    RngStream init_rng(cfg_.seed + 202);
    GeneratorModel gen = GeneratorModel::init(dims.generator_config(),
                                              init_rng, cfg_.init_stddev);
    ParamList joint;
    for (auto& p : enc.named_params())
      joint.push_back({"enc." + p.name, p.tensor});
    for (auto& p : gen.named_params())
      joint.push_back({"gen." + p.name, p.tensor});
    AdamOptimizer opt(std::move(joint), cfg_.adam(cfg_.lr_mle));

    std::int64_t start = 0;
    if (stage == "mle") {
      gen_params_load(in, gen);
      opt.load_state(in, "adam_joint.");
      rng_.deserialize(in.get_string("trainer.rng"));
      start = in.get_int("meta.iteration");
    }

    std::int64_t last = run_limit(cfg_.iters_mle);
    for (std::int64_t step = start + 1; step <= last; ++step) {
      opt.zero_grad();
      double loss_sum = 0;
      std::int64_t token_sum = 0;
      for (int b = 0; b < cfg_.batch_mle; ++b) {
        const PairedSample& s = pick_train_sample();
        const Clip& clip = data_.clips[static_cast<std::size_t>(s.clip)];
        Tensor noise = Tensor::randn(
            {static_cast<std::size_t>(cfg_.noise_dim)}, rng_);
        Tensor e = enc.features(clip.audio.samples);
        Tensor item = gen.mle_loss(e, noise, s.tokens);
        loss_sum += item.item();
        token_sum += static_cast<std::int64_t>(s.tokens.size()) + 1;
        backward(scale(item, 1.0 / cfg_.batch_mle));
      }
      opt.step();
      nlohmann::ordered_json j;
      j["stage"] = "mle";
      j["step"] = step;
      j["loss"] = loss_sum / cfg_.batch_mle;
      j["per_token_loss"] = loss_sum / static_cast<double>(token_sum);
      logger.log(j);
    }

    Checkpoint ck;
    ck.put_int("meta.format", 1);
    ck.put_string("meta.stage", "mle");
    ck.put_int("meta.iteration", last);
    dims.save(ck);
    ck.put_string("meta.vocab", data_.vocab.serialize());
    ck.put_params("encoder.", enc.named_params());
    ck.put_params("generator.", gen.named_params());
    opt.save_state(ck, "adam_joint.");
    ck.put_string("trainer.rng", rng_.serialize());
    return ck;
  }

  /// Mean per-token teacher-forced loss over a sample set.
  double mle_per_token_loss(const Checkpoint& ck,
                            const std::vector<PairedSample>& samples,
                            std::uint64_t noise_seed = 12345) {
    EncoderModel enc = encoder_from(ck);
    GeneratorModel gen = generator_from(ck);
    NoGradGuard ng;
    RngStream noise_rng(noise_seed);
    double loss = 0;
    std::int64_t tokens = 0;
    for (const auto& s : samples) {
      const Clip& clip = data_.clips[static_cast<std::size_t>(s.clip)];
      Tensor noise = Tensor::randn({static_cast<std::size_t>(cfg_.noise_dim)},
                                   noise_rng);
      loss += gen.mle_loss(enc.features(clip.audio.samples), noise, s.tokens)
                  .item();
      tokens += static_cast<std::int64_t>(s.tokens.size()) + 1;
    }
    return loss / static_cast<double>(tokens);
  }

  // ---- stage 3 -----------------------------------------------------------

  Checkpoint finetune_gan(const Checkpoint& in, TrainLogger& logger) {
    std::string stage = in.get_string("meta.stage");
    M2C_CHECK(stage == "mle" || stage == "gan",
              "finetune_gan wants an mle or gan checkpoint, got '", stage,
              "' (run the teacher-forced stage first)");
    M2C_CHECK(cfg_.beta_max >= 1.0, "beta_max must be >= 1");
    check_vocab(in);
    ModelDims dims = ModelDims::load(in);

    EncoderModel enc = encoder_from(in);
    GeneratorModel gen = generator_from(in);
    RngStream init_rng(cfg_.seed + 303);
    DiscriminatorModel disc = DiscriminatorModel::init(
        dims.disc_config(), init_rng, cfg_.init_stddev);
    EvaluatorModel eval =
        EvaluatorModel::init(dims.eval_config(), init_rng, cfg_.init_stddev);

    AdamOptimizer opt_gen = make_gen_optimizer(enc, gen);
    AdamOptimizer opt_disc(disc.named_params(), cfg_.adam(cfg_.lr_gan));
    AdamOptimizer opt_eval(eval.named_params(), cfg_.adam(cfg_.lr_gan));

    std::int64_t start = 0;
    double lambda = cfg_.lambda_init;
    if (stage == "gan") {
      in.load_params("discriminator.", disc_params(disc));
      in.load_params("evaluator.", eval_params(eval));
      opt_gen.load_state(in, "adam_gen.");
      opt_disc.load_state(in, "adam_disc.");
      opt_eval.load_state(in, "adam_eval.");
      rng_.deserialize(in.get_string("trainer.rng"));
      lambda = in.get_real("trainer.lambda_eos");
      start = in.get_int("meta.iteration");
    }

    // Frozen encoder: clip features are fixed for the whole stage.
    std::vector<Tensor> feat_cache;
    if (cfg_.freeze_encoder_gan) {
      NoGradGuard ng;
      feat_cache.reserve(data_.clips.size());
      for (const auto& clip : data_.clips)
        feat_cache.push_back(enc.features(clip.audio.samples));
    }
    auto clip_feature = [&](int clip_index) -> Tensor {
      if (cfg_.freeze_encoder_gan)
        return feat_cache[static_cast<std::size_t>(clip_index)];
      return enc.features(
          data_.clips[static_cast<std::size_t>(clip_index)].audio.samples);
    };

    const double target = target_length();
    std::int64_t total = cfg_.iters_gan;
    std::int64_t last = run_limit(total);
    for (std::int64_t step = start + 1; step <= last; ++step) {
      double beta = beta_schedule(step, total, cfg_.beta_max);

      // Discriminator step: real sentences vs detached rollouts.
      std::vector<Tensor> d_real, d_fake;
      std::vector<double> t_real, t_fake;
      for (int b = 0; b < cfg_.batch_gan; ++b) {
        const PairedSample& s = pick_train_sample();
        d_real.push_back(disc.cnn.onehot(with_eos(s.tokens)));
        SoftSequence roll;
        {
          NoGradGuard ng;
          Tensor e = clip_feature(s.clip);
          Tensor noise = Tensor::randn(
              {static_cast<std::size_t>(cfg_.noise_dim)}, rng_);
          roll = gen.soft_generate(e, noise, beta, lambda, rng_);
        }
        d_fake.push_back(roll.soft);
        if (cfg_.label_smoothing) {
          t_real.push_back(smooth_label(true, rng_));
          t_fake.push_back(smooth_label(false, rng_));
        }
      }
      opt_disc.zero_grad();
      Tensor dl = cfg_.label_smoothing
                      ? d_loss_smoothed(disc, d_real, d_fake, t_real, t_fake)
                      : d_loss(disc, d_real, d_fake);
      backward(dl);
      opt_disc.step();

      // Evaluator step on real pairs with sampled negatives.
      double vl_value = 0;
      if (cfg_.use_evaluator) {
        std::vector<std::vector<int>> v_real;
        std::vector<Tensor> e_pos, e_neg;
        std::vector<double> v_t_pos, v_t_neg;
        for (int b = 0; b < cfg_.batch_gan; ++b) {
          const PairedSample& s = pick_train_sample();
          v_real.push_back(with_eos(s.tokens));
          auto [song, clip] =
              sample_negative(data_.clips_by_song, s.song_label, rng_);
          {
            NoGradGuard ng;
            e_pos.push_back(clip_feature(s.clip));
            e_neg.push_back(clip_feature(clip));
          }
          if (cfg_.label_smoothing) {
            v_t_pos.push_back(smooth_label(true, rng_));
            v_t_neg.push_back(smooth_label(false, rng_));
          }
        }
        opt_eval.zero_grad();
        Tensor vl = cfg_.label_smoothing
                        ? v_loss_smoothed(eval, v_real, e_pos, e_neg, v_t_pos,
                                          v_t_neg)
                        : v_loss(eval, v_real, e_pos, e_neg);
        vl_value = vl.item();
        backward(vl);
        opt_eval.step();
      }

      // Generator step through the relaxed rollouts.
      std::vector<Tensor> g_soft;
      std::vector<Tensor> g_feat;
      double len_sum = 0;
      opt_gen.zero_grad();
      for (int b = 0; b < cfg_.batch_gan; ++b) {
        const PairedSample& s = pick_train_sample();
        Tensor e = cfg_.freeze_encoder_gan ? clip_feature(s.clip).detach()
                                           : clip_feature(s.clip);
        Tensor noise = Tensor::randn(
            {static_cast<std::size_t>(cfg_.noise_dim)}, rng_);
        SoftSequence roll = gen.soft_generate(e, noise, beta, lambda, rng_);
        g_soft.push_back(roll.soft);
        g_feat.push_back(e);
        len_sum += roll.content_len;
      }
      Tensor gl = g_loss_adv(disc, g_soft);
      if (cfg_.use_evaluator) gl = add(gl, g_loss_topic(eval, g_soft, g_feat));
      double gl_value = gl.item();
      backward(gl);
      opt_gen.step();

      double mean_len = len_sum / cfg_.batch_gan;
      lambda = update_lambda(lambda, mean_len, target, cfg_.lambda_eta);

      nlohmann::ordered_json j;
      j["stage"] = "gan";
      j["step"] = step;
      j["d_loss"] = dl.item();
      j["v_loss"] = vl_value;
      j["g_loss"] = gl_value;
      j["beta"] = beta;
      j["lambda_eos"] = lambda;
      j["mean_len"] = mean_len;
      logger.log(j);
    }

    Checkpoint ck;
    ck.put_int("meta.format", 1);
    ck.put_string("meta.stage", "gan");
    ck.put_int("meta.iteration", last);
    dims.save(ck);
    ck.put_string("meta.vocab", data_.vocab.serialize());
    ck.put_params("encoder.", enc.named_params());
    ck.put_params("generator.", gen.named_params());
    ck.put_params("discriminator.", disc_params(disc));
    ck.put_params("evaluator.", eval_params(eval));
    opt_gen.save_state(ck, "adam_gen.");
    opt_disc.save_state(ck, "adam_disc.");
    opt_eval.save_state(ck, "adam_eval.");
    ck.put_string("trainer.rng", rng_.serialize());
    ck.put_real("trainer.lambda_eos", lambda);
    return ck;
  }

  // ---- standalone evaluator for the metrics ------------------------------

  Checkpoint train_metrics_evaluator(const Checkpoint& in,
                                     TrainLogger& logger) {
    std::string stage = in.get_string("meta.stage");
    M2C_CHECK(stage == "encoder" || stage == "mle" || stage == "gan",
              "need a checkpoint with a trained encoder");
    check_vocab(in);
    ModelDims dims = ModelDims::load(in);
    EncoderModel enc = encoder_from(in);
    RngStream init_rng(cfg_.seed + 404);
    EvaluatorModel eval =
        EvaluatorModel::init(dims.eval_config(), init_rng, cfg_.init_stddev);
    AdamOptimizer opt(eval.named_params(), cfg_.adam(cfg_.lr_eval));

    std::vector<Tensor> feat_cache;
    {
      NoGradGuard ng;
      for (const auto& clip : data_.clips)
        feat_cache.push_back(enc.features(clip.audio.samples));
    }

    for (std::int64_t step = 1; step <= cfg_.iters_eval; ++step) {
      std::vector<std::vector<int>> real;
      std::vector<Tensor> e_pos, e_neg;
      std::vector<double> t_pos, t_neg;
      for (int b = 0; b < cfg_.batch_eval; ++b) {
        const PairedSample& s = pick_train_sample();
        real.push_back(with_eos(s.tokens));
        e_pos.push_back(feat_cache[static_cast<std::size_t>(s.clip)]);
        auto [song, clip] =
            sample_negative(data_.clips_by_song, s.song_label, rng_);
        e_neg.push_back(feat_cache[static_cast<std::size_t>(clip)]);
        if (cfg_.label_smoothing) {
          t_pos.push_back(smooth_label(true, rng_));
          t_neg.push_back(smooth_label(false, rng_));
        }
      }
      opt.zero_grad();
      Tensor vl = cfg_.label_smoothing
                      ? v_loss_smoothed(eval, real, e_pos, e_neg, t_pos, t_neg)
                      : v_loss(eval, real, e_pos, e_neg);
      backward(vl);
      opt.step();
      if (step % 50 == 0 || step == cfg_.iters_eval) {
        nlohmann::ordered_json j;
        j["stage"] = "metrics_evaluator";
        j["step"] = step;
        j["v_loss"] = vl.item();
        logger.log(j);
      }
    }

    Checkpoint ck;
    ck.put_int("meta.format", 1);
    ck.put_string("meta.stage", "evaluator");
    ck.put_int("meta.iteration", cfg_.iters_eval);
    dims.save(ck);
    ck.put_string("meta.vocab", data_.vocab.serialize());
    ck.put_params("encoder.", enc.named_params());
    ck.put_params("evaluator.", eval_params(eval));
    ck.put_string("trainer.rng", rng_.serialize());
    return ck;
  }

  // ---- model reconstruction ----------------------------------------------

  static EncoderModel encoder_from(const Checkpoint& ck) {
    ModelDims dims = ModelDims::load(ck);
    RngStream zero(0);
    EncoderModel enc = EncoderModel::init(dims.encoder_config(), zero);
    ParamList p = enc.named_params();
    ck.load_params("encoder.", p);
    return enc;
  }

  static GeneratorModel generator_from(const Checkpoint& ck) {
    ModelDims dims = ModelDims::load(ck);
    RngStream zero(0);
    GeneratorModel gen = GeneratorModel::init(dims.generator_config(), zero);
    ParamList p = gen.named_params();
    ck.load_params("generator.", p);
    return gen;
  }

  static EvaluatorModel evaluator_from(const Checkpoint& ck) {
    ModelDims dims = ModelDims::load(ck);
    RngStream zero(0);
    EvaluatorModel eval = EvaluatorModel::init(dims.eval_config(), zero);
    ParamList p = eval_params(eval);
    // Stored either as a standalone scorer or as the co-trained section.
    ck.load_params("evaluator.", p);
    return eval;
  }

  static Vocabulary vocab_from(const Checkpoint& ck) {
    return Vocabulary::deserialize(ck.get_string("meta.vocab"));
  }

 private:
  static ParamList disc_params(DiscriminatorModel& d) {
    return d.named_params();
  }
  static ParamList eval_params(EvaluatorModel& v) { return v.named_params(); }

  AdamOptimizer make_gen_optimizer(EncoderModel& enc, GeneratorModel& gen) {
    ParamList params;
    for (auto& p : gen.named_params())
      params.push_back({"gen." + p.name, p.tensor});
    if (!cfg_.freeze_encoder_gan)
      for (auto& p : enc.named_params())
        params.push_back({"enc." + p.name, p.tensor});
    return AdamOptimizer(std::move(params), cfg_.adam(cfg_.lr_gan));
  }

  void gen_params_load(const Checkpoint& ck, GeneratorModel& gen) {
    ParamList p = gen.named_params();
    ck.load_params("generator.", p);
  }

  void check_vocab(const Checkpoint& ck) const {
    Vocabulary stored = Vocabulary::deserialize(ck.get_string("meta.vocab"));
    M2C_CHECK(stored == data_.vocab,
              "vocabulary mismatch between corpus and checkpoint");
  }

  std::int64_t run_limit(std::int64_t total) const {
    M2C_CHECK(total >= 1, "stage iteration count must be >= 1");
    if (cfg_.stop_after > 0 && cfg_.stop_after < total)
      return cfg_.stop_after;
    return total;
  }

  const PairedSample& pick_train_sample() {
    const auto& train = data_.split.train;
    return train[static_cast<std::size_t>(
        rng_.uniform_int(0, static_cast<std::int64_t>(train.size()) - 1))];
  }

  std::vector<int> with_eos(const std::vector<int>& tokens) const {
    std::vector<int> out = tokens;
    out.push_back(kEos);
    return out;
  }

  TrainingConfig cfg_;
  TrainData data_;
  RngStream rng_;
};

}  // namespace m2c

#endif  // M2C_TRAINER_HPP_
