// tools/m2c_main.cpp

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

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "m2c/checkpoint.hpp"
#include "m2c/config.hpp"
#include "m2c/dataset.hpp"
#include "m2c/metrics.hpp"
#include "m2c/synth.hpp"
#include "m2c/trainer.hpp"

namespace fs = std::filesystem;
using namespace m2c;

namespace {

TrainingConfig load_training_config(const std::string& config_path,
                                    const std::vector<std::string>& sets) {
  ConfigMap cfg = ConfigMap::from_file(config_path);
  for (const auto& s : sets) cfg.apply_override(s);
  return TrainingConfig::from(cfg);
}

int cmd_synth_corpus(const std::string& out, int songs, int clips,
                     int comments, std::uint64_t seed, double clip_seconds,
                     int sample_rate) {
  SynthSpec spec;
  spec.num_songs = songs;
  spec.clips_per_song = clips;
  spec.comments_per_song = comments;
  spec.seed = seed;
  spec.clip_seconds = clip_seconds;
  spec.sample_rate = sample_rate;
  synth_corpus(out, spec);
  std::cout << "wrote corpus to " << out << "\n";
  return 0;
}

int cmd_prepare_data(const std::string& config_path,
                     const std::vector<std::string>& sets,
                     const std::string& data_dir, const std::string& out_dir) {
  TrainingConfig cfg = load_training_config(config_path, sets);
  TrainData data = load_train_data(cfg, data_dir);
  fs::create_directories(out_dir);
  write_manifest((fs::path(out_dir) / "train.ids").string(),
                 data.split.train);
  write_manifest((fs::path(out_dir) / "valid.ids").string(),
                 data.split.valid);
  write_manifest((fs::path(out_dir) / "test.ids").string(), data.split.test);
  {
    std::ofstream vf(fs::path(out_dir) / "vocab.txt");
    vf << data.vocab.serialize();
  }
  nlohmann::ordered_json j;
  j["songs"] = data.num_songs;
  j["clips"] = data.clips.size();
  j["train"] = data.split.train.size();
  j["valid"] = data.split.valid.size();
  j["test"] = data.split.test.size();
  j["vocab_size"] = data.vocab.size();
  j["mean_train_len"] = data.mean_train_len;
  std::ofstream sf(fs::path(out_dir) / "summary.json");
  sf << j.dump(2) << "\n";
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_stage(const std::string& stage, const std::string& config_path,
              const std::vector<std::string>& sets,
              const std::string& data_dir, const std::string& init_ckpt,
              const std::string& out_ckpt, const std::string& log_path,
              bool echo) {
  TrainingConfig cfg = load_training_config(config_path, sets);
  Trainer trainer(cfg, load_train_data(cfg, data_dir));
  TrainLogger logger(log_path, echo);
  Checkpoint ck;
  if (stage == "pretrain-encoder") {
    ck = trainer.pretrain_encoder(logger);
  } else if (stage == "train-mle") {
    ck = trainer.train_mle(Checkpoint::load(init_ckpt), logger);
  } else if (stage == "finetune-gan") {
    ck = trainer.finetune_gan(Checkpoint::load(init_ckpt), logger);
  } else {
    ck = trainer.train_metrics_evaluator(Checkpoint::load(init_ckpt), logger);
  }
  if (!out_ckpt.empty()) {
    fs::path parent = fs::path(out_ckpt).parent_path();
    if (!parent.empty()) fs::create_directories(parent);
    ck.save(out_ckpt);
    std::cout << "saved checkpoint " << out_ckpt << "\n";
  }
  return 0;
}

// Clips of an audio file; a file shorter than one clip but long enough for
// the pooling window still yields a single truncated clip.
std::vector<Waveform> clips_for_audio(const std::string& path,
                                      double clip_seconds, int pool_window) {
  Waveform w = load_waveform(path);
  auto clips = split_clips(w, clip_seconds);
  if (clips.empty() &&
      w.samples.size() >= static_cast<std::size_t>(pool_window)) {
    std::cerr << "note: using the whole " << w.duration_seconds()
              << "s file as one clip\n";
    clips.push_back(w);
  }
  M2C_CHECK(!clips.empty(), path, ": audio too short to encode");
  return clips;
}

int cmd_generate(const std::string& ckpt_path, const std::string& audio_path,
                 int count, const std::string& mode, std::uint64_t seed,
                 double clip_seconds, double eos_lambda, bool adjust) {
  Checkpoint ck = Checkpoint::load(ckpt_path);
  std::string stage = ck.get_string("meta.stage");
  M2C_CHECK(stage == "mle" || stage == "gan",
            "generate needs an mle or gan checkpoint, got '", stage, "'");
  ModelDims dims = ModelDims::load(ck);
  EncoderModel enc = Trainer::encoder_from(ck);
  GeneratorModel gen = Trainer::generator_from(ck);
  Vocabulary vocab = Trainer::vocab_from(ck);
  TokenMode tok_mode =
      dims.tokenizer == "word" ? TokenMode::kWord : TokenMode::kChar;

  auto clips = clips_for_audio(audio_path, clip_seconds, dims.pool_window);
  std::string stem = fs::path(audio_path).stem().string();
  RngStream rng(seed);
  NoGradGuard ng;
  std::vector<Tensor> feats;
  for (const auto& c : clips) feats.push_back(enc.features(c.samples));

  GenerateOptions opts;
  opts.mode = mode == "greedy" ? DecodeMode::kGreedy : DecodeMode::kSample;
  opts.max_len = dims.max_len;
  opts.eos_lambda = eos_lambda;
  opts.adjust_eos_enabled = adjust;
  opts.rng = &rng;
  for (int i = 0; i < count; ++i) {
    std::size_t clip = static_cast<std::size_t>(i) % clips.size();
    auto ids = gen.generate(feats[clip], opts);
    std::cout << stem << ":" << clip << "\t" << vocab.render(ids, tok_mode)
              << "\n";
  }
  return 0;
}

std::vector<std::pair<std::string, std::string>> read_tsv(
    const std::string& path) {
  std::ifstream in(path);
  M2C_CHECK(in.good(), "cannot open file: ", path);
  std::vector<std::pair<std::string, std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::size_t tab = line.find('\t');
    M2C_CHECK(tab != std::string::npos, path,
              ": expected '<audio_id>\\t<text>' lines");
    rows.emplace_back(line.substr(0, tab), line.substr(tab + 1));
  }
  M2C_CHECK(!rows.empty(), path, ": no rows");
  return rows;
}

std::string song_part(const std::string& id) {
  std::size_t colon = id.find(':');
  return colon == std::string::npos ? id : id.substr(0, colon);
}

int cmd_evaluate(const std::string& generated_path,
                 const std::string& references_path,
                 const std::string& evaluator_ckpt,
                 const std::string& audio_dir, double clip_seconds,
                 bool per_audio, bool exact_zero, bool no_vscore) {
  auto gen_rows = read_tsv(generated_path);
  auto ref_rows = read_tsv(references_path);

  Checkpoint ck = Checkpoint::load(evaluator_ckpt);
  ModelDims dims = ModelDims::load(ck);
  Vocabulary vocab = Trainer::vocab_from(ck);
  Tokenizer tok(dims.tokenizer == "word" ? TokenMode::kWord : TokenMode::kChar,
                dims.latin_to_eng);

  // References grouped by song.
  std::map<std::string, std::vector<std::vector<int>>> refs_by_song;
  for (const auto& [id, text] : ref_rows)
    refs_by_song[song_part(id)].push_back(vocab.encode(tok.tokenize(text)));

  std::vector<std::vector<int>> candidates;
  std::vector<std::vector<std::vector<int>>> references;
  for (const auto& [id, text] : gen_rows) {
    auto it = refs_by_song.find(song_part(id));
    M2C_CHECK(it != refs_by_song.end(), "no references for audio '",
              song_part(id), "'");
    candidates.push_back(vocab.encode(tok.tokenize(text)));
    references.push_back(it->second);
  }

  BleuOptions opts;
  opts.exact_zero = exact_zero;
  nlohmann::ordered_json out;
  if (no_vscore) {
    out["bleu3"] = bleu_n(candidates, references, 3, opts);
    out["bleu4"] = bleu_n(candidates, references, 4, opts);
    out["bleu5"] = bleu_n(candidates, references, 5, opts);
    out["bleu"] = bleu_geometric_mean({out["bleu3"].get<double>(),
                                       out["bleu4"].get<double>(),
                                       out["bleu5"].get<double>()});
    out["smoothing"] = exact_zero ? "exact-zero" : "add-epsilon";
    std::cout << out.dump(2) << "\n";
    return 0;
  }

  M2C_CHECK(ck.has("evaluator.text_w"),
            evaluator_ckpt, ": checkpoint has no evaluator section");
  EncoderModel enc = Trainer::encoder_from(ck);
  EvaluatorModel eval = Trainer::evaluator_from(ck);
  M2C_CHECK(!audio_dir.empty(), "--audio-dir is required for the V-Score");

  // Feature per clip id, loading each song once.
  NoGradGuard ng;
  std::map<std::string, std::vector<Tensor>> clip_feats;
  auto feature_of = [&](const std::string& id) -> Tensor {
    std::string song = song_part(id);
    auto it = clip_feats.find(song);
    if (it == clip_feats.end()) {
      auto clips = clips_for_audio(
          (fs::path(audio_dir) / (song + ".wav")).string(), clip_seconds,
          dims.pool_window);
      std::vector<Tensor> feats;
      for (const auto& c : clips) feats.push_back(enc.features(c.samples));
      it = clip_feats.emplace(song, std::move(feats)).first;
    }
    std::size_t idx = 0;
    std::size_t colon = id.find(':');
    if (colon != std::string::npos)
      idx = static_cast<std::size_t>(std::stoul(id.substr(colon + 1)));
    M2C_CHECK(idx < it->second.size(), "clip index out of range in '", id,
              "'");
    return it->second[idx];
  };

  std::vector<ScoredPair> pairs;
  std::vector<double> probs;
  for (std::size_t i = 0; i < gen_rows.size(); ++i) {
    ScoredPair p;
    p.tokens = candidates[i];
    p.feature = feature_of(gen_rows[i].first);
    p.audio_id = song_part(gen_rows[i].first);
    probs.push_back(eval.score_ids(p.tokens, p.feature).item());
    pairs.push_back(std::move(p));
  }

  ScoreReport report = score_report(candidates, references, probs, opts);
  if (per_audio) {
    report.v = v_score(pairs, eval, /*per_audio_mean=*/true);
    report.negative_v = report.v < 0;
    report.h = h_score(report.bleu, report.v);
  }
  std::cout << report.to_json().dump(2) << "\n";
  return 0;
}

int cmd_correlate(const std::string& human_csv,
                  const std::string& scores_csv) {
  auto human = read_human_scores_csv(human_csv);
  std::ifstream in(scores_csv);
  M2C_CHECK(in.good(), "cannot open scores file: ", scores_csv);
  std::map<std::string, double> metric;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::size_t comma = line.find(',');
    M2C_CHECK(comma != std::string::npos, scores_csv,
              ": expected 'sample_id,score'");
    std::string id = line.substr(0, comma);
    if (id == "sample_id") continue;  // header
    metric[id] = std::stod(line.substr(comma + 1));
  }
  nlohmann::ordered_json j;
  j["pearson"] = correlate_with_human(human, metric);
  std::cout << j.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"music-to-comment toolkit"};
  app.require_subcommand(1);

  // synth-corpus
  auto* synth = app.add_subcommand("synth-corpus",
                                   "generate a synthetic paired corpus");
  std::string synth_out;
  int synth_songs = 4, synth_clips = 20, synth_comments = 40;
  std::uint64_t synth_seed = 0;
  double synth_clip_seconds = 20.0;
  int synth_rate = 16000;
  synth->add_option("--out", synth_out, "output directory")->required();
  synth->add_option("--songs", synth_songs, "number of songs");
  synth->add_option("--clips-per-song", synth_clips, "clips per song");
  synth->add_option("--comments-per-song", synth_comments,
                    "comments per song");
  synth->add_option("--seed", synth_seed, "rng seed");
  synth->add_option("--clip-seconds", synth_clip_seconds, "clip duration");
  synth->add_option("--sample-rate", synth_rate, "sample rate in Hz");

  // shared stage options
  struct StageArgs {
    std::string config, data, init, out, log;
    std::vector<std::string> sets;
    bool echo = false;
  };
  auto add_stage = [&](const char* name, const char* help, bool needs_init) {
    auto* sub = app.add_subcommand(name, help);
    auto args = std::make_shared<StageArgs>();
    sub->add_option("--config", args->config, "config file")->required();
    sub->add_option("--data", args->data, "corpus directory")->required();
    if (needs_init)
      sub->add_option("--init", args->init, "input checkpoint")->required();
    sub->add_option("--out", args->out, "output checkpoint");
    sub->add_option("--log", args->log, "JSON-lines log file");
    sub->add_option("--set", args->sets, "config override key=value");
    sub->add_flag("--echo-log", args->echo, "echo log lines to stdout");
    return std::make_pair(sub, args);
  };
  auto [pretrain_cmd, pretrain_args] =
      add_stage("pretrain-encoder", "stage 1: song-classifier pretraining",
                false);
  auto [mle_cmd, mle_args] =
      add_stage("train-mle", "stage 2: joint teacher-forced training", true);
  auto [gan_cmd, gan_args] =
      add_stage("finetune-gan", "stage 3: adversarial fine-tuning", true);
  auto [eval_train_cmd, eval_train_args] = add_stage(
      "train-evaluator", "standalone topic evaluator for the metrics", true);

  // prepare-data
  auto* prep = app.add_subcommand("prepare-data",
                                  "build vocabulary, pairs and split manifests");
  std::string prep_config, prep_data, prep_out;
  std::vector<std::string> prep_sets;
  prep->add_option("--config", prep_config, "config file")->required();
  prep->add_option("--data", prep_data, "corpus directory")->required();
  prep->add_option("--out", prep_out, "output directory")->required();
  prep->add_option("--set", prep_sets, "config override key=value");

  // generate
  auto* gen_cmd = app.add_subcommand("generate",
                                     "generate comments for an audio file");
  std::string gen_ckpt, gen_audio, gen_mode = "sample";
  int gen_n = 1;
  std::uint64_t gen_seed = 0;
  double gen_clip_seconds = 20.0, gen_lambda = 1.0;
  bool gen_adjust = false;
  gen_cmd->add_option("--ckpt", gen_ckpt, "model checkpoint")->required();
  gen_cmd->add_option("--audio", gen_audio, "mono PCM wav file")->required();
  gen_cmd->add_option("-n,--count", gen_n, "number of comments");
  gen_cmd->add_option("--mode", gen_mode, "greedy or sample")
      ->check(CLI::IsMember({"greedy", "sample"}));
  gen_cmd->add_option("--seed", gen_seed, "rng seed");
  gen_cmd->add_option("--clip-seconds", gen_clip_seconds, "clip duration");
  gen_cmd->add_option("--eos-lambda", gen_lambda, "EOS probability factor");
  gen_cmd->add_flag("--adjust-eos", gen_adjust,
                    "apply the EOS factor at inference");

  // evaluate
  auto* eval_cmd = app.add_subcommand("evaluate",
                                      "score generated comments");
  std::string ev_gen, ev_ref, ev_ckpt, ev_audio_dir;
  double ev_clip_seconds = 20.0;
  bool ev_per_audio = false, ev_exact = false, ev_no_v = false;
  eval_cmd->add_option("--generated", ev_gen, "tsv of generated comments")
      ->required();
  eval_cmd->add_option("--references", ev_ref, "tsv of reference comments")
      ->required();
  eval_cmd->add_option("--evaluator", ev_ckpt, "evaluator checkpoint")
      ->required();
  eval_cmd->add_option("--audio-dir", ev_audio_dir,
                       "directory with <song>.wav files");
  eval_cmd->add_option("--clip-seconds", ev_clip_seconds, "clip duration");
  eval_cmd->add_flag("--per-audio", ev_per_audio,
                     "average the V-Score per audio first");
  eval_cmd->add_flag("--exact-zero", ev_exact,
                     "disable add-epsilon BLEU smoothing");
  eval_cmd->add_flag("--no-vscore", ev_no_v, "report BLEU only");

  // correlate
  auto* corr = app.add_subcommand(
      "correlate", "Pearson correlation against human score files");
  std::string corr_human, corr_scores;
  corr->add_option("--human", corr_human, "human scores csv")->required();
  corr->add_option("--scores", corr_scores, "sample_id,score csv")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed())
      return cmd_synth_corpus(synth_out, synth_songs, synth_clips,
                              synth_comments, synth_seed, synth_clip_seconds,
                              synth_rate);
    if (prep->parsed())
      return cmd_prepare_data(prep_config, prep_sets, prep_data, prep_out);
    for (auto& [sub, args, name] :
         {std::tuple{pretrain_cmd, pretrain_args, "pretrain-encoder"},
          std::tuple{mle_cmd, mle_args, "train-mle"},
          std::tuple{gan_cmd, gan_args, "finetune-gan"},
          std::tuple{eval_train_cmd, eval_train_args, "train-evaluator"}}) {
      if (sub->parsed())
        return cmd_stage(name, args->config, args->sets, args->data,
                         args->init, args->out, args->log, args->echo);
    }
    if (gen_cmd->parsed())
      return cmd_generate(gen_ckpt, gen_audio, gen_n, gen_mode, gen_seed,
                          gen_clip_seconds, gen_lambda, gen_adjust);
    if (eval_cmd->parsed())
      return cmd_evaluate(ev_gen, ev_ref, ev_ckpt, ev_audio_dir,
                          ev_clip_seconds, ev_per_audio, ev_exact, ev_no_v);
    if (corr->parsed()) return cmd_correlate(corr_human, corr_scores);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
