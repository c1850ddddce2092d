// m2c/synth.hpp

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

#ifndef M2C_SYNTH_HPP_
#define M2C_SYNTH_HPP_

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "m2c/dataset.hpp"
#include "m2c/rng.hpp"
#include "m2c/wav.hpp"

namespace m2c {

struct SynthSpec {
  int num_songs = 4;
  int clips_per_song = 20;
  int comments_per_song = 40;
  std::uint64_t seed = 0;
  double clip_seconds = 20.0;
  int sample_rate = 16000;
};

struct SynthSongInfo {
  std::string id;
  double fundamental_hz = 0;
  int timbre = 0;
  std::string marker;
};

/// Generates a paired corpus with an audio-topic correlation built in:
/// each song is a distinct harmonic mix (own fundamental and timbre), and
/// every comment of song i contains that song's marker token. The output
/// is byte-identical for a given spec.
inline std::vector<SynthSongInfo> synth_corpus(const std::string& dir,
                                               const SynthSpec& spec) {
  namespace fs = std::filesystem;
  M2C_CHECK(spec.num_songs >= 1 && spec.clips_per_song >= 1 &&
                spec.comments_per_song >= 1,
            "synth_corpus: all counts must be >= 1");
  M2C_CHECK(spec.sample_rate > 0 && spec.clip_seconds > 0,
            "synth_corpus: bad audio parameters");
  fs::create_directories(fs::path(dir) / "audio");
  RngStream rng(spec.seed);

  // Harmonic amplitude patterns; one of four timbres per song.
  static const double kTimbres[4][4] = {
      {1.00, 0.00, 0.00, 0.00},
      {1.00, 0.00, 0.65, 0.00},
      {1.00, 0.60, 0.40, 0.25},
      {0.50, 1.00, 0.00, 0.35},
  };

  std::vector<SynthSongInfo> songs;
  std::vector<Comment> comments;
  const double nyquist_margin = 0.95 * spec.sample_rate / 2.0;

  for (int s = 0; s < spec.num_songs; ++s) {
    SynthSongInfo info;
    char buf[16];
    std::snprintf(buf, sizeof(buf), "song%02d", s);
    info.id = buf;
    info.fundamental_hz = 900.0 + 450.0 * s + rng.uniform(-40.0, 40.0);
    info.timbre = s % 4;
    info.marker = "m" + std::to_string(s);
    songs.push_back(info);

    // Song audio: clips_per_song full clips plus a remainder that the
    // clip splitter is expected to drop.
    std::size_t clip_len = static_cast<std::size_t>(
        spec.clip_seconds * spec.sample_rate + 0.5);
    std::size_t total = clip_len * spec.clips_per_song + clip_len / 3;
    Waveform w;
    w.sample_rate = spec.sample_rate;
    w.samples.resize(total);
    double phase[4];
    for (double& p : phase) p = rng.uniform(0.0, 6.283185307179586);
    double vib_rate = rng.uniform(0.15, 0.45);
    for (std::size_t t = 0; t < total; ++t) {
      double sec = static_cast<double>(t) / spec.sample_rate;
      double env = 0.75 + 0.15 * std::sin(6.283185307179586 * vib_rate * sec);
      double v = 0.0;
      for (int k = 0; k < 4; ++k) {
        double f = info.fundamental_hz * (k + 1);
        if (f >= nyquist_margin) break;
        v += kTimbres[info.timbre][k] *
             std::sin(6.283185307179586 * f * sec + phase[k]);
      }
      w.samples[t] = 0.35 * env * v;
    }
    save_waveform((fs::path(dir) / "audio" / (info.id + ".wav")).string(), w);

    // Comments: filler words from a shared pool plus the song marker,
    // placed at least once (twice, to make it easy to spot).
    for (int c = 0; c < spec.comments_per_song; ++c) {
      int len = static_cast<int>(rng.uniform_int(12, 28));
      std::vector<std::string> words;
      words.reserve(static_cast<std::size_t>(len));
      for (int k = 0; k < len; ++k)
        words.push_back("w" + std::to_string(rng.uniform_int(0, 19)));
      std::size_t pos1 = static_cast<std::size_t>(rng.uniform_int(0, len - 1));
      std::size_t pos2 = static_cast<std::size_t>(rng.uniform_int(0, len - 1));
      words[pos1] = info.marker;
      words[pos2] = info.marker;
      std::string text;
      for (std::size_t k = 0; k < words.size(); ++k) {
        if (k) text += " ";
        text += words[k];
      }
      Comment cm;
      cm.text = std::move(text);
      cm.votes = static_cast<int>(rng.uniform_int(0, 20));
      cm.audio_id = info.id;
      comments.push_back(std::move(cm));
    }
  }

  write_comments_jsonl((fs::path(dir) / "comments.jsonl").string(), comments);

  nlohmann::ordered_json meta;
  meta["seed"] = spec.seed;
  meta["sample_rate"] = spec.sample_rate;
  meta["clip_seconds"] = spec.clip_seconds;
  meta["songs"] = nlohmann::ordered_json::array();
  for (const auto& s : songs) {
    nlohmann::ordered_json j;
    j["id"] = s.id;
    j["fundamental_hz"] = s.fundamental_hz;
    j["timbre"] = s.timbre;
    j["marker"] = s.marker;
    meta["songs"].push_back(j);
  }
  std::ofstream mf(fs::path(dir) / "meta.json");
  M2C_CHECK(mf.good(), "cannot write meta.json under ", dir);
  mf << meta.dump(2) << "\n";
  return songs;
}

}  // namespace m2c

#endif  // M2C_SYNTH_HPP_
