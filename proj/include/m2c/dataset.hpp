// m2c/dataset.hpp

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

#ifndef M2C_DATASET_HPP_
#define M2C_DATASET_HPP_

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "m2c/audio.hpp"
#include "m2c/rng.hpp"
#include "m2c/text.hpp"
#include "m2c/wav.hpp"

namespace m2c {

struct Clip {
  Waveform audio;
  std::string song_id;
  int song_label = 0;   // dense index in [0, num_songs)
  int clip_index = 0;   // position within the song

  std::string clip_id() const {
    return song_id + ":" + std::to_string(clip_index);
  }
};

struct PairedSample {
  int clip = 0;                // index into the clip table
  std::vector<int> tokens;     // comment token ids, no BOS/EOS
  int song_label = 0;
  std::string sample_id;       // the clip id
};

struct DataSplit {
  std::vector<PairedSample> train, valid, test;
};

/// Song audio plus every comment of the corpus, as read from disk.
/// Layout: <dir>/audio/<song_id>.wav and <dir>/comments.jsonl with one
/// object {"audio_id": ..., "text": ..., "votes": ...} per line.
struct Corpus {
  std::vector<std::string> song_ids;           // sorted; index = song label
  std::vector<std::string> song_paths;
  std::vector<Comment> comments;

  int label_of(const std::string& song_id) const {
    auto it = std::lower_bound(song_ids.begin(), song_ids.end(), song_id);
    M2C_CHECK(it != song_ids.end() && *it == song_id, "unknown song id: ",
              song_id);
    return static_cast<int>(it - song_ids.begin());
  }
};

inline std::vector<Comment> read_comments_jsonl(const std::string& path) {
  std::ifstream in(path);
  M2C_CHECK(in.good(), "cannot open comments file: ", path);
  std::vector<Comment> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const std::exception& e) {
      throw Error(detail::concat_msg(path, ":", lineno, ": bad json: ",
                                     e.what()));
    }
    Comment c;
    c.audio_id = j.at("audio_id").get<std::string>();
    c.text = j.at("text").get<std::string>();
    c.votes = j.at("votes").get<int>();
    M2C_CHECK(c.votes >= 0, path, ":", lineno, ": negative votes");
    out.push_back(std::move(c));
  }
  return out;
}

inline void write_comments_jsonl(const std::string& path,
                                 const std::vector<Comment>& comments) {
  std::ofstream out(path);
  M2C_CHECK(out.good(), "cannot write comments file: ", path);
  for (const auto& c : comments) {
    nlohmann::ordered_json j;
    j["audio_id"] = c.audio_id;
    j["text"] = c.text;
    j["votes"] = c.votes;
    out << j.dump() << "\n";
  }
}

inline Corpus load_corpus(const std::string& dir) {
  namespace fs = std::filesystem;
  Corpus corpus;
  fs::path audio_dir = fs::path(dir) / "audio";
  M2C_CHECK(fs::is_directory(audio_dir), "no audio directory under ", dir);
  for (const auto& entry : fs::directory_iterator(audio_dir)) {
    if (entry.path().extension() == ".wav") {
      corpus.song_ids.push_back(entry.path().stem().string());
      corpus.song_paths.push_back(entry.path().string());
    }
  }
  M2C_CHECK(!corpus.song_ids.empty(), "no wav files under ",
            audio_dir.string());
  // Sort ids and paths together for stable labels.
  std::vector<std::size_t> order(corpus.song_ids.size());
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return corpus.song_ids[a] < corpus.song_ids[b];
  });
  std::vector<std::string> ids, paths;
  for (std::size_t i : order) {
    ids.push_back(corpus.song_ids[i]);
    paths.push_back(corpus.song_paths[i]);
  }
  corpus.song_ids = std::move(ids);
  corpus.song_paths = std::move(paths);
  corpus.comments =
      read_comments_jsonl((fs::path(dir) / "comments.jsonl").string());
  return corpus;
}

/// Splits every song into clips. The returned table is ordered by song
/// label, then clip index.
inline std::vector<Clip> make_clips(const Corpus& corpus,
                                    double clip_seconds = 20.0) {
  std::vector<Clip> clips;
  for (std::size_t s = 0; s < corpus.song_ids.size(); ++s) {
    Waveform w = load_waveform(corpus.song_paths[s]);
    auto parts = split_clips(w, clip_seconds);
    for (std::size_t i = 0; i < parts.size(); ++i) {
      Clip c;
      c.audio = std::move(parts[i]);
      c.song_id = corpus.song_ids[s];
      c.song_label = static_cast<int>(s);
      c.clip_index = static_cast<int>(i);
      clips.push_back(std::move(c));
    }
  }
  return clips;
}

/// Pairs every clip with one uniformly sampled comment of its song, then
/// splits 80/10/10 (floor for train and valid, remainder to test).
/// Deterministic per seed. A clip whose song has no comments is an error.
/// `per_song` applies the ratio within each song instead of globally.
inline DataSplit pair_and_split(const std::vector<Clip>& clips,
                                const std::vector<Comment>& comments,
                                const Tokenizer& tok, const Vocabulary& vocab,
                                std::uint64_t seed, bool per_song = false) {
  M2C_CHECK(!clips.empty(), "pair_and_split: no clips");
  std::map<std::string, std::vector<std::size_t>> by_song;
  for (std::size_t i = 0; i < comments.size(); ++i)
    by_song[comments[i].audio_id].push_back(i);

  RngStream rng(seed);
  std::vector<PairedSample> samples;
  samples.reserve(clips.size());
  for (std::size_t i = 0; i < clips.size(); ++i) {
    auto it = by_song.find(clips[i].song_id);
    M2C_CHECK(it != by_song.end() && !it->second.empty(),
              "clip of song '", clips[i].song_id, "' has no comments");
    const auto& pool = it->second;
    const Comment& pick = comments[pool[static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<std::int64_t>(pool.size()) - 1))]];
    PairedSample s;
    s.clip = static_cast<int>(i);
    s.tokens = vocab.encode(tok.tokenize(pick.text));
    s.song_label = clips[i].song_label;
    s.sample_id = clips[i].clip_id();
    samples.push_back(std::move(s));
  }

  auto split_block = [&](std::vector<PairedSample>& block, DataSplit& out) {
    // Fisher-Yates with the shared stream keeps the result seed-stable.
    for (std::size_t i = block.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(
          rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
      std::swap(block[i - 1], block[j]);
    }
    std::size_t n = block.size();
    std::size_t n_train = n * 8 / 10;
    std::size_t n_valid = n / 10;
    for (std::size_t i = 0; i < n; ++i) {
      if (i < n_train)
        out.train.push_back(std::move(block[i]));
      else if (i < n_train + n_valid)
        out.valid.push_back(std::move(block[i]));
      else
        out.test.push_back(std::move(block[i]));
    }
  };

  DataSplit split;
  if (per_song) {
    std::map<int, std::vector<PairedSample>> grouped;
    for (auto& s : samples) grouped[s.song_label].push_back(std::move(s));
    for (auto& [label, block] : grouped) split_block(block, split);
  } else {
    split_block(samples, split);
  }
  return split;
}

inline void write_manifest(const std::string& path,
                           const std::vector<PairedSample>& samples) {
  std::ofstream out(path);
  M2C_CHECK(out.good(), "cannot write manifest: ", path);
  for (const auto& s : samples) out << s.sample_id << "\n";
}

inline std::vector<std::string> read_manifest(const std::string& path) {
  std::ifstream in(path);
  M2C_CHECK(in.good(), "cannot open manifest: ", path);
  std::vector<std::string> ids;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) ids.push_back(line);
  return ids;
}

}  // namespace m2c

#endif  // M2C_DATASET_HPP_
