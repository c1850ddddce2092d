// m2c/metrics.hpp

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

#ifndef M2C_METRICS_HPP_
#define M2C_METRICS_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "m2c/evaluator.hpp"

namespace m2c {

struct BleuOptions {
  // Add-epsilon smoothing of the modified precision; exact_zero disables it.
  double smoothing_eps = 1e-9;
  bool exact_zero = false;
};

/// Corpus-level modified n-gram precision with brevity penalty, computed
/// for a single n. References per candidate; the brevity penalty uses the
/// closest reference length (ties to the shorter).
inline double bleu_n(const std::vector<std::vector<int>>& candidates,
                     const std::vector<std::vector<std::vector<int>>>& refs,
                     int n, const BleuOptions& opts = {}) {
  M2C_CHECK(!candidates.empty(), "bleu_n: empty candidate set");
  M2C_CHECK(candidates.size() == refs.size(),
            "bleu_n: candidates and reference sets must align");
  M2C_CHECK(n >= 1, "bleu_n: n must be >= 1");
  for (const auto& r : refs)
    M2C_CHECK(!r.empty(), "bleu_n: a candidate has no references");

  using Ngram = std::vector<int>;
  auto count_ngrams = [n](const std::vector<int>& toks) {
    std::map<Ngram, std::int64_t> counts;
    if (static_cast<int>(toks.size()) >= n)
      for (std::size_t i = 0; i + n <= toks.size(); ++i)
        counts[Ngram(toks.begin() + i, toks.begin() + i + n)]++;
    return counts;
  };

  double matched = 0, total = 0;
  std::int64_t cand_len = 0, ref_len = 0;
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    const auto& cand = candidates[c];
    cand_len += static_cast<std::int64_t>(cand.size());
    // Closest reference length, ties resolved to the shorter one.
    std::int64_t best = static_cast<std::int64_t>(refs[c][0].size());
    for (const auto& r : refs[c]) {
      std::int64_t len = static_cast<std::int64_t>(r.size());
      std::int64_t cl = static_cast<std::int64_t>(cand.size());
      if (std::llabs(len - cl) < std::llabs(best - cl) ||
          (std::llabs(len - cl) == std::llabs(best - cl) && len < best))
        best = len;
    }
    ref_len += best;

    auto cand_counts = count_ngrams(cand);
    std::map<Ngram, std::int64_t> ref_max;
    for (const auto& r : refs[c])
      for (const auto& [ng, cnt] : count_ngrams(r))
        ref_max[ng] = std::max(ref_max[ng], cnt);
    for (const auto& [ng, cnt] : cand_counts) {
      auto it = ref_max.find(ng);
      matched += static_cast<double>(
          std::min(cnt, it == ref_max.end() ? 0 : it->second));
      total += static_cast<double>(cnt);
    }
  }

  if (total == 0 || cand_len == 0) return 0.0;
  double precision = opts.exact_zero
                         ? matched / total
                         : (matched + opts.smoothing_eps) /
                               (total + opts.smoothing_eps);
  double bp = cand_len > ref_len
                  ? 1.0
                  : std::exp(1.0 - static_cast<double>(ref_len) /
                                       static_cast<double>(cand_len));
  return bp * precision;
}

/// Geometric mean of per-n scores; any zero component pins it to zero.
inline double bleu_geometric_mean(const std::vector<double>& scores) {
  M2C_CHECK(!scores.empty(), "bleu_geometric_mean: no scores");
  double log_sum = 0;
  for (double s : scores) {
    M2C_CHECK(s >= 0 && s <= 1, "bleu score out of [0,1]: ", s);
    if (s == 0) return 0.0;
    log_sum += std::log(s);
  }
  return std::exp(log_sum / static_cast<double>(scores.size()));
}

/// Mean evaluator probability minus 0.5 (arithmetic core).
inline double v_score_from_probs(const std::vector<double>& probs) {
  M2C_CHECK(!probs.empty(), "v_score: no scores");
  double sum = 0;
  for (double p : probs) sum += p;
  return sum / static_cast<double>(probs.size()) - 0.5;
}

struct ScoredPair {
  std::vector<int> tokens;  // generated comment
  Tensor feature;           // audio feature e of the source clip
  std::string audio_id;     // grouping key for the per-audio variant
};

/// V-Score over generated/audio pairs, pooled by default; the per-audio
/// flag averages within each audio first.
inline double v_score(const std::vector<ScoredPair>& pairs,
                      const EvaluatorModel& eval,
                      bool per_audio_mean = false) {
  M2C_CHECK(!pairs.empty(), "v_score: no pairs");
  NoGradGuard ng;
  if (!per_audio_mean) {
    std::vector<double> probs;
    probs.reserve(pairs.size());
    for (const auto& p : pairs)
      probs.push_back(eval.score_ids(p.tokens, p.feature).item());
    return v_score_from_probs(probs);
  }
  std::map<std::string, std::pair<double, int>> by_audio;
  for (const auto& p : pairs) {
    auto& acc = by_audio[p.audio_id];
    acc.first += eval.score_ids(p.tokens, p.feature).item();
    acc.second += 1;
  }
  double sum = 0;
  for (const auto& [id, acc] : by_audio) sum += acc.first / acc.second;
  return sum / static_cast<double>(by_audio.size()) - 0.5;
}

/// Harmonic mean of BLEU and V-Score. Negative v reports 0 (the caller
/// flags it); bleu + v = 0 gives 0 by convention.
inline double h_score(double bleu, double v) {
  M2C_CHECK(bleu >= 0, "h_score: bleu must be nonnegative");
  if (v < 0) return 0.0;
  if (bleu + v == 0) return 0.0;
  return 2.0 * bleu * v / (bleu + v);
}

/// Standard Pearson correlation; rejects short or constant inputs.
inline double pearson(const std::vector<double>& x,
                      const std::vector<double>& y) {
  M2C_CHECK(x.size() == y.size(), "pearson: length mismatch");
  M2C_CHECK(x.size() >= 2, "pearson: need at least two samples");
  double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  M2C_CHECK(sxx > 0 && syy > 0, "pearson: zero variance input");
  return sxy / std::sqrt(sxx * syy);
}

struct ScoreReport {
  double bleu3 = 0, bleu4 = 0, bleu5 = 0;
  double bleu = 0;     // geometric mean of bleu3/4/5
  double v = 0;        // V-Score
  double h = 0;        // H-Score
  bool negative_v = false;
  std::string smoothing = "add-epsilon";

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["bleu3"] = bleu3;
    j["bleu4"] = bleu4;
    j["bleu5"] = bleu5;
    j["bleu"] = bleu;
    j["v_score"] = v;
    j["h_score"] = h;
    j["smoothing"] = smoothing;
    if (negative_v) j["h_score_flag"] = "negative_v_reported_as_zero";
    return j;
  }
};

inline ScoreReport score_report(
    const std::vector<std::vector<int>>& candidates,
    const std::vector<std::vector<std::vector<int>>>& refs,
    const std::vector<double>& eval_probs, const BleuOptions& opts = {}) {
  ScoreReport r;
  r.bleu3 = bleu_n(candidates, refs, 3, opts);
  r.bleu4 = bleu_n(candidates, refs, 4, opts);
  r.bleu5 = bleu_n(candidates, refs, 5, opts);
  r.bleu = bleu_geometric_mean({r.bleu3, r.bleu4, r.bleu5});
  r.v = v_score_from_probs(eval_probs);
  r.negative_v = r.v < 0;
  r.h = h_score(r.bleu, r.v);
  r.smoothing = opts.exact_zero ? "exact-zero" : "add-epsilon";
  return r;
}

/// Human score rows: sample_id, rater_id, then the four aspect scores.
struct HumanScoreRow {
  std::string sample_id;
  std::string rater_id;
  double fluency = 0, coherence = 0, meaning = 0, consistency = 0;

  double mean() const {
    return (fluency + coherence + meaning + consistency) / 4.0;
  }
};

inline std::vector<HumanScoreRow> read_human_scores_csv(
    const std::string& path) {
  std::ifstream in(path);
  M2C_CHECK(in.good(), "cannot open human scores: ", path);
  std::vector<HumanScoreRow> rows;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      std::size_t comma = line.find(',', start);
      fields.push_back(line.substr(
          start, comma == std::string::npos ? std::string::npos
                                            : comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (first && fields.size() >= 1 && fields[0] == "sample_id") {
      first = false;
      continue;  // header
    }
    first = false;
    M2C_CHECK(fields.size() == 6, path, ": expected 6 fields, got ",
              fields.size());
    HumanScoreRow r;
    r.sample_id = fields[0];
    r.rater_id = fields[1];
    r.fluency = std::stod(fields[2]);
    r.coherence = std::stod(fields[3]);
    r.meaning = std::stod(fields[4]);
    r.consistency = std::stod(fields[5]);
    rows.push_back(std::move(r));
  }
  return rows;
}

/// Average the raters per sample, then correlate with the metric values
/// for the samples both sides share (sorted by id for determinism).
inline double correlate_with_human(
    const std::vector<HumanScoreRow>& human,
    const std::map<std::string, double>& metric_by_sample) {
  std::map<std::string, std::pair<double, int>> acc;
  for (const auto& r : human) {
    acc[r.sample_id].first += r.mean();
    acc[r.sample_id].second += 1;
  }
  std::vector<double> hs, ms;
  for (const auto& [id, a] : acc) {
    auto it = metric_by_sample.find(id);
    if (it == metric_by_sample.end()) continue;
    hs.push_back(a.first / a.second);
    ms.push_back(it->second);
  }
  return pearson(hs, ms);
}

}  // namespace m2c

#endif  // M2C_METRICS_HPP_
