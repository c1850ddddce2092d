// tests/test_metrics.cpp

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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <vector>

#include "m2c/metrics.hpp"

using namespace m2c;

namespace {

using Toks = std::vector<int>;
using Refs = std::vector<std::vector<int>>;

}  // namespace

TEST(Bleu, PerfectMatchIsOne) {
  Toks cand{5, 6, 7, 8, 9, 10};
  std::vector<Toks> cands{cand};
  std::vector<Refs> refs{{cand}};
  for (int n : {1, 2, 3, 4, 5})
    EXPECT_DOUBLE_EQ(bleu_n(cands, refs, n), 1.0);
}

TEST(Bleu, ZeroOverlapIsZero) {
  std::vector<Toks> cands{{1, 2, 3, 4}};
  std::vector<Refs> refs{{{5, 6, 7, 8}}};
  EXPECT_NEAR(bleu_n(cands, refs, 2), 0.0, 1e-6);
  BleuOptions exact;
  exact.exact_zero = true;
  EXPECT_DOUBLE_EQ(bleu_n(cands, refs, 2, exact), 0.0);
}

TEST(Bleu, ModifiedPrecisionClipsRepeats) {
  // "a a a" against "a a": unigram precision min(3,2)/3, no brevity
  // penalty since the candidate is longer.
  std::vector<Toks> cands{{7, 7, 7}};
  std::vector<Refs> refs{{{7, 7}}};
  EXPECT_NEAR(bleu_n(cands, refs, 1), 2.0 / 3.0, 1e-8);
}

TEST(Bleu, BigramHandCase) {
  // cand [a b c] vs ref [a b d]: bigrams {ab, bc} vs {ab, bd} -> 1/2,
  // lengths equal so no penalty.
  std::vector<Toks> cands{{1, 2, 3}};
  std::vector<Refs> refs{{{1, 2, 4}}};
  EXPECT_NEAR(bleu_n(cands, refs, 2), 0.5, 1e-8);
}

TEST(Bleu, BrevityPenaltyUsesClosestReference) {
  // Candidate of 2 tokens fully matching; closest reference has 4 tokens,
  // so BP = exp(1 - 4/2).
  std::vector<Toks> cands{{1, 2}};
  std::vector<Refs> refs{{{1, 2, 3, 4}, {1, 2, 3, 4, 5, 6, 7, 8}}};
  EXPECT_NEAR(bleu_n(cands, refs, 1), std::exp(-1.0), 1e-8);
}

TEST(Bleu, InvariantUnderCandidateShuffle) {
  std::vector<Toks> cands{{1, 2, 3, 4}, {2, 3, 4, 5}, {9, 9, 1, 2}};
  std::vector<Refs> refs{{{1, 2, 3, 7}}, {{2, 3, 4, 5, 6}}, {{9, 1, 2, 4}}};
  double a = bleu_n(cands, refs, 2);
  std::vector<std::size_t> order{2, 0, 1};
  std::vector<Toks> cands2;
  std::vector<Refs> refs2;
  for (std::size_t i : order) {
    cands2.push_back(cands[i]);
    refs2.push_back(refs[i]);
  }
  EXPECT_DOUBLE_EQ(bleu_n(cands2, refs2, 2), a);
}

TEST(Bleu, RejectsEmptyInputs) {
  EXPECT_THROW(bleu_n({}, {}, 3), Error);
  std::vector<Toks> cands{{1, 2, 3}};
  std::vector<Refs> norefs{{}};
  EXPECT_THROW(bleu_n(cands, norefs, 3), Error);
}

TEST(BleuGeometricMean, ReproducesReportedRows) {
  // Geometric mean of the three per-n scores; the reference row values
  // reproduce to +-0.001.
  EXPECT_NEAR(bleu_geometric_mean({0.473, 0.334, 0.229}), 0.330, 0.001);
  EXPECT_NEAR(bleu_geometric_mean({0.414, 0.259, 0.166}), 0.261, 0.001);
  EXPECT_DOUBLE_EQ(bleu_geometric_mean({0.3, 0.0, 0.2}), 0.0);
}

TEST(VScore, ArithmeticCore) {
  EXPECT_DOUBLE_EQ(v_score_from_probs({0.5, 0.5, 0.5}), 0.0);
  EXPECT_NEAR(v_score_from_probs({0.6, 0.8}), 0.2, 1e-12);
  EXPECT_DOUBLE_EQ(v_score_from_probs({1.0, 1.0, 1.0}), 0.5);  // range cap
}

TEST(VScore, EvaluatorStubPooledAndPerAudio) {
  RngStream rng(1);
  EvaluatorConfig cfg;
  cfg.cnn.vocab = 11;
  cfg.cnn.embed_dim = 4;
  cfg.cnn.reps = 2;
  cfg.cnn.filters = 3;
  cfg.cnn.widths = {2};
  cfg.cnn.max_len = 8;
  cfg.feature_dim = 4;
  EvaluatorModel eval = EvaluatorModel::init(cfg, rng);
  std::fill(eval.mlp_w2.value().begin(), eval.mlp_w2.value().end(), 0.0);
  RngStream draws(2);
  std::vector<ScoredPair> pairs;
  for (int i = 0; i < 4; ++i) {
    ScoredPair p;
    p.tokens = {6, 7, 8};
    p.feature = Tensor::randn({4}, draws);
    p.audio_id = i < 3 ? "a" : "b";
    pairs.push_back(p);
  }
  EXPECT_DOUBLE_EQ(v_score(pairs, eval), 0.0);
  EXPECT_DOUBLE_EQ(v_score(pairs, eval, /*per_audio_mean=*/true), 0.0);
}

TEST(HScore, ReportedRowsAndProperties) {
  EXPECT_NEAR(h_score(0.330, 0.423), 0.371, 0.001);
  EXPECT_NEAR(h_score(0.261, 0.271), 0.265, 0.001);
  EXPECT_DOUBLE_EQ(h_score(0.4, 0.4), 0.4);       // fixed point
  EXPECT_DOUBLE_EQ(h_score(0.2, 0.6), h_score(0.6, 0.2));  // symmetry
  double h = h_score(0.2, 0.6);
  EXPECT_GE(h, 0.2);
  EXPECT_LE(h, 0.6);
  EXPECT_DOUBLE_EQ(h_score(0.3, -0.1), 0.0);  // negative v reports zero
  EXPECT_DOUBLE_EQ(h_score(0.0, 0.0), 0.0);   // convention
}

TEST(Pearson, ClosedFormsAndErrors) {
  std::vector<double> x{1, 2, 3, 4, 5};
  std::vector<double> y;
  for (double v : x) y.push_back(2 * v + 1);
  EXPECT_NEAR(pearson(x, y), 1.0, 1e-12);
  std::vector<double> z;
  for (double v : x) z.push_back(-v);
  EXPECT_NEAR(pearson(x, z), -1.0, 1e-12);
  std::vector<double> flat(5, 3.0);
  EXPECT_THROW(pearson(x, flat), Error);
  EXPECT_THROW(pearson({1.0}, {2.0}), Error);
}

TEST(ScoreReportJson, FieldsPresent) {
  std::vector<Toks> cands{{1, 2, 3, 4, 5, 6}};
  std::vector<Refs> refs{{{1, 2, 3, 4, 5, 6}}};
  ScoreReport r = score_report(cands, refs, {0.7, 0.9});
  auto j = r.to_json();
  EXPECT_DOUBLE_EQ(j["bleu3"].get<double>(), 1.0);
  EXPECT_DOUBLE_EQ(j["bleu"].get<double>(), 1.0);
  EXPECT_NEAR(j["v_score"].get<double>(), 0.3, 1e-12);
  EXPECT_FALSE(j.contains("h_score_flag"));
}

TEST(HumanScores, CsvAndCorrelation) {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / "m2c_test_human";
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "scores.csv");
    out << "sample_id,rater_id,fluency,coherence,meaning,consistency\n";
    out << "s1,r1,2,2,2,2\n";
    out << "s1,r2,4,4,4,4\n";   // s1 mean 3
    out << "s2,r1,5,5,5,5\n";   // s2 mean 5
    out << "s3,r1,7,7,7,7\n";   // s3 mean 7
  }
  auto rows = read_human_scores_csv((dir / "scores.csv").string());
  ASSERT_EQ(rows.size(), 4u);
  std::map<std::string, double> metric{{"s1", 0.3}, {"s2", 0.5}, {"s3", 0.7}};
  EXPECT_NEAR(correlate_with_human(rows, metric), 1.0, 1e-12);
}
