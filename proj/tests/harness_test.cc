// Copyright 2026 The entmark Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "entmark/entmark.hpp"
#include "oracles.hpp"

namespace entmark {
namespace {

TEST(RocTest, Examples) {
  EXPECT_DOUBLE_EQ(roc_auc(std::vector<double>{0.9, 0.4}, std::vector<double>{0.5, 0.1}).auc, 0.75);
  EXPECT_DOUBLE_EQ(roc_auc(std::vector<double>{3, 4}, std::vector<double>{1, 2}).auc, 1.0);
  EXPECT_DOUBLE_EQ(roc_auc(std::vector<double>{1, 2, 2}, std::vector<double>{2, 1, 2}).auc, 0.5);
  EXPECT_THROW(roc_auc(std::vector<double>{}, std::vector<double>{1}), ValidationError);
}

TEST(RocTest, MatchesPairwiseCount) {
  Rng rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> pos(1 + rng.below(40));
    std::vector<double> neg(1 + rng.below(40));
    // Coarse values so that ties happen.
    for (auto& x : pos) x = static_cast<double>(rng.below(10));
    for (auto& x : neg) x = static_cast<double>(rng.below(8));
    const auto roc = roc_auc(pos, neg);
    EXPECT_NEAR(roc.auc, oracle::auc_pairwise(pos, neg), 1e-12);
    EXPECT_EQ(roc.fpr.front(), 0.0);
    EXPECT_EQ(roc.tpr.back(), 1.0);
    EXPECT_EQ(roc.fpr.back(), 1.0);
  }
}

TEST(RocTest, TprAtFixedFpr) {
  std::vector<double> neg(100);
  for (int i = 0; i < 100; ++i) neg[i] = i;
  const std::vector<double> pos{99.5, 98.5, 50.0, 10.0};
  const auto roc = roc_auc(pos, neg);
  // Threshold 99 lets one negative through (1%) and catches two positives.
  EXPECT_DOUBLE_EQ(roc.tpr_at_1pct_fpr, 0.5);
  EXPECT_DOUBLE_EQ(roc.tpr_at_fpr(0.0), 0.25);
}

TEST(StatsTest, ChiSquareTail) {
  EXPECT_NEAR(chi_square_sf(3.841458820694124, 1), 0.05, 1e-9);
  EXPECT_NEAR(chi_square_sf(2.0 * 2.302585092994046, 2), 0.1, 1e-9);  // exp(-x/2) at df = 2
  const std::vector<std::uint64_t> a{10, 20, 30, 0};
  const auto same = chi_square_homogeneity(a, a);
  EXPECT_EQ(same.statistic, 0.0);
  EXPECT_EQ(same.df, 2u);
  EXPECT_EQ(same.p_value, 1.0);
  const auto ms = mean_se(std::vector<double>{1, 2, 3, 4});
  EXPECT_DOUBLE_EQ(ms.mean, 2.5);
  EXPECT_NEAR(ms.se, std::sqrt(5.0 / 3.0 / 4.0), 1e-15);
}

TEST(CollisionBoundTest, Examples) {
  EXPECT_NEAR(collision_bound(365, 0.5), 22.4944, 1e-4);
  EXPECT_NEAR(collision_bound(365, 1e-12), 0.0, 1e-4);
  EXPECT_THROW(collision_bound(365, 1.0), ValidationError);
}

TEST(RecordsTest, GenerationRoundTrip) {
  const auto lm = high_entropy_lm(8);
  Rng rng(12);
  const auto g = generate(lm, TokenSeq{1, 2}, GenerationConfig{1.0, 30, SamplerKind::kBs, salt_from_hex("ab"), {}}, rng);
  const Json j = generation_to_json(g);
  const auto back = generation_from_json(Json::parse(j.dump()));
  EXPECT_EQ(back.tokens, g.tokens);
  EXPECT_EQ(back.boundary, g.boundary);
  EXPECT_EQ(back.sampler, SamplerKind::kBs);
  EXPECT_EQ(back.salt, g.salt);
  EXPECT_EQ(back.m, 30u);
  EXPECT_EQ(back.prompt, (TokenSeq{1, 2}));
  EXPECT_EQ(back.seed_tokens, g.seed_block()->tokens);
  EXPECT_EQ(j["prf_id"], "blake2b256+chacha20/v1");
}

TEST(RecordsTest, NeverThresholdIsNull) {
  GenerationResult g;
  g.tokens = {0, 1};
  g.lambda = std::numeric_limits<double>::infinity();
  g.m = 2;
  const Json j = generation_to_json(g);
  EXPECT_TRUE(j["lambda"].is_null());
  EXPECT_TRUE(j["boundary"].is_null());
  EXPECT_TRUE(j["seed_tokens"].is_null());
  const auto back = generation_from_json(j);
  EXPECT_TRUE(std::isinf(back.lambda));
  EXPECT_FALSE(back.seed_tokens.has_value());
}

TEST(RecordsTest, ModelRoundTrip) {
  const auto corpus = ingest_corpus("a b c a\nc b a\n", TokenizeMode::kWord);
  const auto lm = train_markov(corpus.sequences, corpus.vocab, 0.5);
  const auto loaded = model_from_json(Json::parse(model_to_json(lm, TokenizeMode::kWord).dump()));
  EXPECT_EQ(loaded.mode, TokenizeMode::kWord);
  EXPECT_EQ(loaded.lm.vocab().tokens(), lm.vocab().tokens());
  for (TokenId a = 0; a < 3; ++a) {
    const TokenSeq prefix{a};
    for (TokenId b = 0; b < 3; ++b) EXPECT_EQ(loaded.lm.next_distribution(prefix)[b], lm.next_distribution(prefix)[b]);
  }
  Json bad = model_to_json(lm, TokenizeMode::kWord);
  bad["counts"].erase(0);
  EXPECT_THROW(model_from_json(bad), IoError);
}

TEST(RecordsTest, MalformedJsonl) {
  EXPECT_EQ(parse_jsonl("{\"a\":1}\n\n{\"a\":2}\n", "x").size(), 2u);
  try {
    parse_jsonl("{\"a\":1}\n{\"a\":", "gen.jsonl");
    FAIL() << "expected an error";
  } catch (const IoError& e) {
    EXPECT_STREQ(e.what(), "gen.jsonl:2: malformed JSON record");
  }
  EXPECT_THROW(generation_from_json(Json::parse("{\"tokens\":[1]}")), IoError);
  EXPECT_THROW(read_file("/nonexistent/entmark/file"), IoError);
}

TEST(ExperimentsTest, CollisionSimulationHighThreshold) {
  const auto r = simulate_collisions(high_entropy_lm(16), 200, 10.0, 40, 3);
  EXPECT_TRUE(r.pass);
  EXPECT_EQ(r.generations, 200u);
}

TEST(ExperimentsTest, IndistinguishabilityTrivialCases) {
  const auto never = exp_indistinguishability(small_random_lm(), std::numeric_limits<double>::infinity(), 5, 300, 1);
  EXPECT_TRUE(never.pass);
  const auto fresh = exp_indistinguishability(small_random_lm(), 1.0, 6, 2000, 2);
  EXPECT_TRUE(fresh.pass) << fresh.unigram.p_value << " " << fresh.bigram.p_value;
}

TEST(ExperimentsTest, CovarianceGapVanishesWithoutEntropy) {
  // Every row a point mass after top-p: alpha = 0, the key cannot move the text.
  const auto lm = near_deterministic_lm(4, 0.999);
  const auto r = exp_covariance_identity(lm, SamplerKind::kIts, 30, 400, 4);
  EXPECT_LT(r.mean_alpha, 0.01);
  EXPECT_LT(std::abs(r.gap.mean), 4.0 * r.gap.se + 1e-3);
  EXPECT_THROW(exp_covariance_identity(lm, SamplerKind::kIts, 30, 0, 4), ValidationError);
}

TEST(ExperimentsTest, CovarianceGapItsUniformBinary) {
  const auto r = exp_covariance_identity(uniform_lm(2), SamplerKind::kIts, 100, 2000, 5);
  EXPECT_DOUBLE_EQ(r.target, 100 * 0.25 * 0.5);
  EXPECT_TRUE(r.pass) << r.gap.mean << " +- " << r.gap.se;
}

TEST(ExperimentsTest, ErrorBoundLimits) {
  EXPECT_EQ(exp_error_lower_bound(uniform_lm(4), 0.1, 0, 10, 1).estimate.mean, 1.0);
  const auto flat = exp_error_lower_bound(high_entropy_lm(16), 0.1, 100, 300, 2);
  EXPECT_LT(flat.estimate.mean, 0.05);
}

}  // namespace
}  // namespace entmark
