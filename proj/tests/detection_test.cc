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
#include <vector>

#include <gtest/gtest.h>

#include "entmark/entmark.hpp"
#include "oracles.hpp"

namespace entmark {
namespace {

KeySequence its_keys(std::vector<ItsKeyElement> elems, std::size_t n) {
  KeySequence seq(KeyKind::kIts, n);
  for (const auto& e : elems) seq.push_back(e);
  return seq;
}

TEST(EtaTest, Examples) {
  EXPECT_EQ(eta(0, 4), 0.0);
  EXPECT_EQ(eta(3, 4), 1.0);
  EXPECT_DOUBLE_EQ(eta(2, 4), 2.0 / 3.0);
  EXPECT_THROW(eta(4, 4), ValidationError);
}

TEST(HTest, Examples) {
  const TokenCode four(4);
  EXPECT_DOUBLE_EQ(h_of(std::vector<double>{0.7, 0.3}, four), 2.0 / 3.0);
  EXPECT_EQ(h_of(std::vector<double>{0.1, 0.2}, four), 0.0);
  EXPECT_EQ(h_of(std::vector<double>{0.9, 0.6}, four), 1.0);
  const TokenCode three(3);  // "11" clamps to the last token
  EXPECT_EQ(h_of(std::vector<double>{0.9, 0.6}, three), 1.0);
  EXPECT_EQ(h_of(std::vector<double>{0.5, 0.5}, three), 0.0);  // 1(u > 1/2) is strict
}

TEST(CostTest, ItsExamples) {
  const TokenSeq last{3};
  const std::vector<ItsKeyElement> key{{0.9, {0, 1, 2, 3}}};
  EXPECT_DOUBLE_EQ(cost_its(last, key), -0.2);
  const std::vector<ItsKeyElement> centred{{0.5, {2, 0, 3, 1}}};
  EXPECT_EQ(cost_its(last, centred), 0.0);
  EXPECT_EQ(cost_its(TokenSeq{}, std::vector<ItsKeyElement>{}), 0.0);
  EXPECT_THROW(cost_its(TokenSeq{0, 1}, key), ValidationError);
}

TEST(CostTest, BsExamples) {
  const TokenCode four(4);
  // eta(y) = 1, h = 2/3.
  EXPECT_NEAR(cost_bs(TokenSeq{3}, std::vector<BsKeyElement>{{{0.7, 0.3}}}, four), -1.0 / 12.0, 1e-15);
  const TokenCode three(3);
  // N = 3: the middle token has eta = 1/2.
  EXPECT_EQ(cost_bs(TokenSeq{1}, std::vector<BsKeyElement>{{{0.9, 0.9}}}, three), 0.0);
  const TokenCode five(5);  // L = 3, word 010 -> token 2 -> h = 1/2
  EXPECT_EQ(cost_bs(TokenSeq{4}, std::vector<BsKeyElement>{{{0.1, 0.9, 0.2}}}, five), 0.0);
}

TEST(PhiTest, SingleBlock) {
  const auto keys = its_keys({{0.9, {0, 1, 2, 3}}}, 4);
  const TokenSeq y{3};
  const auto r = phi(y, keys, 1);
  EXPECT_DOUBLE_EQ(r.value, -0.2);
  EXPECT_EQ(r.best_i, 0u);
  EXPECT_EQ(r.best_j, 0u);
}

TEST(PhiTest, SmallGridAgainstEnumeration) {
  const TokenSeq y{0, 2, 1};
  const auto keys = its_keys({{0.8, {2, 0, 1}}, {0.1, {0, 2, 1}}}, 3);
  const auto r = phi(y, keys, 2);
  // Four (i, j) pairs, with wraparound on the key side.
  double best = INFINITY;
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t j = 0; j < 2; ++j) {
      double c = 0.0;
      for (std::size_t l = 0; l < 2; ++l) {
        const auto e = keys.its((j + l) % 2);
        c += -(e.u - 0.5) * (static_cast<double>(e.rank[y[i + l]]) / 2.0 - 0.5);
      }
      best = std::min(best, c);
    }
  }
  EXPECT_DOUBLE_EQ(r.value, best);
}

TEST(PhiTest, CentredKeysGiveZero) {
  const auto its = its_keys({{0.5, {0, 1, 2}}, {0.5, {1, 2, 0}}}, 3);
  EXPECT_EQ(phi(TokenSeq{0, 1, 2, 0}, its, 2).value, 0.0);
}

TEST(PhiTest, MatchesBruteForce) {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n_vocab = 2 + rng.below(6);
    const std::size_t len = 1 + rng.below(20);
    const std::size_t n = 1 + rng.below(15);
    const std::size_t k = 1 + rng.below(len);
    const auto kind = trial % 2 == 0 ? KeyKind::kIts : KeyKind::kBs;
    TokenSeq y(len);
    for (auto& t : y) t = static_cast<TokenId>(rng.below(n_vocab));
    const auto keys = resample_key_sequence(kind, n, n_vocab, rng);
    const auto fast = phi(y, keys, k);
    const auto slow = oracle::phi_brute_force(y, keys, k);
    EXPECT_NEAR(fast.value, slow.value, 1e-12);
    // Position of the minimum: identical unless the sums differ only by rounding.
    if (std::abs(fast.value - slow.value) < 1e-12) {
      double at_fast = 0.0;
      for (std::size_t l = 0; l < k; ++l) at_fast += oracle::term(keys, y[fast.best_i + l], (fast.best_j + l) % n);
      EXPECT_NEAR(at_fast, slow.value, 1e-12);
    }
  }
}

TEST(PhiTest, Errors) {
  const auto keys = its_keys({{0.3, {0, 1}}}, 2);
  try {
    phi(TokenSeq{0}, keys, 2);
    FAIL() << "expected an error";
  } catch (const ValidationError& e) {
    EXPECT_STREQ(e.what(), "text shorter than block");
  }
  EXPECT_THROW(phi(TokenSeq{0, 5}, keys, 1), ValidationError);
}

TEST(PValueTest, Arithmetic) {
  std::vector<double> null(99, 1.0);
  EXPECT_DOUBLE_EQ(permutation_p_value(0.0, null), 0.01);
  for (int i = 0; i < 4; ++i) null[i] = -1.0;
  EXPECT_DOUBLE_EQ(permutation_p_value(0.0, null), 0.05);
  null[5] = 0.0;  // ties count against the observed statistic
  EXPECT_DOUBLE_EQ(permutation_p_value(0.0, null), 0.06);
}

TEST(DetectTest, KindMismatch) {
  Rng rng(1);
  const auto keys = resample_key_sequence(KeyKind::kBs, 10, 4, rng);
  DetectionConfig config;
  config.cost = KeyKind::kIts;
  try {
    detect_pvalue(TokenSeq{0, 1, 2}, keys, config, rng);
    FAIL() << "expected an error";
  } catch (const ValidationError& e) {
    EXPECT_STREQ(e.what(), "key kind does not match cost kind");
  }
}

TEST(DetectTest, WatermarkedTextGetsSmallestPValue) {
  const auto lm = high_entropy_lm(16);
  for (auto sampler : {SamplerKind::kIts, SamplerKind::kBs}) {
    Rng rng(17);
    const auto g = generate(lm, {}, GenerationConfig{2.0, 200, sampler, salt_from_hex("a1"), {}}, rng);
    const auto kind = key_kind_for(sampler);
    const auto keys = derive_key_sequence(derive_prf_key(*g.seed_block()), kind, 200, 16);
    DetectionConfig config;
    config.cost = kind;
    const auto report = detect_pvalue(g.tokens, keys, config, rng);
    EXPECT_DOUBLE_EQ(report.p_value, 0.01) << to_string(sampler);
    EXPECT_EQ(report.phi_null.size(), 99u);
    EXPECT_EQ(report.k, 50u);
  }
}

TEST(DetectTest, NullCalibration) {
  const auto lm = high_entropy_lm(16);
  const std::vector<double> alphas{0.05, 0.1};
  const auto r = exp_pvalue_calibration(lm, KeyKind::kIts, 60, 300, 39, alphas, 0.03, 5);
  EXPECT_TRUE(r.pass) << r.rejection_rates[0] << " " << r.rejection_rates[1];
}

TEST(SeedScanTest, FindsTrueBoundary) {
  const auto lm = high_entropy_lm(16);
  const Salt salt = salt_from_hex("c0de");
  for (auto sampler : {SamplerKind::kIts, SamplerKind::kBs}) {
    Rng rng(3);
    const auto g = generate(lm, {}, GenerationConfig{3.0, 150, sampler, salt, {}}, rng);
    ASSERT_TRUE(g.boundary.has_value());
    DetectionConfig config;
    config.cost = key_kind_for(sampler);
    config.s_max = 10;
    const auto report = detect_seed_scan(g.tokens, config, salt, 16, rng);
    ASSERT_TRUE(report.boundary.has_value());
    EXPECT_EQ(*report.boundary, *g.boundary);
    EXPECT_EQ(report.scanned.size(), 11u);
    EXPECT_DOUBLE_EQ(report.p_value, 11.0 / 100.0);

    // The model-and-lambda gate leaves only the true crossing point.
    const auto gated = detect_seed_scan(g.tokens, config, salt, 16, rng, {}, ScanGate{&lm, 3.0, {}});
    ASSERT_EQ(gated.scanned.size(), 1u);
    EXPECT_EQ(gated.scanned[0], *g.boundary);
    EXPECT_DOUBLE_EQ(gated.p_value, 0.01);
  }
}

TEST(SeedScanTest, SingleCandidateEqualsKeyedDetection) {
  const auto lm = high_entropy_lm(16);
  const Salt salt = salt_from_hex("c0de");
  Rng gen(8);
  const auto g = generate(lm, {}, GenerationConfig{3.0, 120, SamplerKind::kIts, salt, {}}, gen);
  const std::size_t s = *g.boundary;
  DetectionConfig config;
  config.k = 40;
  config.s_max = 0;
  // s_max = 0 scans only s = 0 (keys from the empty prompt).
  Rng a(99);
  const auto scan = detect_seed_scan(g.tokens, config, salt, 16, a);
  Rng b(99);
  const auto keys = derive_key_sequence(derive_prf_key({{}, salt}), KeyKind::kIts, g.tokens.size(), 16);
  const auto direct = detect_pvalue(g.tokens, keys, config, b);
  EXPECT_EQ(scan.p_value, direct.p_value);
  EXPECT_EQ(scan.phi0, direct.phi0);

  // Same reduction at the true boundary through the gate.
  Rng c(5);
  const auto gated = detect_seed_scan(g.tokens, config, salt, 16, c, {}, ScanGate{&lm, 3.0, {}});
  Rng d(5);
  const TokenSeq suffix(g.tokens.begin() + static_cast<std::ptrdiff_t>(s), g.tokens.end());
  const auto suffix_keys = derive_key_sequence(derive_prf_key(*g.seed_block()), KeyKind::kIts, suffix.size(), 16);
  const auto keyed = detect_pvalue(suffix, suffix_keys, config, d);
  EXPECT_EQ(gated.p_value, keyed.p_value);
  EXPECT_EQ(gated.phi0, keyed.phi0);
}

TEST(SeedScanTest, Errors) {
  Rng rng(1);
  DetectionConfig config;
  EXPECT_THROW(detect_seed_scan(TokenSeq{0, 1}, config, {}, 4, rng), ValidationError);
  config.k = 5;
  EXPECT_THROW(detect_seed_scan(TokenSeq{0, 1, 2, 3, 0, 1}, config, {}, 4, rng), ValidationError);
}

}  // namespace
}  // namespace entmark
