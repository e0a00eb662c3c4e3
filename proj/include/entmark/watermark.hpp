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

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>

#include "entmark/common.hpp"
#include "entmark/keys.hpp"
#include "entmark/lm_core.hpp"
#include "entmark/rng.hpp"
#include "entmark/sampling.hpp"
#include "entmark/token_coding.hpp"

namespace entmark {

// Per-token watermark entropy: 1 - p(token).
inline double watermark_entropy(const TokenDistribution& dist, TokenId token) {
  require(token < dist.size(), "watermark_entropy: invalid token id");
  return 1.0 - dist[token];
}

// Running sum of watermark entropy against the threshold lambda.
class EntropyAccumulator {
 public:
  explicit EntropyAccumulator(double threshold) : threshold_(threshold) {
    require(threshold >= 0.0, "lambda must be nonnegative");
  }

  bool reached() const { return total_ >= threshold_; }
  double total() const { return total_; }
  double threshold() const { return threshold_; }
  void add(double alpha) { total_ += alpha; }

 private:
  double total_ = 0.0;
  double threshold_;
};

struct GenerationConfig {
  double lambda = 1.0;  // +inf disables watermarking
  std::size_t m = 1;    // generation budget
  SamplerKind sampler = SamplerKind::kIts;
  Salt salt;
  Decoding decoding;
};

struct GenerationResult {
  TokenSeq prompt;
  TokenSeq tokens;
  // Number of unwatermarked tokens (the seed block length); the first
  // key-driven token is tokens[*boundary]. nullopt if lambda was never reached.
  std::optional<std::size_t> boundary;
  SamplerKind sampler = SamplerKind::kIts;
  Salt salt;
  double lambda = 0.0;
  std::size_t m = 0;
  Decoding decoding;
  std::string prf_id{kPrfId};
  std::uint64_t rng_seed = 0;

  // Seed tokens for key derivation; the prompt stands in when lambda = 0.
  std::optional<SeedBlock> seed_block() const {
    if (!boundary) return std::nullopt;
    if (*boundary == 0) return SeedBlock{prompt, salt};
    return SeedBlock{TokenSeq(tokens.begin(), tokens.begin() + static_cast<std::ptrdiff_t>(*boundary)), salt};
  }
};

inline KeyKind key_kind_for(SamplerKind sampler) {
  require(sampler != SamplerKind::kMultinomial, "multinomial sampling has no key kind");
  return sampler == SamplerKind::kIts ? KeyKind::kIts : KeyKind::kBs;
}

// Unwatermarked multinomial sampling until the accumulated watermark entropy
// reaches lambda. The crossing token is itself unwatermarked and closes the
// seed block; from then on token i (0-based) is drawn with key element
// i - boundary of the seed-derived sequence (length m).
inline GenerationResult generate(const MarkovLM& lm, std::span<const TokenId> prompt, const GenerationConfig& config,
                                 Rng& rng) {
  require(config.m >= 1, "generation budget m must be at least 1");
  require(!std::isnan(config.lambda), "lambda must not be NaN");
  for (TokenId t : prompt) require(lm.vocab().contains(t), "prompt contains an invalid token id");

  GenerationResult result;
  result.prompt.assign(prompt.begin(), prompt.end());
  result.sampler = config.sampler;
  result.salt = config.salt;
  result.lambda = config.lambda;
  result.m = config.m;
  result.decoding = config.decoding;

  const TokenCode code(lm.size());
  EntropyAccumulator entropy(config.lambda);
  std::optional<KeySequence> keys;
  TokenSeq context(prompt.begin(), prompt.end());
  context.reserve(context.size() + config.m);

  auto start_watermark = [&](std::size_t boundary) {
    result.boundary = boundary;
    if (config.sampler == SamplerKind::kMultinomial) return;
    const PrfKey key = derive_prf_key(*result.seed_block());
    keys = derive_key_sequence(key, key_kind_for(config.sampler), config.m, lm.size());
  };
  if (entropy.reached()) start_watermark(0);

  for (std::size_t i = 0; i < config.m; ++i) {
    const TokenDistribution dist = config.decoding.apply(lm.distribution(context));
    TokenId y;
    if (!result.boundary) {
      y = sample_multinomial(dist, rng);
      entropy.add(watermark_entropy(dist, y));
      result.tokens.push_back(y);
      context.push_back(y);
      if (entropy.reached()) start_watermark(i + 1);
      continue;
    }
    const std::size_t index = i - *result.boundary;
    switch (config.sampler) {
      case SamplerKind::kIts: {
        const auto elem = keys->its(index);
        y = sample_its(dist, elem.u, elem.rank);
        break;
      }
      case SamplerKind::kBs:
        y = sample_bs(dist, code, keys->bs(index));
        break;
      case SamplerKind::kMultinomial:
        y = sample_multinomial(dist, rng);
        break;
    }
    result.tokens.push_back(y);
    context.push_back(y);
  }
  return result;
}

// Unwatermarked control arm: pure multinomial rollout of length m.
inline TokenSeq generate_baseline(const MarkovLM& lm, std::span<const TokenId> prompt, std::size_t m, Rng& rng,
                                  const Decoding& decoding = {}) {
  require(m >= 1, "generation budget m must be at least 1");
  TokenSeq context(prompt.begin(), prompt.end());
  TokenSeq out;
  out.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    const TokenId y = sample_multinomial(decoding.apply(lm.distribution(context)), rng);
    out.push_back(y);
    context.push_back(y);
  }
  return out;
}

}  // namespace entmark
