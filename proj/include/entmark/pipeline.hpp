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

// Record-level pipeline steps shared by the command-line tool and tests:
// JSON generation records in, JSON records out, all randomness from explicit
// seeds (record i uses mix_seed(seed, i)).

#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "entmark/attacks.hpp"
#include "entmark/common.hpp"
#include "entmark/detection.hpp"
#include "entmark/keys.hpp"
#include "entmark/lm_core.hpp"
#include "entmark/records.hpp"
#include "entmark/rng.hpp"
#include "entmark/watermark.hpp"

namespace entmark {

// A single generation keeps the seed as given; batches derive one per record.
inline std::vector<Json> generate_records(const MarkovLM& lm, std::span<const TokenId> prompt,
                                          const GenerationConfig& config, std::uint64_t seed, std::size_t count) {
  require(count >= 1, "count must be at least 1");
  std::vector<Json> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint64_t record_seed = count == 1 ? seed : mix_seed(seed, i);
    Rng rng(record_seed);
    auto g = generate(lm, prompt, config, rng);
    g.rng_seed = record_seed;
    out.push_back(generation_to_json(g));
  }
  return out;
}

namespace detail {

inline void check_tokens(const TokenSeq& tokens, std::size_t vocab_size) {
  for (TokenId t : tokens) require(t < vocab_size, "record token id outside the model vocabulary");
}

}  // namespace detail

// Replaces "tokens" with the attacked sequence and records the plan and seed;
// every other field is carried through.
inline std::vector<Json> attack_records(const std::vector<Json>& records, std::span<const AttackSpec> plan,
                                        const std::vector<std::string>& names, std::size_t vocab_size,
                                        std::uint64_t seed) {
  std::vector<Json> out;
  out.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto rec = generation_from_json(records[i]);
    detail::check_tokens(rec.tokens, vocab_size);
    const std::uint64_t record_seed = mix_seed(seed, i);
    Rng rng(record_seed);
    Json j = rec.raw;
    j["tokens"] = attack(rec.tokens, plan, vocab_size, rng);
    j["attack"] = names;
    j["attack_seed"] = record_seed;
    out.push_back(std::move(j));
  }
  return out;
}

struct DetectOptions {
  DetectionMode mode = DetectionMode::kKey;
  std::optional<KeyKind> cost;  // default: from the record's sampler
  std::size_t k = 0;
  std::size_t T = 99;
  std::size_t s_max = 16;
  bool gate = false;  // scan mode: only the crossing point implied by lm and lambda
  std::uint64_t seed = 2;
};

// Key mode rebuilds the key from the record's seed tokens and salt. Records
// that never crossed lambda have no key and report p = 1 with phi0 = null.
inline Json detect_record(const GenerationRecord& rec, const MarkovLM& lm, const DetectOptions& options,
                          std::uint64_t record_seed) {
  const std::size_t n = lm.size();
  detail::check_tokens(rec.tokens, n);
  DetectionConfig config;
  config.k = options.k;
  config.T = options.T;
  config.s_max = options.s_max;
  if (options.cost) {
    config.cost = *options.cost;
  } else if (rec.sampler == SamplerKind::kMultinomial) {
    throw ValidationError("multinomial records need an explicit cost kind");
  } else {
    config.cost = key_kind_for(rec.sampler);
  }
  Rng rng(record_seed);
  DetectionReport report;
  if (options.mode == DetectionMode::kKey) {
    if (!rec.seed_tokens || rec.tokens.empty()) {
      report.k = config.block_length(rec.tokens.size());
      report.T = config.T;
      report.cost = config.cost;
      report.phi0 = std::numeric_limits<double>::quiet_NaN();
      report.p_value = 1.0;
    } else {
      const auto key = derive_prf_key({*rec.seed_tokens, rec.salt});
      const auto keys = derive_key_sequence(key, config.cost, std::max<std::size_t>(rec.m, 1), n);
      report = detect_pvalue(rec.tokens, keys, config, rng);
    }
    report.boundary = rec.boundary;
  } else {
    std::optional<ScanGate> gate;
    if (options.gate) {
      gate = ScanGate{&lm, rec.lambda, {}};
      if (rec.raw.contains("top_p")) gate->decoding.top_p = rec.raw["top_p"].get<double>();
      if (rec.raw.contains("temperature")) gate->decoding.temperature = rec.raw["temperature"].get<double>();
    }
    report = detect_seed_scan(rec.tokens, config, rec.salt, n, rng, rec.prompt, gate);
  }
  Json j = detection_to_json(report);
  j["detect_seed"] = record_seed;
  return j;
}

inline std::vector<Json> detect_records(const std::vector<Json>& records, const MarkovLM& lm,
                                        const DetectOptions& options) {
  std::vector<Json> out;
  out.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    out.push_back(detect_record(generation_from_json(records[i]), lm, options, mix_seed(options.seed, i)));
  }
  return out;
}

}  // namespace entmark
