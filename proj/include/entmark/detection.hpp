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

#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "entmark/common.hpp"
#include "entmark/keys.hpp"
#include "entmark/lm_core.hpp"
#include "entmark/rng.hpp"
#include "entmark/token_coding.hpp"
#include "entmark/watermark.hpp"

namespace entmark {

// Token score on [0, 1]: eta(t) = t / (N - 1) for 0-based ids, so the
// first token scores 0 and the last scores 1.
inline double eta(TokenId token, std::size_t vocab_size) {
  require(vocab_size >= 2, "eta needs N >= 2");
  require(token < vocab_size, "eta: invalid token id");
  return static_cast<double>(token) / static_cast<double>(vocab_size - 1);
}

// Reads a BS key element back as a token score: bit j = 1(u_j > 1/2), the
// bits decode to a token (unused patterns clamp to the last token) and the
// token is scored with eta.
inline double h_of(std::span<const double> u, const TokenCode& code) {
  require(u.size() == code.length(), "h_of: key element needs one uniform per code bit");
  std::uint32_t word = 0;
  for (double v : u) word = (word << 1) | static_cast<std::uint32_t>(v > 0.5);
  return eta(code.clamp_decode_word(word), code.vocab_size());
}

inline double h_of(const BsKeyElement& elem, const TokenCode& code) { return h_of(elem.u, code); }

// Single-position terms of the negative-covariance alignment costs.
inline double its_term(TokenId token, double u, std::span<const std::uint32_t> rank) {
  return -(u - 0.5) * (eta(rank[token], rank.size()) - 0.5);
}

inline double bs_term(TokenId token, double h, std::size_t vocab_size) {
  return -(h - 0.5) * (eta(token, vocab_size) - 0.5);
}

// d(y, (u, pi)) = -sum (u_i - 1/2)(eta(pi_i(y_i)) - 1/2)
inline double cost_its(std::span<const TokenId> y, std::span<const ItsKeyElement> key) {
  require(y.size() == key.size(), "cost_its: block lengths differ");
  double total = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) total += its_term(y[i], key[i].u, key[i].rank);
  return total;
}

// d(y, u) = -sum (h(u_i) - 1/2)(eta(y_i) - 1/2)
inline double cost_bs(std::span<const TokenId> y, std::span<const BsKeyElement> key, const TokenCode& code) {
  require(y.size() == key.size(), "cost_bs: block lengths differ");
  double total = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) total += bs_term(y[i], h_of(key[i], code), code.vocab_size());
  return total;
}

// Term for text token y against element j of a key sequence.
class CostTerms {
 public:
  explicit CostTerms(const KeySequence& keys) : keys_(keys) {
    if (keys.kind() == KeyKind::kBs) {
      const TokenCode code(keys.vocab_size());
      h_.reserve(keys.size());
      for (std::size_t j = 0; j < keys.size(); ++j) h_.push_back(h_of(keys.bs(j), code) - 0.5);
    }
  }

  double operator()(TokenId y, std::size_t j) const {
    if (keys_.kind() == KeyKind::kBs) return -h_[j] * (eta(y, keys_.vocab_size()) - 0.5);
    const auto e = keys_.its(j);
    return its_term(y, e.u, e.rank);
  }

 private:
  const KeySequence& keys_;
  std::vector<double> h_;
};

// Cost of text block y[i, i+k) against key block starting at j, wrapping
// around the key sequence.
inline double block_cost(std::span<const TokenId> y, std::size_t i, const KeySequence& keys, std::size_t j,
                         std::size_t k) {
  require(i + k <= y.size(), "block_cost: text block out of range");
  require(!keys.empty(), "block_cost: empty key sequence");
  const CostTerms terms(keys);
  double total = 0.0;
  for (std::size_t l = 0; l < k; ++l) total += terms(y[i + l], (j + l) % keys.size());
  return total;
}

struct PhiResult {
  double value = 0.0;
  std::size_t best_i = 0;  // text block start (0-based)
  std::size_t best_j = 0;  // key block start (0-based)
};

// Minimum block cost over every (text block, key block) pair. Blocks that
// share a diagonal (j - i mod n) are swept with one sliding window, so the
// whole grid costs O(len(y) * n) term evaluations. Ties go to the smallest
// (i, j).
inline PhiResult phi(std::span<const TokenId> y, const KeySequence& keys, std::size_t k) {
  if (y.size() < k) throw ValidationError("text shorter than block");
  require(k >= 1, "block length k must be at least 1");
  require(!keys.empty(), "phi: empty key sequence");
  for (TokenId t : y) require(t < keys.vocab_size(), "phi: token id outside the key vocabulary");
  const std::size_t n = keys.size();
  const std::size_t blocks = y.size() - k + 1;
  const CostTerms terms(keys);

  PhiResult best{std::numeric_limits<double>::infinity(), 0, 0};
  std::vector<double> prefix(y.size() + 1);
  for (std::size_t d = 0; d < n; ++d) {
    prefix[0] = 0.0;
    for (std::size_t a = 0; a < y.size(); ++a) prefix[a + 1] = prefix[a] + terms(y[a], (a + d) % n);
    for (std::size_t i = 0; i < blocks; ++i) {
      const double value = prefix[i + k] - prefix[i];
      const std::size_t j = (i + d) % n;
      if (value < best.value ||
          (value == best.value && (i < best.best_i || (i == best.best_i && j < best.best_j)))) {
        best = {value, i, j};
      }
    }
  }
  return best;
}

enum class DetectionMode { kKey, kScan };

inline std::string_view to_string(DetectionMode mode) { return mode == DetectionMode::kKey ? "key" : "scan"; }

struct DetectionConfig {
  static constexpr std::size_t kDefaultBlock = 50;

  std::size_t k = 0;  // 0 selects min(len(y), 50)
  std::size_t T = 99;
  KeyKind cost = KeyKind::kIts;
  std::size_t s_max = 16;  // seed-scan only

  std::size_t block_length(std::size_t text_length) const {
    return k != 0 ? k : std::min(text_length, kDefaultBlock);
  }
};

struct DetectionReport {
  double phi0 = 0.0;
  std::vector<double> phi_null;
  double p_value = 1.0;
  std::size_t best_i = 0;
  std::size_t best_j = 0;
  std::size_t k = 0;
  std::size_t T = 0;
  KeyKind cost = KeyKind::kIts;
  DetectionMode mode = DetectionMode::kKey;
  std::optional<std::size_t> boundary;
  std::vector<std::size_t> scanned;
  std::vector<double> scanned_p_values;
};

// (1 + #{t : phi_null[t] <= phi0}) / (T + 1)
inline double permutation_p_value(double phi0, std::span<const double> phi_null) {
  std::size_t hits = 0;
  for (double v : phi_null) hits += v <= phi0 ? 1 : 0;
  return static_cast<double>(1 + hits) / static_cast<double>(phi_null.size() + 1);
}

// phi with the supplied keys against T statistics from resampled null keys
// of the same length.
inline DetectionReport detect_pvalue(std::span<const TokenId> y, const KeySequence& keys,
                                     const DetectionConfig& config, Rng& rng) {
  if (keys.kind() != config.cost) throw ValidationError("key kind does not match cost kind");
  require(config.T >= 1, "resample count T must be at least 1");
  require(!y.empty(), "detect: empty text");
  DetectionReport report;
  report.k = config.block_length(y.size());
  report.T = config.T;
  report.cost = config.cost;
  report.mode = DetectionMode::kKey;
  const PhiResult observed = phi(y, keys, report.k);
  report.phi0 = observed.value;
  report.best_i = observed.best_i;
  report.best_j = observed.best_j;
  report.phi_null.reserve(config.T);
  for (std::size_t t = 0; t < config.T; ++t) {
    const KeySequence null_keys = resample_key_sequence(keys.kind(), keys.size(), keys.vocab_size(), rng);
    report.phi_null.push_back(phi(y, null_keys, report.k).value);
  }
  report.p_value = permutation_p_value(report.phi0, report.phi_null);
  return report;
}

// Optional entropy gate for seed scanning: with the model, decoding and
// lambda known, the only candidate boundary is where the accumulated
// watermark entropy of the observed prefix first reaches lambda.
struct ScanGate {
  const MarkovLM* lm = nullptr;
  double lambda = 0.0;
  Decoding decoding;
};

// Detects without a shared key: tries each candidate boundary s, derives the
// keys from y[0, s) (the prompt when s = 0) and tests the suffix y[s, len).
// p_final = min(1, C * min_s p_s) over the C candidates.
inline DetectionReport detect_seed_scan(std::span<const TokenId> y, const DetectionConfig& config, const Salt& salt,
                                        std::size_t vocab_size, Rng& rng, std::span<const TokenId> prompt = {},
                                        const std::optional<ScanGate>& gate = std::nullopt) {
  const std::size_t k = config.k != 0 ? config.k : std::min(DetectionConfig::kDefaultBlock, y.size() >= 2 ? y.size() - 2 : 0);
  if (k == 0 || y.size() <= k + 1) throw ValidationError("text too short for seed scan");
  const std::size_t last = std::min(config.s_max, y.size() - k - 1);

  std::vector<std::size_t> candidates;
  if (gate && gate->lm != nullptr) {
    require(gate->lm->size() == vocab_size, "scan gate model disagrees on N");
    EntropyAccumulator entropy(gate->lambda);
    TokenSeq context(prompt.begin(), prompt.end());
    std::optional<std::size_t> crossing;
    if (entropy.reached()) crossing = 0;
    for (std::size_t i = 0; i < y.size() && !crossing; ++i) {
      const TokenDistribution dist = gate->decoding.apply(gate->lm->distribution(context));
      entropy.add(1.0 - dist[y[i]]);
      context.push_back(y[i]);
      if (entropy.reached()) crossing = i + 1;
    }
    if (crossing && *crossing <= y.size() - k - 1) candidates.push_back(*crossing);
  } else {
    for (std::size_t s = 0; s <= last; ++s) candidates.push_back(s);
  }

  DetectionReport best;
  best.k = k;
  best.T = config.T;
  best.cost = config.cost;
  best.p_value = 1.0;
  bool have_best = false;
  DetectionConfig inner = config;
  inner.k = k;
  std::vector<double> p_values;
  for (std::size_t s : candidates) {
    SeedBlock seed{s == 0 ? TokenSeq(prompt.begin(), prompt.end()) : TokenSeq(y.begin(), y.begin() + s), salt};
    const auto suffix = y.subspan(s);
    const KeySequence keys = derive_key_sequence(derive_prf_key(seed), config.cost, suffix.size(), vocab_size);
    DetectionReport r = detect_pvalue(suffix, keys, inner, rng);
    p_values.push_back(r.p_value);
    // Equal p-values (both at the 1/(T+1) floor, say) go to the lower cost.
    if (!have_best || r.p_value < best.p_value || (r.p_value == best.p_value && r.phi0 < best.phi0)) {
      best = std::move(r);
      best.boundary = s;
      best.best_i += s;  // report text positions in y's coordinates
      have_best = true;
    }
  }
  best.mode = DetectionMode::kScan;
  best.scanned = candidates;
  best.scanned_p_values = p_values;
  if (!have_best) {
    best.boundary.reset();
    best.phi0 = std::numeric_limits<double>::quiet_NaN();
    best.p_value = 1.0;
    return best;
  }
  best.p_value = std::min(1.0, static_cast<double>(candidates.size()) * best.p_value);
  return best;
}

}  // namespace entmark
