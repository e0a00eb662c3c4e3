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

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "entmark/common.hpp"
#include "entmark/keys.hpp"
#include "entmark/lm_core.hpp"
#include "entmark/rng.hpp"
#include "entmark/token_coding.hpp"

namespace entmark {

enum class SamplerKind { kIts, kBs, kMultinomial };

inline std::string_view to_string(SamplerKind kind) {
  switch (kind) {
    case SamplerKind::kIts: return "its";
    case SamplerKind::kBs: return "bs";
    case SamplerKind::kMultinomial: return "multinomial";
  }
  return "?";
}

inline SamplerKind parse_sampler_kind(std::string_view name) {
  if (name == "its") return SamplerKind::kIts;
  if (name == "bs") return SamplerKind::kBs;
  if (name == "multinomial") return SamplerKind::kMultinomial;
  throw ValidationError("unknown sampler: " + std::string(name));
}

// Inverse transform sampling in key rank order: walk tokens by ascending
// rank and return the first whose cumulative mass reaches u. Zero-mass tokens
// are never returned (only matters for u == 0).
inline TokenId sample_its(const TokenDistribution& dist, double u, std::span<const std::uint32_t> rank) {
  const std::size_t n = dist.size();
  require(rank.size() == n, "sample_its: permutation and distribution disagree on N");
  std::vector<TokenId> by_rank(n);
  for (std::size_t t = 0; t < n; ++t) {
    require(rank[t] < n, "sample_its: rank out of range");
    by_rank[rank[t]] = static_cast<TokenId>(t);
  }
  double cumulative = 0.0;
  TokenId last_positive = by_rank[0];
  for (TokenId t : by_rank) {
    if (dist[t] <= 0.0) continue;
    cumulative += dist[t];
    last_positive = t;
    if (cumulative >= u) return t;
  }
  return last_positive;  // rounding left the total just under u
}

inline TokenId sample_its(const TokenDistribution& dist, const ItsKeyElement& elem) {
  return sample_its(dist, elem.u, elem.rank);
}

// Bitwise sampling through the fixed-length code: bit j is 1 iff
// u_j >= P(bit j = 0 | bits so far). Large uniforms therefore select large
// code words, the same orientation h_of reads back.
inline TokenId sample_bs(const TokenDistribution& dist, const TokenCode& code, std::span<const double> u) {
  require(dist.size() == code.vocab_size(), "sample_bs: distribution and code disagree on N");
  require(u.size() == code.length(), "sample_bs: key element needs one uniform per code bit");
  auto mass = [&](std::pair<TokenId, TokenId> r) {
    double m = 0.0;
    for (TokenId t = r.first; t < r.second; ++t) m += dist[t];
    return m;
  };
  std::uint32_t prefix = 0;
  for (unsigned j = 0; j < code.length(); ++j) {
    const double zeros = mass(code.prefix_range(prefix << 1, j + 1));
    const double ones = mass(code.prefix_range((prefix << 1) | 1u, j + 1));
    const double total = zeros + ones;
    require(total > 0.0, "sample_bs: reached an unreachable prefix");
    const bool bit = ones > 0.0 && (zeros == 0.0 || u[j] >= zeros / total);
    prefix = (prefix << 1) | static_cast<std::uint32_t>(bit);
  }
  return code.decode_word(prefix);
}

inline TokenId sample_bs(const TokenDistribution& dist, const TokenCode& code, const BsKeyElement& elem) {
  return sample_bs(dist, code, elem.u);
}

// Plain inverse-CDF draw with one fresh uniform.
inline TokenId sample_multinomial(const TokenDistribution& dist, Rng& rng) {
  const double u = rng.uniform();
  double cumulative = 0.0;
  TokenId last_positive = 0;
  for (TokenId t = 0; t < dist.size(); ++t) {
    if (dist[t] <= 0.0) continue;
    cumulative += dist[t];
    last_positive = t;
    if (u < cumulative) return t;
  }
  return last_positive;
}

}  // namespace entmark
