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

#include <charconv>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "entmark/common.hpp"
#include "entmark/rng.hpp"

namespace entmark {

enum class AttackKind { kSubstitute, kInsert, kDelete, kCrop };

// One corruption step. rate applies to substitute/insert/delete; crop keeps
// the 0-based half-open range [crop_begin, crop_end).
struct AttackSpec {
  AttackKind kind = AttackKind::kSubstitute;
  double rate = 0.0;
  std::size_t crop_begin = 0;
  std::size_t crop_end = 0;
};

namespace detail {

// Shortest text that reads back as the same double.
inline std::string shortest(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

}  // namespace detail

inline std::string to_string(const AttackSpec& spec) {
  switch (spec.kind) {
    case AttackKind::kSubstitute: return "substitute:" + detail::shortest(spec.rate);
    case AttackKind::kInsert: return "insert:" + detail::shortest(spec.rate);
    case AttackKind::kDelete: return "delete:" + detail::shortest(spec.rate);
    case AttackKind::kCrop: return "crop:" + std::to_string(spec.crop_begin) + ":" + std::to_string(spec.crop_end);
  }
  return "?";
}

inline TokenSeq attack(std::span<const TokenId> y, const AttackSpec& spec, std::size_t vocab_size, Rng& rng) {
  if (spec.kind != AttackKind::kCrop) require(spec.rate >= 0.0 && spec.rate <= 1.0, "attack rate must lie in [0, 1]");
  require(vocab_size >= 2, "attack needs a vocabulary of at least two tokens");
  TokenSeq out;
  switch (spec.kind) {
    case AttackKind::kSubstitute:
      out.reserve(y.size());
      for (TokenId t : y) {
        if (rng.bernoulli(spec.rate)) {
          const auto r = static_cast<TokenId>(rng.below(vocab_size - 1));
          out.push_back(r < t ? r : r + 1);
        } else {
          out.push_back(t);
        }
      }
      break;
    case AttackKind::kInsert:
      for (TokenId t : y) {
        out.push_back(t);
        if (rng.bernoulli(spec.rate)) out.push_back(static_cast<TokenId>(rng.below(vocab_size)));
      }
      break;
    case AttackKind::kDelete:
      for (TokenId t : y) {
        if (!rng.bernoulli(spec.rate)) out.push_back(t);
      }
      break;
    case AttackKind::kCrop:
      if (spec.crop_begin >= spec.crop_end) throw ValidationError("crop range empty");
      require(spec.crop_end <= y.size(), "crop range exceeds the text");
      out.assign(y.begin() + static_cast<std::ptrdiff_t>(spec.crop_begin),
                 y.begin() + static_cast<std::ptrdiff_t>(spec.crop_end));
      break;
  }
  return out;
}

inline TokenSeq attack(std::span<const TokenId> y, std::span<const AttackSpec> plan, std::size_t vocab_size, Rng& rng) {
  TokenSeq current(y.begin(), y.end());
  for (const auto& step : plan) current = attack(current, step, vocab_size, rng);
  return current;
}

// Stand-in for paraphrase/translation attacks: substitute 0.25, then insert 0.1.
inline std::vector<AttackSpec> paraphrase_proxy() {
  return {AttackSpec{AttackKind::kSubstitute, 0.25}, AttackSpec{AttackKind::kInsert, 0.1}};
}

namespace detail {

inline double parse_rate(std::string_view text) {
  try {
    std::size_t used = 0;
    const double v = std::stod(std::string(text), &used);
    if (used != text.size()) throw ValidationError("bad attack rate: " + std::string(text));
    return v;
  } catch (const std::logic_error&) {
    throw ValidationError("bad attack rate: " + std::string(text));
  }
}

inline std::size_t parse_index(std::string_view text) {
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size()) throw ValidationError("bad crop index: " + std::string(text));
  return v;
}

}  // namespace detail

// "substitute:0.1", "insert:0.05", "delete:0.2", "crop:10:200" or
// "paraphrase-proxy".
inline std::vector<AttackSpec> parse_attack(std::string_view text) {
  if (text == "paraphrase-proxy") return paraphrase_proxy();
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) throw ValidationError("attack must look like kind:rate: " + std::string(text));
  const std::string_view kind = text.substr(0, colon);
  const std::string_view rest = text.substr(colon + 1);
  AttackSpec spec;
  if (kind == "crop") {
    const auto sep = rest.find(':');
    if (sep == std::string_view::npos) throw ValidationError("crop needs begin:end");
    spec.kind = AttackKind::kCrop;
    spec.crop_begin = detail::parse_index(rest.substr(0, sep));
    spec.crop_end = detail::parse_index(rest.substr(sep + 1));
    if (spec.crop_begin >= spec.crop_end) throw ValidationError("crop range empty");
    return {spec};
  }
  if (kind == "substitute") spec.kind = AttackKind::kSubstitute;
  else if (kind == "insert") spec.kind = AttackKind::kInsert;
  else if (kind == "delete") spec.kind = AttackKind::kDelete;
  else throw ValidationError("unknown attack kind: " + std::string(kind));
  spec.rate = detail::parse_rate(rest);
  require(spec.rate >= 0.0 && spec.rate <= 1.0, "attack rate must lie in [0, 1]");
  return {spec};
}

}  // namespace entmark
