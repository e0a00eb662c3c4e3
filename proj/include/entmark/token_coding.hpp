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

#include <bit>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "entmark/common.hpp"
#include "entmark/lm_core.hpp"

namespace entmark {

// Fixed-length canonical binary code: token t maps to the L-bit big-endian
// representation of t, L = ceil(log2 N). Patterns >= N are unused.
class TokenCode {
 public:
  explicit TokenCode(std::size_t vocab_size) : n_(vocab_size) {
    if (vocab_size < 2) throw ValidationError("degenerate vocabulary");
    require(vocab_size <= (std::size_t{1} << 31), "vocabulary too large for 32-bit code words");
    length_ = static_cast<unsigned>(std::bit_width(vocab_size - 1));
  }

  std::size_t vocab_size() const { return n_; }
  unsigned length() const { return length_; }

  std::uint32_t word(TokenId token) const {
    require(token < n_, "encode: invalid token id");
    return token;
  }

  bool is_valid_word(std::uint32_t word) const { return word < n_; }

  TokenId decode_word(std::uint32_t word) const {
    if (!is_valid_word(word)) throw ValidationError("invalid code word");
    return word;
  }

  // Unused patterns all exceed N-1, so the lexicographically nearest valid
  // code word is always N-1.
  TokenId clamp_decode_word(std::uint32_t word) const {
    return is_valid_word(word) ? word : static_cast<TokenId>(n_ - 1);
  }

  // Token ids whose code starts with the given prefix form [first, last).
  std::pair<TokenId, TokenId> prefix_range(std::uint32_t prefix, unsigned prefix_length) const {
    const unsigned shift = length_ - prefix_length;
    const std::uint64_t first = std::uint64_t{prefix} << shift;
    const std::uint64_t last = (std::uint64_t{prefix} + 1) << shift;
    return {static_cast<TokenId>(std::min<std::uint64_t>(first, n_)),
            static_cast<TokenId>(std::min<std::uint64_t>(last, n_))};
  }

 private:
  std::size_t n_;
  unsigned length_;
};

inline TokenCode build_codes(const Vocabulary& vocab) { return TokenCode(vocab.size()); }

inline std::string encode(const TokenCode& code, TokenId token) {
  const std::uint32_t w = code.word(token);
  std::string bits(code.length(), '0');
  for (unsigned j = 0; j < code.length(); ++j) {
    if ((w >> (code.length() - 1 - j)) & 1u) bits[j] = '1';
  }
  return bits;
}

namespace detail {

inline std::uint32_t parse_bits(std::string_view bits) {
  std::uint32_t w = 0;
  for (char c : bits) {
    require(c == '0' || c == '1', "bit string may only contain 0 and 1");
    w = (w << 1) | static_cast<std::uint32_t>(c == '1');
  }
  return w;
}

}  // namespace detail

inline TokenId decode(const TokenCode& code, std::string_view bits) {
  require(bits.size() == code.length(), "decode: bit string has the wrong length");
  return code.decode_word(detail::parse_bits(bits));
}

// P(next bit = 1 | code starts with prefix) under dist.
inline double bit_conditional(const TokenDistribution& dist, const TokenCode& code, std::string_view prefix) {
  require(dist.size() == code.vocab_size(), "distribution and code disagree on N");
  require(prefix.size() < code.length(), "prefix must be shorter than the code length");
  const std::uint32_t p = detail::parse_bits(prefix);
  const auto len = static_cast<unsigned>(prefix.size());
  auto mass = [&](std::pair<TokenId, TokenId> r) {
    double m = 0.0;
    for (TokenId t = r.first; t < r.second; ++t) m += dist[t];
    return m;
  };
  const double total = mass(code.prefix_range(p, len));
  if (!(total > 0.0)) throw ValidationError("unreachable prefix");
  const double ones = mass(code.prefix_range((p << 1) | 1u, len + 1));
  return std::min(1.0, ones / total);
}

}  // namespace entmark
