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
#include <cctype>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "entmark/common.hpp"
#include "entmark/lm_core.hpp"

namespace entmark {

enum class TokenizeMode { kWord, kChar };

inline TokenizeMode parse_tokenize_mode(std::string_view name) {
  if (name == "word") return TokenizeMode::kWord;
  if (name == "char") return TokenizeMode::kChar;
  throw ValidationError("unknown tokenize mode: " + std::string(name));
}

inline std::string_view to_string(TokenizeMode mode) { return mode == TokenizeMode::kWord ? "word" : "char"; }

// Splits one line into whitespace-separated words or UTF-8 code points.
inline std::vector<std::string> split_tokens(std::string_view line, TokenizeMode mode) {
  std::vector<std::string> out;
  if (mode == TokenizeMode::kWord) {
    std::size_t i = 0;
    while (i < line.size()) {
      while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
      std::size_t j = i;
      while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
      if (j > i) out.emplace_back(line.substr(i, j - i));
      i = j;
    }
    return out;
  }
  for (std::size_t i = 0; i < line.size();) {
    const auto lead = static_cast<unsigned char>(line[i]);
    std::size_t len = lead < 0x80 ? 1 : (lead >> 5) == 0x6 ? 2 : (lead >> 4) == 0xE ? 3 : (lead >> 3) == 0x1E ? 4 : 1;
    len = std::min(len, line.size() - i);
    out.emplace_back(line.substr(i, len));
    i += len;
  }
  return out;
}

inline std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = end + 1;
  }
  return lines;
}

struct Corpus {
  Vocabulary vocab;
  std::vector<TokenSeq> sequences;  // one per non-empty line
};

// Vocabulary in order of first appearance; every non-empty line becomes a
// sequence.
inline Corpus ingest_corpus(std::string_view text, TokenizeMode mode) {
  std::vector<std::string> tokens;
  std::unordered_map<std::string, TokenId> index;
  std::vector<TokenSeq> sequences;
  for (std::string_view line : split_lines(text)) {
    TokenSeq seq;
    for (auto& tok : split_tokens(line, mode)) {
      auto [it, inserted] = index.emplace(tok, static_cast<TokenId>(tokens.size()));
      if (inserted) tokens.push_back(tok);
      seq.push_back(it->second);
    }
    if (!seq.empty()) sequences.push_back(std::move(seq));
  }
  if (tokens.size() < 2) throw ValidationError("insufficient corpus");
  return Corpus{Vocabulary(std::move(tokens)), std::move(sequences)};
}

// Prompt text to ids; unknown tokens are an error.
inline TokenSeq encode_text(const Vocabulary& vocab, std::string_view text, TokenizeMode mode) {
  TokenSeq out;
  for (std::string_view line : split_lines(text)) {
    for (auto& tok : split_tokens(line, mode)) {
      auto id = vocab.find(tok);
      if (!id) throw ValidationError("token not in vocabulary: " + tok);
      out.push_back(*id);
    }
  }
  return out;
}

inline std::string decode_text(const Vocabulary& vocab, std::span<const TokenId> tokens, TokenizeMode mode) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (mode == TokenizeMode::kWord && i > 0) out += ' ';
    out += vocab.token(tokens[i]);
  }
  return out;
}

}  // namespace entmark
