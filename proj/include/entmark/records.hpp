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
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "entmark/common.hpp"
#include "entmark/corpus.hpp"
#include "entmark/detection.hpp"
#include "entmark/keys.hpp"
#include "entmark/lm_core.hpp"
#include "entmark/watermark.hpp"

namespace entmark {

using Json = nlohmann::ordered_json;

inline constexpr std::string_view kModelFormat = "entmark.markov";
inline constexpr int kModelVersion = 1;

namespace detail {

// JSON has no infinities; they are written as null.
inline Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

template <typename T>
Json optional_or_null(const std::optional<T>& v) {
  return v ? Json(*v) : Json(nullptr);
}

template <typename T>
T field(const Json& j, const char* name) {
  if (!j.contains(name)) throw IoError(std::string("missing field \"") + name + "\"");
  try {
    return j.at(name).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw IoError(std::string("field \"") + name + "\" has the wrong type");
  }
}

template <typename T>
std::optional<T> optional_field(const Json& j, const char* name) {
  if (!j.contains(name) || j.at(name).is_null()) return std::nullopt;
  return field<T>(j, name);
}

}  // namespace detail

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw IoError("failed reading " + path);
  return buffer.str();
}

inline void write_file(const std::string& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << contents;
  if (!out) throw IoError("failed writing " + path);
}

// --- model ---------------------------------------------------------------

inline Json model_to_json(const MarkovLM& lm, TokenizeMode mode) {
  const std::size_t n = lm.size();
  Json counts = Json::array();
  for (std::size_t a = 0; a < n; ++a) {
    Json row = Json::array();
    for (std::size_t b = 0; b < n; ++b) row.push_back(lm.count(static_cast<TokenId>(a), static_cast<TokenId>(b)));
    counts.push_back(std::move(row));
  }
  Json j;
  j["format"] = kModelFormat;
  j["version"] = kModelVersion;
  j["tokenize"] = to_string(mode);
  j["smoothing"] = lm.smoothing();
  j["vocab"] = lm.vocab().tokens();
  j["start_counts"] = std::vector<std::uint64_t>(lm.start_counts().begin(), lm.start_counts().end());
  j["counts"] = std::move(counts);
  return j;
}

struct LoadedModel {
  MarkovLM lm;
  TokenizeMode mode;
};

inline LoadedModel model_from_json(const Json& j) {
  if (detail::field<std::string>(j, "format") != kModelFormat) throw IoError("not an entmark model file");
  if (detail::field<int>(j, "version") != kModelVersion) throw IoError("unsupported model version");
  auto tokens = detail::field<std::vector<std::string>>(j, "vocab");
  auto rows = detail::field<std::vector<std::vector<std::uint64_t>>>(j, "counts");
  auto start = detail::field<std::vector<std::uint64_t>>(j, "start_counts");
  const auto smoothing = detail::field<double>(j, "smoothing");
  const auto mode = parse_tokenize_mode(detail::field<std::string>(j, "tokenize"));
  std::vector<std::uint64_t> flat;
  for (const auto& row : rows) {
    if (row.size() != tokens.size()) throw IoError("model counts matrix is not N x N");
    flat.insert(flat.end(), row.begin(), row.end());
  }
  try {
    return LoadedModel{MarkovLM(Vocabulary(std::move(tokens)), std::move(flat), std::move(start), smoothing), mode};
  } catch (const ValidationError& e) {
    throw IoError(std::string("invalid model: ") + e.what());
  }
}

// --- generation records --------------------------------------------------

inline Json generation_to_json(const GenerationResult& g) {
  Json j;
  j["tokens"] = g.tokens;
  j["boundary"] = detail::optional_or_null(g.boundary);
  j["sampler"] = to_string(g.sampler);
  j["lambda"] = detail::number_or_null(g.lambda);
  j["salt"] = to_hex(g.salt);
  j["m"] = g.m;
  j["prf_id"] = g.prf_id;
  j["rng_seed"] = g.rng_seed;
  j["prompt"] = g.prompt;
  const auto seed = g.seed_block();
  j["seed_tokens"] = seed ? Json(seed->tokens) : Json(nullptr);
  j["top_p"] = g.decoding.top_p;
  j["temperature"] = g.decoding.temperature;
  return j;
}

// A generation record as read back, possibly with attacked tokens.
struct GenerationRecord {
  TokenSeq tokens;
  std::optional<std::size_t> boundary;
  SamplerKind sampler = SamplerKind::kIts;
  double lambda = 0.0;
  Salt salt;
  std::size_t m = 0;
  std::string prf_id;
  std::uint64_t rng_seed = 0;
  TokenSeq prompt;
  std::optional<TokenSeq> seed_tokens;
  Json raw;  // the full record, carried through attack
};

inline GenerationRecord generation_from_json(const Json& j) {
  GenerationRecord r;
  r.tokens = detail::field<TokenSeq>(j, "tokens");
  r.boundary = detail::optional_field<std::size_t>(j, "boundary");
  try {
    r.sampler = parse_sampler_kind(detail::field<std::string>(j, "sampler"));
    r.salt = salt_from_hex(detail::field<std::string>(j, "salt"));
  } catch (const ValidationError& e) {
    throw IoError(e.what());
  }
  r.lambda = detail::optional_field<double>(j, "lambda").value_or(std::numeric_limits<double>::infinity());
  r.m = detail::field<std::size_t>(j, "m");
  r.prf_id = detail::field<std::string>(j, "prf_id");
  r.rng_seed = detail::optional_field<std::uint64_t>(j, "rng_seed").value_or(0);
  r.prompt = detail::optional_field<TokenSeq>(j, "prompt").value_or(TokenSeq{});
  r.seed_tokens = detail::optional_field<TokenSeq>(j, "seed_tokens");
  r.raw = j;
  return r;
}

// --- detection records ---------------------------------------------------

inline Json detection_to_json(const DetectionReport& d) {
  Json j;
  j["p_value"] = d.p_value;
  j["phi0"] = detail::number_or_null(d.phi0);
  j["k"] = d.k;
  j["T"] = d.T;
  j["cost"] = to_string(d.cost);
  j["mode"] = to_string(d.mode);
  j["boundary"] = detail::optional_or_null(d.boundary);
  j["best_i"] = d.best_i;
  j["best_j"] = d.best_j;
  return j;
}

// --- JSONL ---------------------------------------------------------------

inline std::vector<Json> parse_jsonl(std::string_view text, const std::string& source) {
  std::vector<Json> out;
  std::size_t line_no = 0;
  for (std::string_view line : split_lines(text)) {
    ++line_no;
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    try {
      out.push_back(Json::parse(line));
    } catch (const nlohmann::json::parse_error&) {
      throw IoError(source + ":" + std::to_string(line_no) + ": malformed JSON record");
    }
  }
  return out;
}

inline std::vector<Json> read_jsonl(const std::string& path) { return parse_jsonl(read_file(path), path); }

inline std::string to_jsonl(const std::vector<Json>& records) {
  std::string out;
  for (const auto& r : records) {
    out += r.dump();
    out += '\n';
  }
  return out;
}

}  // namespace entmark
