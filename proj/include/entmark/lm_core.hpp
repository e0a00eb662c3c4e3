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
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "entmark/common.hpp"

namespace entmark {

// Ordered set of distinct token strings. Ids are positions in the list.
class Vocabulary {
 public:
  Vocabulary() = default;

  explicit Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
    require(tokens_.size() >= 2, "vocabulary needs at least two tokens");
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
      auto [it, inserted] = index_.emplace(tokens_[i], static_cast<TokenId>(i));
      if (!inserted) throw ValidationError("duplicate token in vocabulary: " + tokens_[i]);
    }
  }

  // Anonymous vocabulary "t0".."t{n-1}" for synthetic models.
  static Vocabulary numbered(std::size_t n) {
    std::vector<std::string> tokens;
    tokens.reserve(n);
    for (std::size_t i = 0; i < n; ++i) tokens.push_back("t" + std::to_string(i));
    return Vocabulary(std::move(tokens));
  }

  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  const std::string& token(TokenId id) const { return tokens_.at(id); }
  bool contains(TokenId id) const { return id < tokens_.size(); }

  std::optional<TokenId> find(std::string_view token) const {
    auto it = index_.find(std::string(token));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
};

// Probability vector over a vocabulary. Construction validates.
class TokenDistribution {
 public:
  static constexpr double kSumTolerance = 1e-9;

  TokenDistribution() = default;

  explicit TokenDistribution(std::vector<double> probs) : probs_(std::move(probs)) {
    require(!probs_.empty(), "empty distribution");
    double total = 0.0;
    for (double p : probs_) {
      if (!(p >= 0.0) || !std::isfinite(p)) throw ValidationError("distribution has a negative or non-finite entry");
      total += p;
    }
    if (std::abs(total - 1.0) > kSumTolerance) throw ValidationError("distribution does not sum to 1");
  }

  // Normalizes nonnegative weights; throws if they are all zero.
  static TokenDistribution from_weights(std::vector<double> weights) {
    double total = 0.0;
    for (double w : weights) {
      if (!(w >= 0.0) || !std::isfinite(w)) throw ValidationError("weights must be finite and nonnegative");
      total += w;
    }
    require(total > 0.0, "weights sum to zero");
    for (double& w : weights) w /= total;
    return TokenDistribution(std::move(weights));
  }

  static TokenDistribution uniform(std::size_t n) {
    require(n >= 1, "uniform distribution needs n >= 1");
    return TokenDistribution(std::vector<double>(n, 1.0 / static_cast<double>(n)));
  }

  static TokenDistribution point_mass(std::size_t n, TokenId token) {
    require(token < n, "point mass token out of range");
    std::vector<double> probs(n, 0.0);
    probs[token] = 1.0;
    return TokenDistribution(std::move(probs));
  }

  std::size_t size() const { return probs_.size(); }
  double operator[](TokenId token) const { return probs_[token]; }
  std::span<const double> probs() const { return probs_; }

 private:
  std::vector<double> probs_;
};

// Order-1 Markov model with additive smoothing. A virtual begin-of-sequence
// row (start counts) supplies the distribution for an empty context.
class MarkovLM {
 public:
  MarkovLM(Vocabulary vocab, std::vector<std::uint64_t> counts, std::vector<std::uint64_t> start_counts,
           double smoothing)
      : vocab_(std::move(vocab)),
        counts_(std::move(counts)),
        start_counts_(std::move(start_counts)),
        smoothing_(smoothing) {
    const std::size_t n = vocab_.size();
    require(smoothing_ > 0.0 && std::isfinite(smoothing_), "smoothing must be positive");
    require(counts_.size() == n * n, "counts matrix must be N x N");
    require(start_counts_.size() == n, "start counts must have N entries");
    row_totals_.resize(n);
    for (std::size_t a = 0; a < n; ++a) {
      row_totals_[a] = std::accumulate(counts_.begin() + a * n, counts_.begin() + (a + 1) * n, std::uint64_t{0});
    }
    start_total_ = std::accumulate(start_counts_.begin(), start_counts_.end(), std::uint64_t{0});
  }

  const Vocabulary& vocab() const { return vocab_; }
  std::size_t size() const { return vocab_.size(); }
  double smoothing() const { return smoothing_; }
  std::uint64_t count(TokenId from, TokenId to) const { return counts_.at(from * size() + to); }
  std::span<const std::uint64_t> counts() const { return counts_; }
  std::span<const std::uint64_t> start_counts() const { return start_counts_; }

  // p(. | last token of prefix). The prefix must be non-empty.
  TokenDistribution next_distribution(std::span<const TokenId> prefix) const {
    require(!prefix.empty(), "next_distribution: empty prefix");
    const TokenId last = prefix.back();
    require(vocab_.contains(last), "next_distribution: invalid token id");
    return row(std::span<const std::uint64_t>(counts_).subspan(last * size(), size()), row_totals_[last]);
  }

  // Distribution after the begin-of-sequence marker.
  TokenDistribution start_distribution() const { return row(start_counts_, start_total_); }

  // Empty contexts fall back to the start row.
  TokenDistribution distribution(std::span<const TokenId> context) const {
    return context.empty() ? start_distribution() : next_distribution(context);
  }

 private:
  TokenDistribution row(std::span<const std::uint64_t> counts, std::uint64_t total) const {
    const double denom = static_cast<double>(total) + static_cast<double>(size()) * smoothing_;
    std::vector<double> probs(size());
    for (std::size_t b = 0; b < size(); ++b) probs[b] = (static_cast<double>(counts[b]) + smoothing_) / denom;
    return TokenDistribution(std::move(probs));
  }

  Vocabulary vocab_;
  std::vector<std::uint64_t> counts_;
  std::vector<std::uint64_t> start_counts_;
  std::vector<std::uint64_t> row_totals_;
  std::uint64_t start_total_ = 0;
  double smoothing_ = 1.0;
};

// Counts adjacent pairs within each sequence; each sequence's first token
// also counts toward the start row.
inline MarkovLM train_markov(std::span<const TokenSeq> sequences, const Vocabulary& vocab, double smoothing) {
  require(smoothing > 0.0 && std::isfinite(smoothing), "smoothing must be positive");
  const std::size_t n = vocab.size();
  std::vector<std::uint64_t> counts(n * n, 0);
  std::vector<std::uint64_t> start(n, 0);
  std::size_t pairs = 0;
  for (const auto& seq : sequences) {
    for (TokenId t : seq) require(vocab.contains(t), "corpus contains an invalid token id");
    if (seq.empty()) continue;
    ++start[seq.front()];
    for (std::size_t i = 1; i < seq.size(); ++i) {
      ++counts[seq[i - 1] * n + seq[i]];
      ++pairs;
    }
  }
  if (pairs == 0) throw ValidationError("insufficient corpus");
  return MarkovLM(vocab, std::move(counts), std::move(start), smoothing);
}

inline MarkovLM train_markov(const TokenSeq& corpus, const Vocabulary& vocab, double smoothing) {
  return train_markov(std::span<const TokenSeq>(&corpus, 1), vocab, smoothing);
}

// Keeps the smallest descending-probability prefix (ties by ascending id)
// whose mass reaches top_p, then renormalizes.
inline TokenDistribution apply_top_p(const TokenDistribution& dist, double top_p) {
  require(top_p > 0.0 && top_p <= 1.0, "top_p must lie in (0, 1]");
  if (top_p == 1.0) return dist;
  std::vector<TokenId> order(dist.size());
  std::iota(order.begin(), order.end(), TokenId{0});
  std::stable_sort(order.begin(), order.end(), [&](TokenId a, TokenId b) { return dist[a] > dist[b]; });
  std::vector<double> kept(dist.size(), 0.0);
  double cumulative = 0.0;
  for (TokenId t : order) {
    kept[t] = dist[t];
    cumulative += dist[t];
    // Absorbs rounding in sums such as 0.5 + 0.3 against 0.8.
    if (cumulative >= top_p - 1e-12) break;
  }
  return TokenDistribution::from_weights(std::move(kept));
}

// probs ∝ probs^(1/temperature), evaluated in log space so that tiny
// temperatures approach the argmax instead of underflowing.
inline TokenDistribution apply_temperature(const TokenDistribution& dist, double temperature) {
  require(temperature > 0.0 && std::isfinite(temperature), "temperature must be positive");
  if (temperature == 1.0) return dist;
  double top = 0.0;
  for (double p : dist.probs()) top = std::max(top, p);
  std::vector<double> weights(dist.size(), 0.0);
  for (std::size_t i = 0; i < dist.size(); ++i) {
    if (dist[i] > 0.0) weights[i] = std::exp((std::log(dist[i]) - std::log(top)) / temperature);
  }
  return TokenDistribution::from_weights(std::move(weights));
}

// Decoding regime applied to every model distribution before sampling.
struct Decoding {
  double top_p = 1.0;
  double temperature = 1.0;

  TokenDistribution apply(const TokenDistribution& dist) const {
    return apply_top_p(apply_temperature(dist, temperature), top_p);
  }
};

}  // namespace entmark
