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
#include <set>
#include <string>
#include <vector>

#include "entmark/attacks.hpp"
#include "entmark/common.hpp"
#include "entmark/detection.hpp"
#include "entmark/keys.hpp"
#include "entmark/lm_core.hpp"
#include "entmark/metrics.hpp"
#include "entmark/records.hpp"
#include "entmark/rng.hpp"
#include "entmark/stats.hpp"
#include "entmark/watermark.hpp"

namespace entmark {

// ---------------------------------------------------------------------------
// Toy models used by the experiments.

// Every row uniform over N tokens.
inline MarkovLM uniform_lm(std::size_t n) {
  return MarkovLM(Vocabulary::numbered(n), std::vector<std::uint64_t>(n * n, 0), std::vector<std::uint64_t>(n, 0), 1.0);
}

// Trained on an i.i.d. uniform corpus with add-one smoothing: every row is
// close to uniform, roughly log2(N) bits per token.
inline MarkovLM high_entropy_lm(std::size_t n = 16, std::uint64_t seed = 7, std::size_t corpus_length = 20000) {
  Rng rng(seed);
  TokenSeq corpus(corpus_length);
  for (auto& t : corpus) t = static_cast<TokenId>(rng.below(n));
  return train_markov(corpus, Vocabulary::numbered(n), 1.0);
}

// Each token is followed by (token + 1) mod N with probability top_prob;
// the remaining mass is spread evenly.
inline MarkovLM near_deterministic_lm(std::size_t n, double top_prob) {
  require(n >= 2, "near_deterministic_lm: N must be at least 2");
  require(top_prob > 1.0 / static_cast<double>(n) && top_prob < 1.0, "near_deterministic_lm: top_prob out of range");
  // (C + 1) / (C + N) = top_prob with unit smoothing.
  const auto c = static_cast<std::uint64_t>(std::ceil((top_prob * static_cast<double>(n) - 1.0) / (1.0 - top_prob)));
  std::vector<std::uint64_t> counts(n * n, 0);
  std::vector<std::uint64_t> start(n, 0);
  for (std::size_t a = 0; a < n; ++a) counts[a * n + (a + 1) % n] = c;
  start[0] = c;
  return MarkovLM(Vocabulary::numbered(n), std::move(counts), std::move(start), 1.0);
}

// Random N=4 model with moderate, uneven rows (for indistinguishability runs).
inline MarkovLM small_random_lm(std::size_t n = 4, std::uint64_t seed = 11) {
  Rng rng(seed);
  std::vector<std::uint64_t> counts(n * n);
  std::vector<std::uint64_t> start(n);
  for (auto& c : counts) c = rng.below(12);
  for (auto& c : start) c = rng.below(12);
  return MarkovLM(Vocabulary::numbered(n), std::move(counts), std::move(start), 1.0);
}

inline Salt random_salt(Rng& rng, std::size_t bytes = 16) {
  Salt s(bytes);
  for (auto& b : s) b = static_cast<std::uint8_t>(rng.below(256));
  return s;
}

// Variance of eta over a uniformly random token, (N + 1) / (12 (N - 1)).
inline double uniform_eta_variance(std::size_t n) {
  return static_cast<double>(n + 1) / (12.0 * static_cast<double>(n - 1));
}

inline Json experiment_record(std::string name, std::uint64_t seed, Json config, Json metrics, Json bounds, bool pass) {
  Json j;
  j["experiment"] = std::move(name);
  j["prf_id"] = kPrfId;
  j["seed"] = seed;
  j["config"] = std::move(config);
  j["metrics"] = std::move(metrics);
  j["bounds"] = std::move(bounds);
  j["pass"] = pass;
  return j;
}

// Binomial standard deviation of an empirical rate whose true value is at
// most `bound` (clipped to [0, 1]).
inline double bound_sigma(double bound, std::size_t trials) {
  const double b = std::clamp(bound, 0.0, 1.0);
  return std::sqrt(b * (1.0 - b) / static_cast<double>(trials));
}

// ---------------------------------------------------------------------------
// Birthday-style bound on how many generations fit in k key slots before a
// collision reaches probability p: l <= sqrt(k * (-2 ln(1 - p))).
inline double collision_bound(double k, double p) {
  require(k > 0.0, "collision_bound: k must be positive");
  require(p >= 0.0 && p < 1.0, "collision_bound: p must lie in [0, 1)");
  return std::sqrt(k * (-2.0 * std::log1p(-p)));
}

struct CollisionResult {
  std::size_t generations = 0;
  std::size_t seeded = 0;      // generations that reached lambda
  std::size_t collisions = 0;  // seeds equal to an earlier seed
  double fraction = 0.0;
  double bound = 0.0;  // (t - 1) 2^-lambda
  double sigma = 0.0;
  bool pass = false;

  Json to_record(std::uint64_t seed, double lambda, std::size_t m) const {
    return experiment_record("collision", seed, {{"t", generations}, {"lambda", lambda}, {"m", m}},
                             {{"seeded", seeded}, {"collisions", collisions}, {"fraction", fraction}},
                             {{"bound", bound}, {"sigma", sigma}}, pass);
  }
};

// t generations from one prompt with a fixed salt; counts seed blocks that
// repeat an earlier one.
inline CollisionResult simulate_collisions(const MarkovLM& lm, std::size_t t, double lambda, std::size_t m,
                                           std::uint64_t seed, SamplerKind sampler = SamplerKind::kIts) {
  require(t >= 1, "simulate_collisions: t must be at least 1");
  Rng rng(seed);
  GenerationConfig config{lambda, m, sampler, salt_from_hex("00c0ffee"), {}};
  std::set<TokenSeq> seen;
  CollisionResult r;
  r.generations = t;
  for (std::size_t i = 0; i < t; ++i) {
    const auto g = generate(lm, {}, config, rng);
    const auto block = g.seed_block();
    if (!block) continue;
    ++r.seeded;
    if (!seen.insert(block->tokens).second) ++r.collisions;
  }
  r.fraction = static_cast<double>(r.collisions) / static_cast<double>(t);
  r.bound = static_cast<double>(t - 1) * std::exp2(-lambda);
  r.sigma = bound_sigma(r.bound, t);
  r.pass = r.fraction <= r.bound + 3.0 * r.sigma;
  return r;
}

// ---------------------------------------------------------------------------
// Watermarked vs baseline n-gram frequencies.

struct IndistinguishabilityResult {
  ChiSquareResult unigram;
  ChiSquareResult bigram;
  bool identical_corpora = false;
  bool pass = false;

  Json to_record(std::uint64_t seed, double lambda, std::size_t m, std::size_t samples, SamplerKind sampler) const {
    return experiment_record(
        "indistinguishability", seed,
        {{"lambda", detail::number_or_null(lambda)}, {"m", m}, {"samples", samples}, {"sampler", to_string(sampler)}},
        {{"unigram_chi2", unigram.statistic},
         {"unigram_df", unigram.df},
         {"unigram_p", unigram.p_value},
         {"bigram_chi2", bigram.statistic},
         {"bigram_df", bigram.df},
         {"bigram_p", bigram.p_value},
         {"identical_corpora", identical_corpora}},
        {{"min_p", 0.01}}, pass);
  }
};

// Each watermarked sample gets a fresh random salt, i.e. a fresh secret key,
// unless fixed_salt is given.
inline IndistinguishabilityResult exp_indistinguishability(const MarkovLM& lm, double lambda, std::size_t m,
                                                           std::size_t samples, std::uint64_t seed,
                                                           SamplerKind sampler = SamplerKind::kIts,
                                                           const std::optional<Salt>& fixed_salt = std::nullopt) {
  require(samples >= 1, "exp_indistinguishability: need at least one sample");
  const std::size_t n = lm.size();
  Rng wm_rng(mix_seed(seed, 1));
  Rng salt_rng(mix_seed(seed, 2));
  Rng base_rng(mix_seed(seed, 3));
  std::vector<std::uint64_t> uni_w(n, 0), uni_b(n, 0), bi_w(n * n, 0), bi_b(n * n, 0);
  auto tally = [&](const TokenSeq& y, std::vector<std::uint64_t>& uni, std::vector<std::uint64_t>& bi) {
    for (std::size_t i = 0; i < y.size(); ++i) {
      ++uni[y[i]];
      if (i > 0) ++bi[y[i - 1] * n + y[i]];
    }
  };
  bool identical = true;
  for (std::size_t s = 0; s < samples; ++s) {
    GenerationConfig config{lambda, m, sampler, fixed_salt ? *fixed_salt : random_salt(salt_rng), {}};
    const auto wm = generate(lm, {}, config, wm_rng).tokens;
    const auto base = generate_baseline(lm, {}, m, base_rng);
    identical = identical && wm == base;
    tally(wm, uni_w, bi_w);
    tally(base, uni_b, bi_b);
  }
  IndistinguishabilityResult r;
  r.unigram = chi_square_homogeneity(uni_w, uni_b);
  r.bigram = m >= 2 ? chi_square_homogeneity(bi_w, bi_b) : ChiSquareResult{};
  r.identical_corpora = identical;
  r.pass = r.unigram.p_value > 0.01 && r.bigram.p_value > 0.01;
  return r;
}

// ---------------------------------------------------------------------------
// Expected cost gap between resampled and true keys on fully watermarked
// text (lambda = 0): E[d(Y, xi_null) - d(Y, xi)] against m Var(eta) mean(alpha).

struct CovarianceResult {
  MeanSe gap;
  double var_eta = 0.0;
  double mean_alpha = 0.0;
  double target = 0.0;  // m * var_eta * mean_alpha
  double z = 0.0;
  bool pass = false;

  Json to_record(std::uint64_t seed, SamplerKind sampler, std::size_t m, std::size_t reps) const {
    return experiment_record("covariance_identity", seed, {{"sampler", to_string(sampler)}, {"m", m}, {"reps", reps}},
                             {{"gap_mean", gap.mean}, {"gap_se", gap.se}, {"var_eta", var_eta},
                              {"mean_alpha", mean_alpha}, {"z", z}},
                             {{"target", target}, {"tolerance_se", 3.0}}, pass);
  }
};

namespace detail {

// Watermarked text with lambda = 0 plus everything the cost-gap experiments
// need: per-token alpha and the eta values that enter the cost.
struct WatermarkedSample {
  TokenSeq tokens;
  KeySequence keys;
  std::vector<double> alpha;
  std::vector<double> eta_in_cost;
};

inline WatermarkedSample watermarked_sample(const MarkovLM& lm, SamplerKind sampler, std::size_t m, Rng& rng) {
  GenerationConfig config{0.0, m, sampler, random_salt(rng), {}};
  auto g = generate(lm, {}, config, rng);
  const auto kind = key_kind_for(sampler);
  WatermarkedSample s{g.tokens, derive_key_sequence(derive_prf_key(*g.seed_block()), kind, m, lm.size()), {}, {}};
  TokenSeq context;
  for (std::size_t i = 0; i < m; ++i) {
    const TokenId y = s.tokens[i];
    s.alpha.push_back(watermark_entropy(lm.distribution(context), y));
    s.eta_in_cost.push_back(kind == KeyKind::kIts ? eta(s.keys.its(i).rank[y], lm.size()) : eta(y, lm.size()));
    context.push_back(y);
  }
  return s;
}

inline double pooled_variance(std::span<const double> xs) {
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return ss / static_cast<double>(xs.size());
}

}  // namespace detail

// Var(eta) is the variance of the eta values that enter the cost: the
// uniformly distributed rank for ITS (exact, (N+1)/(12(N-1))) and the
// pooled empirical variance of eta(Y) for BS.
inline CovarianceResult exp_covariance_identity(const MarkovLM& lm, SamplerKind sampler, std::size_t m,
                                                std::size_t reps, std::uint64_t seed) {
  require(reps >= 1, "exp_covariance_identity: reps must be at least 1");
  require(m >= 1, "exp_covariance_identity: m must be at least 1");
  const auto kind = key_kind_for(sampler);
  Rng rng(seed);
  std::vector<double> gaps;
  std::vector<double> alphas;
  std::vector<double> etas;
  gaps.reserve(reps);
  for (std::size_t r = 0; r < reps; ++r) {
    auto s = detail::watermarked_sample(lm, sampler, m, rng);
    const KeySequence null_keys = resample_key_sequence(kind, m, lm.size(), rng);
    gaps.push_back(block_cost(s.tokens, 0, null_keys, 0, m) - block_cost(s.tokens, 0, s.keys, 0, m));
    alphas.insert(alphas.end(), s.alpha.begin(), s.alpha.end());
    etas.insert(etas.end(), s.eta_in_cost.begin(), s.eta_in_cost.end());
  }
  CovarianceResult res;
  res.gap = mean_se(gaps);
  res.mean_alpha = mean_se(alphas).mean;
  res.var_eta = kind == KeyKind::kIts ? uniform_eta_variance(lm.size()) : detail::pooled_variance(etas);
  res.target = static_cast<double>(m) * res.var_eta * res.mean_alpha;
  res.z = res.gap.se > 0.0 ? (res.gap.mean - res.target) / res.gap.se : (res.gap.mean == res.target ? 0.0 : INFINITY);
  res.pass = std::abs(res.gap.mean - res.target) <= 3.0 * res.gap.se ||
             (res.gap.se == 0.0 && std::abs(res.gap.mean - res.target) <= 1e-12);
  return res;
}

// ---------------------------------------------------------------------------
// Block false-match rate against 2 exp(-k Var(eta)^2 mean(alpha)^2 / 2).

struct HoeffdingRow {
  std::size_t k = 0;
  double empirical = 0.0;
  double bound = 0.0;
  double sigma = 0.0;
  double var_eta = 0.0;
  double mean_alpha = 0.0;
  bool pass = false;
};

struct HoeffdingResult {
  std::vector<HoeffdingRow> rows;
  bool pass = false;

  Json to_record(std::uint64_t seed, SamplerKind sampler, std::size_t reps) const {
    Json metrics = Json::array();
    Json bounds = Json::array();
    for (const auto& row : rows) {
      metrics.push_back({{"k", row.k}, {"empirical", row.empirical}, {"var_eta", row.var_eta},
                         {"mean_alpha", row.mean_alpha}, {"pass", row.pass}});
      bounds.push_back({{"k", row.k}, {"bound", row.bound}, {"sigma", row.sigma}});
    }
    return experiment_record("hoeffding_bound", seed, {{"sampler", to_string(sampler)}, {"reps", reps}},
                             {{"rows", metrics}}, {{"rows", bounds}}, pass);
  }
};

inline HoeffdingResult exp_hoeffding_bound(const MarkovLM& lm, SamplerKind sampler, std::span<const std::size_t> ks,
                                           std::size_t reps, std::uint64_t seed) {
  require(reps >= 1, "exp_hoeffding_bound: reps must be at least 1");
  const auto kind = key_kind_for(sampler);
  HoeffdingResult res;
  res.pass = true;
  for (std::size_t idx = 0; idx < ks.size(); ++idx) {
    const std::size_t k = ks[idx];
    require(k >= 1, "exp_hoeffding_bound: k must be at least 1");
    Rng rng(mix_seed(seed, idx));
    std::size_t false_matches = 0;
    std::vector<double> alphas;
    std::vector<double> etas;
    for (std::size_t r = 0; r < reps; ++r) {
      auto s = detail::watermarked_sample(lm, sampler, k, rng);
      const KeySequence null_keys = resample_key_sequence(kind, k, lm.size(), rng);
      if (block_cost(s.tokens, 0, null_keys, 0, k) <= block_cost(s.tokens, 0, s.keys, 0, k)) ++false_matches;
      alphas.insert(alphas.end(), s.alpha.begin(), s.alpha.end());
      etas.insert(etas.end(), s.eta_in_cost.begin(), s.eta_in_cost.end());
    }
    HoeffdingRow row;
    row.k = k;
    row.empirical = static_cast<double>(false_matches) / static_cast<double>(reps);
    row.mean_alpha = mean_se(alphas).mean;
    row.var_eta = kind == KeyKind::kIts ? uniform_eta_variance(lm.size()) : detail::pooled_variance(etas);
    const double v = row.var_eta * row.mean_alpha;
    row.bound = 2.0 * std::exp(-static_cast<double>(k) * v * v / 2.0);
    row.sigma = bound_sigma(row.bound, reps);
    row.pass = row.empirical <= row.bound + 3.0 * row.sigma;
    res.pass = res.pass && row.pass;
    res.rows.push_back(row);
  }
  return res;
}

// ---------------------------------------------------------------------------
// Monte Carlo estimate of E[exp(-c * sum_i alpha_i) * 1{every p(y_i) >= e^-c}],
// a lower bound on FNR + FPR for any detector. Texts come from the
// lambda-gated generator (fresh key per sample), whose law is the model's.

struct ErrorBoundResult {
  MeanSe estimate;
  double in_set_fraction = 0.0;

  Json to_record(std::uint64_t seed, double c, std::size_t m, std::size_t samples, double lambda) const {
    return experiment_record("error_lower_bound", seed,
                             {{"c", c}, {"m", m}, {"samples", samples}, {"lambda", detail::number_or_null(lambda)}},
                             {{"estimate", estimate.mean}, {"se", estimate.se}, {"in_set_fraction", in_set_fraction}},
                             Json::object(), true);
  }
};

inline ErrorBoundResult exp_error_lower_bound(const MarkovLM& lm, double c, std::size_t m, std::size_t samples,
                                              std::uint64_t seed, double lambda = 1.0,
                                              SamplerKind sampler = SamplerKind::kIts) {
  require(c > 0.0, "exp_error_lower_bound: c must be positive");
  require(samples >= 1, "exp_error_lower_bound: need at least one sample");
  ErrorBoundResult res;
  if (m == 0) {
    res.estimate = {1.0, 0.0};
    res.in_set_fraction = 1.0;
    return res;
  }
  const double floor = std::exp(-c);
  Rng rng(seed);
  std::vector<double> values;
  values.reserve(samples);
  std::size_t in_set = 0;
  for (std::size_t s = 0; s < samples; ++s) {
    GenerationConfig config{lambda, m, sampler, random_salt(rng), {}};
    const auto g = generate(lm, {}, config, rng);
    double alpha_sum = 0.0;
    bool inside = true;
    TokenSeq context;
    for (TokenId y : g.tokens) {
      const double p = lm.distribution(context)[y];
      alpha_sum += 1.0 - p;
      inside = inside && p >= floor;
      context.push_back(y);
    }
    in_set += inside ? 1 : 0;
    values.push_back(inside ? std::exp(-c * alpha_sum) : 0.0);
  }
  res.estimate = mean_se(values);
  res.in_set_fraction = static_cast<double>(in_set) / static_cast<double>(samples);
  return res;
}

// ---------------------------------------------------------------------------
// Detection scores for ROC-style evaluation. Positives are lambda-gated
// watermarked texts scored against their own seed-derived keys; negatives
// are baseline texts scored against keys from an unrelated random seed.
// Score = -phi0, so larger means "more watermarked".

struct ScoreSets {
  std::vector<double> pos;
  std::vector<double> neg;
};

struct ScoringConfig {
  SamplerKind sampler = SamplerKind::kIts;
  std::size_t m = 400;
  double lambda = 2.0;
  std::size_t k = 0;  // 0: min(len, 50)
  std::size_t trials = 200;
  std::vector<AttackSpec> attack;  // applied to both arms
};

inline ScoreSets collect_scores(const MarkovLM& lm, const ScoringConfig& cfg, std::uint64_t seed) {
  const auto kind = key_kind_for(cfg.sampler);
  const std::size_t n = lm.size();
  Rng gen_rng(mix_seed(seed, 1));
  Rng attack_rng(mix_seed(seed, 2));
  Rng key_rng(mix_seed(seed, 3));
  ScoreSets out;
  auto score = [&](const TokenSeq& y, const KeySequence& keys) {
    DetectionConfig dc;
    dc.k = cfg.k;
    const std::size_t k = dc.block_length(y.size());
    return -phi(y, keys, k).value;
  };
  for (std::size_t t = 0; t < cfg.trials; ++t) {
    GenerationConfig config{cfg.lambda, cfg.m, cfg.sampler, random_salt(key_rng), {}};
    const auto g = generate(lm, {}, config, gen_rng);
    const auto block = g.seed_block();
    const KeySequence keys = block ? derive_key_sequence(derive_prf_key(*block), kind, cfg.m, n)
                                   : resample_key_sequence(kind, cfg.m, n, key_rng);
    out.pos.push_back(score(attack(g.tokens, cfg.attack, n, attack_rng), keys));

    const TokenSeq base = generate_baseline(lm, {}, cfg.m, gen_rng);
    SeedBlock unrelated{TokenSeq{static_cast<TokenId>(key_rng.below(n))}, random_salt(key_rng)};
    const KeySequence null_keys = derive_key_sequence(derive_prf_key(unrelated), kind, cfg.m, n);
    out.neg.push_back(score(attack(base, cfg.attack, n, attack_rng), null_keys));
  }
  return out;
}

struct DetectabilityRow {
  std::size_t m = 0;
  double tpr_at_1pct = 0.0;
  double auc = 0.0;
};

struct DetectabilityResult {
  std::vector<DetectabilityRow> rows;
  bool monotone = false;

  Json to_record(std::uint64_t seed, SamplerKind sampler, std::size_t trials) const {
    Json rs = Json::array();
    for (const auto& r : rows) rs.push_back({{"m", r.m}, {"tpr_at_1pct_fpr", r.tpr_at_1pct}, {"auc", r.auc}});
    return experiment_record("detectability", seed, {{"sampler", to_string(sampler)}, {"trials", trials}},
                             {{"rows", rs}, {"monotone", monotone}}, Json::object(), monotone);
  }
};

inline DetectabilityResult exp_detectability(const MarkovLM& lm, ScoringConfig cfg, std::span<const std::size_t> ms,
                                             std::uint64_t seed) {
  DetectabilityResult res;
  res.monotone = true;
  for (std::size_t idx = 0; idx < ms.size(); ++idx) {
    cfg.m = ms[idx];
    const auto scores = collect_scores(lm, cfg, mix_seed(seed, idx));
    const auto roc = roc_auc(scores.pos, scores.neg);
    if (!res.rows.empty() && roc.tpr_at_1pct_fpr < res.rows.back().tpr_at_1pct) res.monotone = false;
    res.rows.push_back({cfg.m, roc.tpr_at_1pct_fpr, roc.auc});
  }
  return res;
}

struct RobustnessResult {
  double clean_auc = 0.0;
  double attacked_auc = 0.0;

  double degradation() const { return clean_auc - attacked_auc; }

  Json to_record(std::uint64_t seed, SamplerKind sampler, std::size_t m, std::size_t trials,
                 const std::vector<AttackSpec>& plan) const {
    Json steps = Json::array();
    for (const auto& s : plan) steps.push_back(to_string(s));
    return experiment_record("robustness", seed,
                             {{"sampler", to_string(sampler)}, {"m", m}, {"trials", trials}, {"attack", steps}},
                             {{"clean_auc", clean_auc}, {"attacked_auc", attacked_auc}, {"degradation", degradation()}},
                             Json::object(), true);
  }
};

inline RobustnessResult exp_robustness(const MarkovLM& lm, ScoringConfig cfg, std::uint64_t seed) {
  const auto plan = cfg.attack;
  RobustnessResult res;
  cfg.attack.clear();
  auto clean = collect_scores(lm, cfg, seed);
  res.clean_auc = roc_auc(clean.pos, clean.neg).auc;
  cfg.attack = plan;
  auto attacked = collect_scores(lm, cfg, seed);
  res.attacked_auc = roc_auc(attacked.pos, attacked.neg).auc;
  return res;
}

// ---------------------------------------------------------------------------
// p-value calibration on text independent of the key.

struct CalibrationResult {
  std::vector<double> alphas;
  std::vector<double> rejection_rates;
  std::size_t trials = 0;
  bool pass = false;

  Json to_record(std::uint64_t seed, KeyKind cost, std::size_t m, std::size_t T, double tolerance) const {
    Json rows = Json::array();
    for (std::size_t i = 0; i < alphas.size(); ++i) rows.push_back({{"alpha", alphas[i]}, {"rate", rejection_rates[i]}});
    return experiment_record("pvalue_calibration", seed,
                             {{"cost", to_string(cost)}, {"m", m}, {"T", T}, {"trials", trials}},
                             {{"rows", rows}}, {{"tolerance", tolerance}}, pass);
  }
};

inline CalibrationResult exp_pvalue_calibration(const MarkovLM& lm, KeyKind cost, std::size_t m, std::size_t trials,
                                                std::size_t T, std::span<const double> alphas, double tolerance,
                                                std::uint64_t seed) {
  require(trials >= 1, "exp_pvalue_calibration: trials must be at least 1");
  Rng text_rng(mix_seed(seed, 1));
  Rng key_rng(mix_seed(seed, 2));
  Rng detect_rng(mix_seed(seed, 3));
  DetectionConfig dc;
  dc.T = T;
  dc.cost = cost;
  std::vector<double> p_values;
  p_values.reserve(trials);
  for (std::size_t t = 0; t < trials; ++t) {
    const TokenSeq y = generate_baseline(lm, {}, m, text_rng);
    SeedBlock seed_block{TokenSeq{static_cast<TokenId>(key_rng.below(lm.size()))}, random_salt(key_rng)};
    const KeySequence keys = derive_key_sequence(derive_prf_key(seed_block), cost, m, lm.size());
    p_values.push_back(detect_pvalue(y, keys, dc, detect_rng).p_value);
  }
  CalibrationResult res;
  res.trials = trials;
  res.pass = true;
  for (double a : alphas) {
    std::size_t hits = 0;
    for (double p : p_values) hits += p <= a + 1e-12 ? 1 : 0;
    const double rate = static_cast<double>(hits) / static_cast<double>(trials);
    res.alphas.push_back(a);
    res.rejection_rates.push_back(rate);
    res.pass = res.pass && rate <= a + tolerance;
  }
  return res;
}

}  // namespace entmark
