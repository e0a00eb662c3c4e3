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

// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Seeds and tolerances are fixed here so runs repeat
// exactly. Pass a criterion number (1-10) to run only that one.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "entmark/entmark.hpp"
#include "golden_pipeline.hpp"
#include "oracles.hpp"

namespace {

using namespace entmark;

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  const char* name;
  double budget_seconds;
  std::function<Outcome()> run;
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), format, args...);
  return buf;
}

// Random distributions with a zero-mass entry mixed in now and then.
std::vector<TokenDistribution> test_distributions(std::size_t n, Rng& rng) {
  std::vector<TokenDistribution> out{TokenDistribution::uniform(n)};
  for (int i = 0; i < 3; ++i) {
    std::vector<double> w(n);
    for (auto& x : w) x = rng.uniform();
    if (i == 2) w[rng.below(n)] = 0.0;
    out.push_back(TokenDistribution::from_weights(w));
  }
  std::vector<double> skewed(n, 0.001);
  skewed[n - 1] = 1.0;
  out.push_back(TokenDistribution::from_weights(skewed));
  return out;
}

Outcome distribution_preservation() {
  Rng rng(101);
  double worst_its = 0.0;
  double worst_bs = 0.0;
  std::size_t mismatches = 0;
  for (std::size_t n = 2; n <= 5; ++n) {
    for (const auto& d : test_distributions(n, rng)) {
      worst_its = std::max(worst_its, oracle::total_variation(oracle::its_law(d, 10000), d.probs()));
      std::size_t bad = 0;
      worst_bs = std::max(worst_bs, oracle::total_variation(oracle::bs_law(d, &bad), d.probs()));
      mismatches += bad;
    }
  }
  return {worst_its < 1e-3 && worst_bs < 1e-12 && mismatches == 0,
          fmt("max TV its=%.3g (<1e-3) bs=%.3g (<1e-12), bs probe mismatches=%zu", worst_its, worst_bs, mismatches)};
}

Outcome indistinguishability() {
  const auto lm = small_random_lm(4);
  const auto its = exp_indistinguishability(lm, 1.0, 6, 10000, 201, SamplerKind::kIts);
  const auto bs = exp_indistinguishability(lm, 1.0, 6, 10000, 202, SamplerKind::kBs);
  // Argmax decoding: zero watermark entropy, so outputs never depend on a key.
  GenerationConfig argmax{1.0, 40, SamplerKind::kIts, salt_from_hex("01"), {0.5, 1.0}};
  const auto det = near_deterministic_lm(8, 0.9);
  Rng a(1);
  Rng b(2);
  const std::string first = generation_to_json(generate(det, {}, argmax, a))["tokens"].dump();
  const std::string second = generation_to_json(generate(det, {}, argmax, b))["tokens"].dump();
  const bool identical = first == second;
  return {its.pass && bs.pass && identical,
          fmt("its uni p=%.3f bi p=%.3f; bs uni p=%.3f bi p=%.3f (>0.01); argmax outputs identical=%s",
              its.unigram.p_value, its.bigram.p_value, bs.unigram.p_value, bs.bigram.p_value,
              identical ? "yes" : "no")};
}

Outcome seed_collisions() {
  const auto r = simulate_collisions(high_entropy_lm(16), 1000, 10.0, 40, 301);
  return {r.pass, fmt("collisions=%zu/%zu fraction=%.4f bound=%.4f+3*%.4f", r.collisions, r.generations, r.fraction,
                      r.bound, r.sigma)};
}

Outcome covariance_identity() {
  Outcome out{true, ""};
  struct Case {
    const char* label;
    MarkovLM lm;
    SamplerKind sampler;
  };
  const std::vector<Case> cases{{"its N=2", uniform_lm(2), SamplerKind::kIts},
                                {"its N=16", high_entropy_lm(16), SamplerKind::kIts},
                                {"bs N=2", uniform_lm(2), SamplerKind::kBs},
                                {"bs N=16", high_entropy_lm(16), SamplerKind::kBs}};
  std::uint64_t seed = 401;
  for (const auto& c : cases) {
    const auto r = exp_covariance_identity(c.lm, c.sampler, 100, 10000, seed++);
    out.pass = out.pass && r.pass;
    out.detail += fmt("%s%s gap=%.3f+-%.3f target=%.3f z=%.1f %s", out.detail.empty() ? "" : "; ", c.label,
                      r.gap.mean, r.gap.se, r.target, r.z, r.pass ? "ok" : "MISS");
  }
  return out;
}

Outcome hoeffding() {
  const std::vector<std::size_t> ks{20, 50, 100};
  Outcome out{true, ""};
  std::uint64_t seed = 501;
  for (auto sampler : {SamplerKind::kIts, SamplerKind::kBs}) {
    const auto r = exp_hoeffding_bound(high_entropy_lm(16), sampler, ks, 2000, seed++);
    out.pass = out.pass && r.pass;
    for (const auto& row : r.rows) {
      out.detail += fmt("%s%s k=%zu emp=%.4f bound=%.3f", out.detail.empty() ? "" : "; ",
                        std::string(to_string(sampler)).c_str(), row.k, row.empirical, row.bound);
    }
  }
  return out;
}

Outcome pvalue_validity() {
  const std::vector<double> alphas{0.01, 0.05};
  Outcome out{true, ""};
  std::uint64_t seed = 601;
  for (auto cost : {KeyKind::kIts, KeyKind::kBs}) {
    const auto r = exp_pvalue_calibration(high_entropy_lm(16), cost, 100, 1000, 99, alphas, 0.02, seed++);
    out.pass = out.pass && r.pass;
    out.detail += fmt("%s%s P(p<=0.01)=%.3f P(p<=0.05)=%.3f", out.detail.empty() ? "" : "; ",
                      std::string(to_string(cost)).c_str(), r.rejection_rates[0], r.rejection_rates[1]);
  }
  return out;
}

Outcome detectability() {
  const std::vector<std::size_t> ms{50, 100, 200, 400};
  Outcome out{true, ""};
  std::uint64_t seed = 701;
  for (auto sampler : {SamplerKind::kIts, SamplerKind::kBs}) {
    ScoringConfig cfg;
    cfg.sampler = sampler;
    cfg.lambda = 2.0;
    cfg.trials = 300;
    const auto r = exp_detectability(high_entropy_lm(16), cfg, ms, seed++);
    const bool ok = r.monotone && r.rows.back().tpr_at_1pct >= 0.9;
    out.pass = out.pass && ok;
    out.detail += fmt("%s%s TPR@1%%FPR", out.detail.empty() ? "" : "; ", std::string(to_string(sampler)).c_str());
    for (const auto& row : r.rows) out.detail += fmt(" m=%zu:%.3f", row.m, row.tpr_at_1pct);
  }
  // The high-entropy model saturates early; a lower-entropy model shows the
  // growth with m. Reported only, not gated.
  out.detail += "; info, top-prob 0.6 model:";
  for (auto sampler : {SamplerKind::kIts, SamplerKind::kBs}) {
    ScoringConfig cfg;
    cfg.sampler = sampler;
    cfg.lambda = 2.0;
    cfg.trials = 200;
    const auto r = exp_detectability(near_deterministic_lm(16, 0.6), cfg, ms, seed++);
    out.detail += fmt(" %s", std::string(to_string(sampler)).c_str());
    for (const auto& row : r.rows) out.detail += fmt(" m=%zu:%.3f", row.m, row.tpr_at_1pct);
  }
  return out;
}

Outcome robustness() {
  Outcome out{true, ""};
  std::uint64_t seed = 801;
  for (auto sampler : {SamplerKind::kIts, SamplerKind::kBs}) {
    ScoringConfig cfg;
    cfg.sampler = sampler;
    cfg.m = 400;
    cfg.lambda = 2.0;
    cfg.trials = 300;
    cfg.attack = parse_attack("substitute:0.1");
    const auto r = exp_robustness(high_entropy_lm(16), cfg, seed++);
    const bool ok = r.clean_auc >= 0.95 && r.degradation() < 0.15;
    out.pass = out.pass && ok;
    out.detail += fmt("%s%s clean AUC=%.4f attacked=%.4f drop=%.4f", out.detail.empty() ? "" : "; ",
                      std::string(to_string(sampler)).c_str(), r.clean_auc, r.attacked_auc, r.degradation());
  }
  return out;
}

Outcome error_bound() {
  const auto near = exp_error_lower_bound(near_deterministic_lm(8, 0.999), 0.1, 50, 10000, 901, 1.0);
  const auto flat = exp_error_lower_bound(high_entropy_lm(16), 0.1, 50, 10000, 902, 1.0);
  return {near.estimate.mean > 0.9 && flat.estimate.mean < 0.05,
          fmt("near-deterministic=%.4f (>0.9) high-entropy=%.4f (<0.05)", near.estimate.mean, flat.estimate.mean)};
}

Outcome golden_files() {
  const auto first = golden::run_pipeline();
  const auto second = golden::run_pipeline();
  std::size_t matched = 0;
  for (const auto& [name, contents] : first) {
    std::string stored;
    try {
      stored = read_file(std::string(ENTMARK_GOLDEN_DIR) + "/" + name);
    } catch (const IoError&) {
    }
    matched += stored == contents ? 1 : 0;
  }
  return {first == second && matched == first.size(),
          fmt("runs identical=%s, %zu/%zu files match checked-in bytes", first == second ? "yes" : "no", matched,
              first.size())};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {1, "distribution preservation", 60, distribution_preservation},
      {2, "indistinguishability", 120, indistinguishability},
      {3, "seed-collision bound", 120, seed_collisions},
      {4, "covariance-gap identity", 60, covariance_identity},
      {5, "Hoeffding block bound", 120, hoeffding},
      {6, "p-value validity", 300, pvalue_validity},
      {7, "detectability shape", 600, detectability},
      {8, "attack robustness shape", 600, robustness},
      {9, "error lower bound sanity", 60, error_bound},
      {10, "golden-file determinism", 60, golden_files},
  };
  const int only = argc > 1 ? std::atoi(argv[1]) : 0;
  int failures = 0;
  for (const auto& c : criteria) {
    if (only != 0 && c.id != only) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = seconds <= c.budget_seconds;
    const bool pass = o.pass && in_time;
    failures += pass ? 0 : 1;
    std::printf("AC%-2d %s  %s | %s | %.1fs (budget %.0fs)\n", c.id, pass ? "PASS" : "FAIL", c.name, o.detail.c_str(),
                seconds, c.budget_seconds);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
