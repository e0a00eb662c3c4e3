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

// Command-line front end: model training, watermarked generation, attacks,
// detection, ROC evaluation and the experiment runners. Every subcommand
// exits 0 on success, 1 on invalid arguments or inputs and 2 on I/O errors.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "entmark/entmark.hpp"

namespace {

using entmark::Json;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitIo = 2;

double parse_lambda(const std::string& text) {
  if (text == "inf" || text == "never") return std::numeric_limits<double>::infinity();
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size() || std::isnan(v)) throw entmark::ValidationError("bad lambda: " + text);
    return v;
  } catch (const std::logic_error&) {
    throw entmark::ValidationError("bad lambda: " + text);
  }
}

void emit(const std::string& out_path, const std::vector<Json>& records) {
  const std::string text = entmark::to_jsonl(records);
  if (out_path.empty() || out_path == "-") {
    std::cout << text;
    std::cout.flush();
  } else {
    entmark::write_file(out_path, text);
  }
}

// Model either from a file or from one of the built-in toy presets.
struct ModelSource {
  std::string path;
  std::string preset = "high-entropy";
  std::size_t vocab = 16;
  double top_prob = 0.999;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--model", path, "Trained model JSON (overrides --lm)");
    cmd->add_option("--lm", preset, "Preset model: high-entropy | uniform | near-deterministic | small-random")
        ->check(CLI::IsMember({"high-entropy", "uniform", "near-deterministic", "small-random"}));
    cmd->add_option("--vocab", vocab, "Vocabulary size of the preset model")->check(CLI::Range(2, 1 << 16));
    cmd->add_option("--top-prob", top_prob, "Top transition probability of the near-deterministic preset");
  }

  // Presets are word-tokenized over tokens "t0", "t1", ...
  entmark::LoadedModel load_with_mode() const {
    if (!path.empty()) return entmark::model_from_json(parse_json_file(path));
    const auto word = entmark::TokenizeMode::kWord;
    if (preset == "uniform") return {entmark::uniform_lm(vocab), word};
    if (preset == "near-deterministic") return {entmark::near_deterministic_lm(vocab, top_prob), word};
    if (preset == "small-random") return {entmark::small_random_lm(vocab), word};
    return {entmark::high_entropy_lm(vocab), word};
  }

  entmark::MarkovLM load() const { return load_with_mode().lm; }

  static Json parse_json_file(const std::string& file) {
    const std::string text = entmark::read_file(file);
    try {
      return Json::parse(text);
    } catch (const nlohmann::json::parse_error&) {
      throw entmark::IoError(file + ": malformed JSON");
    }
  }
};

// ---------------------------------------------------------------------------

struct TrainArgs {
  std::string corpus;
  std::string out = "model.json";
  std::string tokenize = "word";
  double smoothing = 1.0;
};

int run_train(const TrainArgs& a) {
  const std::string text = entmark::read_file(a.corpus);
  const auto mode = entmark::parse_tokenize_mode(a.tokenize);
  const auto corpus = entmark::ingest_corpus(text, mode);
  const auto lm = entmark::train_markov(corpus.sequences, corpus.vocab, a.smoothing);
  entmark::write_file(a.out, entmark::model_to_json(lm, mode).dump(1) + "\n");
  std::cerr << "trained " << lm.size() << "-token model on " << corpus.sequences.size() << " sequences\n";
  return kExitOk;
}

struct GenerateArgs {
  ModelSource model;
  std::string prompt;
  std::string lambda = "4";
  std::size_t m = 100;
  std::string sampler = "its";
  std::string salt = "00";
  std::uint64_t seed = 1;
  std::size_t count = 1;
  double top_p = 1.0;
  double temperature = 1.0;
  std::string out;
};

int run_generate(const GenerateArgs& a) {
  const auto model = a.model.load_with_mode();
  const auto& lm = model.lm;
  const auto prompt = entmark::encode_text(lm.vocab(), a.prompt, model.mode);
  entmark::GenerationConfig config;
  config.lambda = parse_lambda(a.lambda);
  config.m = a.m;
  config.sampler = entmark::parse_sampler_kind(a.sampler);
  config.salt = entmark::salt_from_hex(a.salt);
  config.decoding = {a.top_p, a.temperature};
  const auto records = entmark::generate_records(lm, prompt, config, a.seed, a.count);
  emit(a.out, records);
  return kExitOk;
}

struct AttackArgs {
  ModelSource model;
  std::string in;
  std::vector<std::string> attacks;
  std::uint64_t seed = 1;
  std::string out;
};

int run_attack(const AttackArgs& a) {
  const std::size_t n = a.model.load().size();
  std::vector<entmark::AttackSpec> plan;
  std::vector<std::string> names;
  for (const auto& spec : a.attacks) {
    auto steps = entmark::parse_attack(spec);
    plan.insert(plan.end(), steps.begin(), steps.end());
    names.push_back(spec);
  }
  const auto records = entmark::attack_records(entmark::read_jsonl(a.in), plan, names, n, a.seed);
  emit(a.out, records);
  return kExitOk;
}

void require_mode(const std::string& mode) {
  if (mode != "key" && mode != "scan") throw entmark::ValidationError("--mode must be key or scan");
}

struct DetectArgs {
  ModelSource model;
  std::string in;
  std::string mode = "key";
  std::string cost;
  std::size_t k = 0;
  std::size_t T = 99;
  std::size_t s_max = 16;
  bool gate = false;
  std::uint64_t seed = 2;
  std::string out;
};

int run_detect(const DetectArgs& a) {
  const auto lm = a.model.load();
  require_mode(a.mode);
  entmark::DetectOptions options;
  options.mode = a.mode == "key" ? entmark::DetectionMode::kKey : entmark::DetectionMode::kScan;
  if (!a.cost.empty()) options.cost = entmark::parse_key_kind(a.cost);
  options.k = a.k;
  options.T = a.T;
  options.s_max = a.s_max;
  options.gate = a.gate;
  options.seed = a.seed;
  emit(a.out, entmark::detect_records(entmark::read_jsonl(a.in), lm, options));
  return kExitOk;
}

// Scores: detection records (-p_value, or -phi0 with --score phi) or plain
// numbers one per line, where higher already means "more watermarked".
std::vector<double> read_scores(const std::string& path, const std::string& score) {
  const std::string text = entmark::read_file(path);
  std::vector<double> out;
  std::size_t line_no = 0;
  for (auto line : entmark::split_lines(text)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string_view::npos) continue;
    if (line[first] == '{') {
      Json j;
      try {
        j = Json::parse(line);
      } catch (const nlohmann::json::parse_error&) {
        throw entmark::IoError(path + ":" + std::to_string(line_no) + ": malformed JSON record");
      }
      const char* field = score == "phi" ? "phi0" : "p_value";
      if (!j.contains(field) || !j[field].is_number()) {
        if (score == "phi" && j.contains(field) && j[field].is_null()) {
          out.push_back(-std::numeric_limits<double>::infinity());
          continue;
        }
        throw entmark::IoError(path + ":" + std::to_string(line_no) + ": missing " + field);
      }
      out.push_back(-j[field].get<double>());
    } else {
      try {
        std::size_t used = 0;
        const std::string s(line.substr(first));
        const double v = std::stod(s, &used);
        out.push_back(v);
      } catch (const std::logic_error&) {
        throw entmark::IoError(path + ":" + std::to_string(line_no) + ": not a number");
      }
    }
  }
  return out;
}

struct RocArgs {
  std::string pos;
  std::string neg;
  std::string score = "p";
  std::string curve;
  std::string out;
};

int run_eval_roc(const RocArgs& a) {
  const auto pos = read_scores(a.pos, a.score);
  const auto neg = read_scores(a.neg, a.score);
  const auto roc = entmark::roc_auc(pos, neg);
  if (!a.curve.empty()) {
    std::string csv = "threshold,fpr,tpr\n";
    for (std::size_t i = 0; i < roc.thresholds.size(); ++i) {
      Json row = {roc.thresholds[i], roc.fpr[i], roc.tpr[i]};
      csv += (std::isfinite(roc.thresholds[i]) ? row[0].dump() : std::string("inf")) + "," + row[1].dump() + "," +
             row[2].dump() + "\n";
    }
    entmark::write_file(a.curve, csv);
  }
  Json j;
  j["auc"] = roc.auc;
  j["tpr_at_1pct_fpr"] = roc.tpr_at_1pct_fpr;
  j["n_pos"] = pos.size();
  j["n_neg"] = neg.size();
  j["score"] = a.score;
  emit(a.out, {j});
  return kExitOk;
}

}  // namespace

// Experiment subcommands share a model source, a seed and an output path.
struct ExpArgs {
  ModelSource model;
  std::uint64_t seed = 20260101;
  std::string out;
  std::string sampler = "its";
  std::size_t m = 100;
  std::size_t reps = 1000;
  std::string lambda = "1";
  // collision
  double k_slots = 365;
  double p = 0.5;
  std::size_t t = 0;
  // hoeffding / detectability
  std::vector<std::size_t> ks{20, 50, 100};
  std::vector<std::size_t> ms{50, 100, 200, 400};
  std::size_t block = 0;
  double c = 0.1;
  std::size_t T = 99;
  std::vector<double> alphas{0.01, 0.05, 0.1};
  double tolerance = 0.02;
  std::vector<std::string> attacks{"substitute:0.1"};
};

int main(int argc, char** argv) {
  CLI::App app{"entmark: entropy-threshold text watermarking toolkit"};
  app.set_config("--config", "", "Read flags from an INI/TOML config file (command-line flags win)");
  app.require_subcommand(1);

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train-lm", "Train a bigram model from a UTF-8 corpus");
  train_cmd->add_option("--corpus", train.corpus, "Corpus text file")->required();
  train_cmd->add_option("--out", train.out, "Model JSON output");
  train_cmd->add_option("--tokenize", train.tokenize, "word | char")->check(CLI::IsMember({"word", "char"}));
  train_cmd->add_option("--smoothing", train.smoothing, "Additive smoothing (> 0)");

  GenerateArgs gen;
  auto* gen_cmd = app.add_subcommand("generate", "Generate watermarked text (JSONL records)");
  gen.model.add_to(gen_cmd);
  gen_cmd->add_option("--prompt", gen.prompt, "Prompt text (tokenized like the corpus)");
  gen_cmd->add_option("--lambda", gen.lambda, "Entropy threshold; 'inf' disables the watermark");
  gen_cmd->add_option("-m,--length", gen.m, "Generation budget in tokens")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--sampler", gen.sampler, "its | bs | multinomial")
      ->check(CLI::IsMember({"its", "bs", "multinomial"}));
  gen_cmd->add_option("--salt", gen.salt, "Secret salt as hex");
  gen_cmd->add_option("--seed", gen.seed, "Generation RNG seed");
  gen_cmd->add_option("--count", gen.count, "Number of generations")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--top-p", gen.top_p, "Top-p truncation in (0, 1]");
  gen_cmd->add_option("--temperature", gen.temperature, "Sampling temperature (> 0)");
  gen_cmd->add_option("--out", gen.out, "Output JSONL (default stdout)");

  AttackArgs atk;
  auto* atk_cmd = app.add_subcommand("attack", "Corrupt generated token sequences");
  atk.model.add_to(atk_cmd);
  atk_cmd->add_option("--in", atk.in, "Input generations JSONL")->required();
  atk_cmd->add_option("--attack", atk.attacks, "substitute:R | insert:R | delete:R | crop:B:E | paraphrase-proxy")
      ->required();
  atk_cmd->add_option("--seed", atk.seed, "Attack RNG seed");
  atk_cmd->add_option("--out", atk.out, "Output JSONL (default stdout)");

  DetectArgs det;
  auto* det_cmd = app.add_subcommand("detect", "Permutation-test detection over generation records");
  det.model.add_to(det_cmd);
  det_cmd->add_option("--in", det.in, "Input generations JSONL")->required();
  det_cmd->add_option("--mode", det.mode, "key (seed tokens from the record) | scan")
      ->check(CLI::IsMember({"key", "scan"}));
  det_cmd->add_option("--cost", det.cost, "its | bs (default: from the record's sampler)");
  det_cmd->add_option("-k,--block", det.k, "Block length (default min(len, 50))");
  det_cmd->add_option("-T,--resamples", det.T, "Resampled null keys")->check(CLI::PositiveNumber);
  det_cmd->add_option("--s-max", det.s_max, "Largest boundary tried in scan mode");
  det_cmd->add_flag("--gate", det.gate, "Scan mode: only the boundary implied by the model and lambda");
  det_cmd->add_option("--seed", det.seed, "Detection resample RNG seed");
  det_cmd->add_option("--out", det.out, "Output JSONL (default stdout)");

  RocArgs roc;
  auto* roc_cmd = app.add_subcommand("eval-roc", "ROC summary from positive and negative score files");
  roc_cmd->add_option("--pos", roc.pos, "Positive scores (detections JSONL or numbers)")->required();
  roc_cmd->add_option("--neg", roc.neg, "Negative scores (detections JSONL or numbers)")->required();
  roc_cmd->add_option("--score", roc.score, "p (score = -p_value) | phi (score = -phi0)")
      ->check(CLI::IsMember({"p", "phi"}));
  roc_cmd->add_option("--curve", roc.curve, "Write the ROC curve as CSV");
  roc_cmd->add_option("--out", roc.out, "Output JSON (default stdout)");

  ExpArgs ex;
  auto add_common = [&](CLI::App* cmd) {
    ex.model.add_to(cmd);
    cmd->add_option("--seed", ex.seed, "Experiment seed");
    cmd->add_option("--out", ex.out, "Output JSONL (default stdout)");
  };
  auto* exp_collision = app.add_subcommand("exp-collision", "Birthday bound; with --t, seed-collision simulation");
  add_common(exp_collision);
  exp_collision->add_option("--slots", ex.k_slots, "Independent key slots k");
  exp_collision->add_option("--p", ex.p, "Collision probability p");
  exp_collision->add_option("--t", ex.t, "Generations to simulate (0: bound only)");
  exp_collision->add_option("--lambda", ex.lambda, "Entropy threshold for the simulation");
  exp_collision->add_option("-m,--length", ex.m, "Generation budget");

  auto* exp_indist = app.add_subcommand("exp-indist", "n-gram chi-square: watermarked vs baseline corpora");
  add_common(exp_indist);
  exp_indist->add_option("--lambda", ex.lambda, "Entropy threshold");
  exp_indist->add_option("-m,--length", ex.m, "Tokens per sample");
  exp_indist->add_option("--samples", ex.reps, "Samples per corpus");
  exp_indist->add_option("--sampler", ex.sampler, "its | bs")->check(CLI::IsMember({"its", "bs"}));

  auto* exp_cov = app.add_subcommand("exp-covariance", "Cost-gap identity on fully watermarked text");
  add_common(exp_cov);
  exp_cov->add_option("--sampler", ex.sampler, "its | bs")->check(CLI::IsMember({"its", "bs"}));
  exp_cov->add_option("-m,--length", ex.m, "Tokens per replication");
  exp_cov->add_option("--reps", ex.reps, "Replications");

  auto* exp_hoeff = app.add_subcommand("exp-hoeffding", "Block false-match rate vs the Hoeffding bound");
  add_common(exp_hoeff);
  exp_hoeff->add_option("--sampler", ex.sampler, "its | bs")->check(CLI::IsMember({"its", "bs"}));
  exp_hoeff->add_option("--k", ex.ks, "Block lengths");
  exp_hoeff->add_option("--reps", ex.reps, "Replications per k");

  auto* exp_err = app.add_subcommand("exp-error-bound", "Lower bound on FNR + FPR");
  add_common(exp_err);
  exp_err->add_option("--c", ex.c, "Probability floor exponent c");
  exp_err->add_option("-m,--length", ex.m, "Text length");
  exp_err->add_option("--samples", ex.reps, "Monte Carlo samples");
  exp_err->add_option("--lambda", ex.lambda, "Entropy threshold of the generator");

  auto* exp_det = app.add_subcommand("exp-detectability", "TPR at 1% FPR across generation lengths");
  add_common(exp_det);
  exp_det->add_option("--sampler", ex.sampler, "its | bs")->check(CLI::IsMember({"its", "bs"}));
  exp_det->add_option("--lengths", ex.ms, "Generation lengths");
  exp_det->add_option("--trials", ex.reps, "Texts per arm and length");
  exp_det->add_option("--lambda", ex.lambda, "Entropy threshold");
  exp_det->add_option("-k,--block", ex.block, "Block length (default min(len, 50))");

  auto* exp_rob = app.add_subcommand("exp-robustness", "Clean vs attacked AUC");
  add_common(exp_rob);
  exp_rob->add_option("--sampler", ex.sampler, "its | bs")->check(CLI::IsMember({"its", "bs"}));
  exp_rob->add_option("-m,--length", ex.m, "Generation length");
  exp_rob->add_option("--trials", ex.reps, "Texts per arm");
  exp_rob->add_option("--lambda", ex.lambda, "Entropy threshold");
  exp_rob->add_option("--attack", ex.attacks, "Attack steps");

  auto* exp_pv = app.add_subcommand("exp-pvalue", "p-value calibration on key-independent text");
  add_common(exp_pv);
  exp_pv->add_option("--cost", ex.sampler, "its | bs")->check(CLI::IsMember({"its", "bs"}));
  exp_pv->add_option("-m,--length", ex.m, "Text length");
  exp_pv->add_option("--trials", ex.reps, "Independent texts");
  exp_pv->add_option("-T,--resamples", ex.T, "Resampled null keys per text");
  exp_pv->add_option("--alpha", ex.alphas, "Levels to check");
  exp_pv->add_option("--tolerance", ex.tolerance, "Allowed excess over each level");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*train_cmd) return run_train(train);
    if (*gen_cmd) return run_generate(gen);
    if (*atk_cmd) return run_attack(atk);
    if (*det_cmd) return run_detect(det);
    if (*roc_cmd) return run_eval_roc(roc);

    const auto lm = ex.model.load();
    const double lambda = parse_lambda(ex.lambda);
    const auto sampler = entmark::parse_sampler_kind(ex.sampler);
    Json record;
    if (*exp_collision) {
      record["experiment"] = "collision_bound";
      record["k"] = ex.k_slots;
      record["p"] = ex.p;
      record["bound_l"] = entmark::collision_bound(ex.k_slots, ex.p);
      std::vector<Json> out{record};
      if (ex.t > 0) out.push_back(entmark::simulate_collisions(lm, ex.t, lambda, ex.m, ex.seed).to_record(ex.seed, lambda, ex.m));
      emit(ex.out, out);
      return kExitOk;
    }
    if (*exp_indist) {
      record = entmark::exp_indistinguishability(lm, lambda, ex.m, ex.reps, ex.seed, sampler)
                   .to_record(ex.seed, lambda, ex.m, ex.reps, sampler);
    } else if (*exp_cov) {
      record = entmark::exp_covariance_identity(lm, sampler, ex.m, ex.reps, ex.seed).to_record(ex.seed, sampler, ex.m, ex.reps);
    } else if (*exp_hoeff) {
      record = entmark::exp_hoeffding_bound(lm, sampler, ex.ks, ex.reps, ex.seed).to_record(ex.seed, sampler, ex.reps);
    } else if (*exp_err) {
      record = entmark::exp_error_lower_bound(lm, ex.c, ex.m, ex.reps, ex.seed, lambda)
                   .to_record(ex.seed, ex.c, ex.m, ex.reps, lambda);
    } else if (*exp_det) {
      entmark::ScoringConfig cfg;
      cfg.sampler = sampler;
      cfg.lambda = lambda;
      cfg.k = ex.block;
      cfg.trials = ex.reps;
      record = entmark::exp_detectability(lm, cfg, ex.ms, ex.seed).to_record(ex.seed, sampler, ex.reps);
    } else if (*exp_rob) {
      entmark::ScoringConfig cfg;
      cfg.sampler = sampler;
      cfg.lambda = lambda;
      cfg.m = ex.m;
      cfg.trials = ex.reps;
      for (const auto& s : ex.attacks) {
        auto steps = entmark::parse_attack(s);
        cfg.attack.insert(cfg.attack.end(), steps.begin(), steps.end());
      }
      record = entmark::exp_robustness(lm, cfg, ex.seed).to_record(ex.seed, sampler, ex.m, ex.reps, cfg.attack);
    } else if (*exp_pv) {
      const auto cost = entmark::key_kind_for(sampler);
      record = entmark::exp_pvalue_calibration(lm, cost, ex.m, ex.reps, ex.T, ex.alphas, ex.tolerance, ex.seed)
                   .to_record(ex.seed, cost, ex.m, ex.T, ex.tolerance);
    }
    emit(ex.out, {record});
    return kExitOk;
  } catch (const entmark::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const entmark::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
}
