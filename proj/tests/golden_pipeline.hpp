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

// The fixed-seed generate -> attack -> detect pipeline behind the golden
// files in tests/golden. The CLI invocation that produces the same bytes:
//
//   entmark generate --lm high-entropy --lambda 2 -m 80 --sampler S
//       --salt 5eed --seed 42 --count 4 --out S_generations.jsonl
//   entmark attack --in S_generations.jsonl --attack substitute:0.1
//       --attack crop:5:75 --seed 7 --out S_attacked.jsonl
//   entmark detect --in S_attacked.jsonl -T 19 --seed 9 --out S_detections.jsonl
//   entmark detect --in S_attacked.jsonl --mode scan -k 30 -T 19 --seed 9
//       --out S_scan.jsonl
//
// with S = its and S = bs.

#pragma once

#include <map>
#include <string>
#include <vector>

#include "entmark/entmark.hpp"

namespace golden {

inline const std::vector<std::string>& stages() {
  static const std::vector<std::string> kStages{"generations", "attacked", "detections", "scan"};
  return kStages;
}

// File name (e.g. "its_attacked.jsonl") -> contents.
inline std::map<std::string, std::string> run_pipeline() {
  using namespace entmark;
  const auto lm = high_entropy_lm(16);
  std::map<std::string, std::string> files;
  for (auto sampler : {SamplerKind::kIts, SamplerKind::kBs}) {
    const std::string tag(to_string(sampler));
    const GenerationConfig config{2.0, 80, sampler, salt_from_hex("5eed"), {}};
    const auto generations = generate_records(lm, {}, config, 42, 4);
    std::vector<AttackSpec> plan = parse_attack("substitute:0.1");
    plan.push_back(parse_attack("crop:5:75")[0]);
    const auto attacked = attack_records(generations, plan, {"substitute:0.1", "crop:5:75"}, lm.size(), 7);
    DetectOptions keyed;
    keyed.T = 19;
    keyed.seed = 9;
    DetectOptions scan = keyed;
    scan.mode = DetectionMode::kScan;
    scan.k = 30;
    files[tag + "_generations.jsonl"] = to_jsonl(generations);
    files[tag + "_attacked.jsonl"] = to_jsonl(attacked);
    files[tag + "_detections.jsonl"] = to_jsonl(detect_records(attacked, lm, keyed));
    files[tag + "_scan.jsonl"] = to_jsonl(detect_records(attacked, lm, scan));
  }
  return files;
}

}  // namespace golden
