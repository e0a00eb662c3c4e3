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
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "entmark/common.hpp"

namespace entmark {

struct RocSummary {
  // Descending thresholds; a score >= threshold is called positive. The
  // first entry is +inf, so the curve starts at (0, 0).
  std::vector<double> thresholds;
  std::vector<double> tpr;
  std::vector<double> fpr;
  double auc = 0.0;
  double tpr_at_1pct_fpr = 0.0;

  // Largest TPR among operating points whose empirical FPR <= max_fpr.
  double tpr_at_fpr(double max_fpr) const {
    double best = 0.0;
    for (std::size_t i = 0; i < fpr.size(); ++i) {
      if (fpr[i] <= max_fpr) best = std::max(best, tpr[i]);
    }
    return best;
  }
};

// Higher scores mean "more watermarked". AUC is the trapezoidal area, which
// equals P(pos > neg) + P(pos == neg) / 2.
inline RocSummary roc_auc(std::span<const double> pos, std::span<const double> neg) {
  require(!pos.empty() && !neg.empty(), "roc_auc: both score sets must be non-empty");
  struct Scored {
    double score;
    bool positive;
  };
  std::vector<Scored> all;
  all.reserve(pos.size() + neg.size());
  for (double s : pos) all.push_back({s, true});
  for (double s : neg) all.push_back({s, false});
  std::sort(all.begin(), all.end(), [](const Scored& a, const Scored& b) { return a.score > b.score; });

  RocSummary roc;
  const auto np = static_cast<double>(pos.size());
  const auto nn = static_cast<double>(neg.size());
  roc.thresholds.push_back(std::numeric_limits<double>::infinity());
  roc.tpr.push_back(0.0);
  roc.fpr.push_back(0.0);
  std::size_t tp = 0;
  std::size_t fp = 0;
  for (std::size_t i = 0; i < all.size();) {
    const double threshold = all[i].score;
    while (i < all.size() && all[i].score == threshold) {
      (all[i].positive ? tp : fp) += 1;
      ++i;
    }
    const double t = static_cast<double>(tp) / np;
    const double f = static_cast<double>(fp) / nn;
    roc.auc += (f - roc.fpr.back()) * (t + roc.tpr.back()) / 2.0;
    roc.thresholds.push_back(threshold);
    roc.tpr.push_back(t);
    roc.fpr.push_back(f);
  }
  roc.tpr_at_1pct_fpr = roc.tpr_at_fpr(0.01);
  return roc;
}

}  // namespace entmark
