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

#include <boost/math/distributions/chi_squared.hpp>

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "entmark/common.hpp"

namespace entmark {

struct ChiSquareResult {
  double statistic = 0.0;
  std::size_t df = 0;
  double p_value = 1.0;
};

inline double chi_square_sf(double statistic, std::size_t df) {
  if (df == 0) return 1.0;
  boost::math::chi_squared dist(static_cast<double>(df));
  return boost::math::cdf(boost::math::complement(dist, std::max(0.0, statistic)));
}

// Pearson goodness of fit of observed counts against expected probabilities.
// Categories with zero expected probability must have zero counts.
inline ChiSquareResult chi_square_gof(std::span<const std::uint64_t> observed, std::span<const double> expected) {
  require(observed.size() == expected.size(), "chi_square_gof: size mismatch");
  double total = 0.0;
  for (auto c : observed) total += static_cast<double>(c);
  require(total > 0.0, "chi_square_gof: no observations");
  ChiSquareResult r;
  std::size_t categories = 0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    if (expected[i] <= 0.0) {
      require(observed[i] == 0, "chi_square_gof: count in an impossible category");
      continue;
    }
    const double e = total * expected[i];
    const double diff = static_cast<double>(observed[i]) - e;
    r.statistic += diff * diff / e;
    ++categories;
  }
  r.df = categories > 0 ? categories - 1 : 0;
  r.p_value = chi_square_sf(r.statistic, r.df);
  return r;
}

// Two-sample test of homogeneity on a 2 x K contingency table; columns that
// are empty in both samples are dropped.
inline ChiSquareResult chi_square_homogeneity(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b) {
  require(a.size() == b.size(), "chi_square_homogeneity: size mismatch");
  double na = 0.0;
  double nb = 0.0;
  for (auto c : a) na += static_cast<double>(c);
  for (auto c : b) nb += static_cast<double>(c);
  require(na > 0.0 && nb > 0.0, "chi_square_homogeneity: empty sample");
  const double n = na + nb;
  ChiSquareResult r;
  std::size_t columns = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double col = static_cast<double>(a[i] + b[i]);
    if (col == 0.0) continue;
    ++columns;
    const double ea = na * col / n;
    const double eb = nb * col / n;
    const double da = static_cast<double>(a[i]) - ea;
    const double db = static_cast<double>(b[i]) - eb;
    r.statistic += da * da / ea + db * db / eb;
  }
  r.df = columns > 0 ? columns - 1 : 0;
  r.p_value = chi_square_sf(r.statistic, r.df);
  return r;
}

// Mean and standard error of a sample.
struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

inline MeanSe mean_se(std::span<const double> xs) {
  require(!xs.empty(), "mean_se: empty sample");
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  if (xs.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  const double var = ss / static_cast<double>(xs.size() - 1);
  return {mean, std::sqrt(var / static_cast<double>(xs.size()))};
}

}  // namespace entmark
