// Copyright 2026 The Macop Lab Authors
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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "macop/analysis.hpp"
#include "macop/error.hpp"

namespace macop {

RankSumResult wilcoxon_rank_sum(std::span<const double> a,
                                std::span<const double> b, double level) {
  require(a.size() >= 3 && b.size() >= 3,
          "rank-sum test needs at least 3 values per sample");
  const std::size_t n1 = a.size();
  const std::size_t n = a.size() + b.size();
  std::vector<std::pair<double, bool>> pooled;  // (value, from a)
  for (double v : a) pooled.push_back({v, true});
  for (double v : b) pooled.push_back({v, false});
  for (const auto& p : pooled) require(std::isfinite(p.first), "non-finite sample");
  std::sort(pooled.begin(), pooled.end(),
            [](const auto& x, const auto& y) { return x.first < y.first; });

  RankSumResult out;
  double tie_term = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && pooled[j].first == pooled[i].first) ++j;
    const double t = static_cast<double>(j - i);
    const double midrank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) {
      if (pooled[k].second) out.rank_sum += midrank;
    }
    tie_term += t * t * t - t;
    i = j;
  }
  const double dn1 = static_cast<double>(n1);
  const double dn2 = static_cast<double>(n - n1);
  const double dn = static_cast<double>(n);
  const double mean = dn1 * (dn + 1.0) / 2.0;
  const double var =
      dn1 * dn2 / 12.0 * ((dn + 1.0) - tie_term / (dn * (dn - 1.0)));
  if (var <= 0.0) {
    out.statistic = 0.0;
    out.p_value = 1.0;
  } else {
    out.statistic = (out.rank_sum - mean) / std::sqrt(var);
    out.p_value = std::erfc(std::abs(out.statistic) / std::sqrt(2.0));
  }
  if (out.p_value < level) {
    out.verdict = out.statistic > 0.0 ? "+" : "-";
  } else {
    out.verdict = "≈";
  }
  return out;
}

}  // namespace macop
