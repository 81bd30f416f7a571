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

// Exact numerical checks of the similarity/compatibility relations on a
// game small enough to enumerate: two states, two actions per side, two
// steps. Teammate policies are tabular in (step, state).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <string>

#include "macop/analysis.hpp"
#include "macop/error.hpp"

namespace macop {
namespace {

constexpr int kS = 2;
constexpr int kA = 2;
constexpr int kT = 2;

// pi[t][s][a]
using Tabular = std::array<std::array<std::array<double, kA>, kS>, kT>;

struct Game {
  std::array<double, kS> init{};
  // trans[s][ae][at][s']
  std::array<std::array<std::array<std::array<double, kS>, kA>, kA>, kS> trans{};
  // reward[s][ae][at], positive, two steps sum into (0, 1]
  std::array<std::array<std::array<double, kA>, kA>, kS> reward{};
  Tabular ego{};
};

std::array<double, 2> random_pair(Rng& rng, double lo) {
  const double p = rng.uniform(lo, 1.0 - lo);
  return {p, 1.0 - p};
}

Game random_game(Rng& rng) {
  Game g;
  g.init = random_pair(rng, 0.1);
  for (auto& s : g.trans)
    for (auto& ae : s)
      for (auto& at : ae) at = random_pair(rng, 0.1);
  for (auto& s : g.reward)
    for (auto& ae : s)
      for (double& r : ae) r = rng.uniform(0.05, 0.5);
  for (auto& t : g.ego)
    for (auto& s : t) {
      const auto p = random_pair(rng, 0.1);
      s = {p[0], p[1]};
    }
  return g;
}

Tabular random_tabular(Rng& rng, double lo) {
  Tabular tm{};
  for (auto& t : tm)
    for (auto& s : t) {
      const auto p = random_pair(rng, lo);
      s = {p[0], p[1]};
    }
  return tm;
}

// Moves every probability by a random logit shift of size <= scale.
Tabular perturb(const Tabular& tm, double scale, Rng& rng) {
  Tabular out = tm;
  for (auto& t : out)
    for (auto& s : t) {
      const double shift = rng.uniform(-scale, scale);
      const double z = std::log(s[0] / s[1]) + shift;
      s[0] = 1.0 / (1.0 + std::exp(-z));
      s[1] = 1.0 - s[0];
    }
  return out;
}

template <class Fn>
void for_each_trajectory(Fn&& fn) {
  for (int s0 = 0; s0 < kS; ++s0)
    for (int e0 = 0; e0 < kA; ++e0)
      for (int a0 = 0; a0 < kA; ++a0)
        for (int s1 = 0; s1 < kS; ++s1)
          for (int e1 = 0; e1 < kA; ++e1)
            for (int a1 = 0; a1 < kA; ++a1) fn(s0, e0, a0, s1, e1, a1);
}

double expected_return(const Game& g, const Tabular& tm) {
  double j = 0.0;
  for_each_trajectory([&](int s0, int e0, int a0, int s1, int e1, int a1) {
    const double p = g.init[s0] * g.ego[0][s0][e0] * tm[0][s0][a0] *
                     g.trans[s0][e0][a0][s1] * g.ego[1][s1][e1] *
                     tm[1][s1][a1];
    j += p * (g.reward[s0][e0][a0] + g.reward[s1][e1][a1]);
  });
  return j;
}

// max over trajectories of |1 - prod_t x(a_t) / y(a_t)|.
double tabular_dissimilarity(const Tabular& x, const Tabular& y) {
  double worst = 0.0;
  for_each_trajectory([&](int s0, int, int a0, int s1, int, int a1) {
    const double ratio =
        x[0][s0][a0] / y[0][s0][a0] * (x[1][s1][a1] / y[1][s1][a1]);
    worst = std::max(worst, std::abs(1.0 - ratio));
  });
  return worst;
}

double min_prob(const Tabular& x) {
  double m = 1.0;
  for (const auto& t : x)
    for (const auto& s : t)
      for (double p : s) m = std::min(m, p);
  return m;
}

double min_tv(const Tabular& x, const Tabular& y) {
  double m = 1.0;
  for (int t = 0; t < kT; ++t)
    for (int s = 0; s < kS; ++s) m = std::min(m, tv_distance(x[t][s], y[t][s]));
  return m;
}

template <class... Args>
std::string fmt(const char* f, Args... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

const double kEpsGrid[] = {0.05, 0.1, 0.2, 0.3, 0.4, 0.5,
                           0.6,  0.7, 0.8, 0.9, 0.95};

}  // namespace

double js_divergence(std::span<const double> p, std::span<const double> q) {
  require(p.size() == q.size() && !p.empty(), "distributions differ in size");
  double out = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double m = 0.5 * (p[i] + q[i]);
    if (p[i] > 0.0) out += 0.5 * p[i] * std::log(p[i] / m);
    if (q[i] > 0.0) out += 0.5 * q[i] * std::log(q[i] / m);
  }
  return out;
}

double tv_distance(std::span<const double> p, std::span<const double> q) {
  require(p.size() == q.size() && !p.empty(), "distributions differ in size");
  double out = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) out += std::abs(p[i] - q[i]);
  return 0.5 * out;
}

TheoryReport verify_theory(Rng& rng, const TheoryConfig& config) {
  TheoryReport rep;

  // Sandwich bound for similar pairs, and its contrapositive.
  for (int n = 0; n < config.similar_pairs; ++n) {
    const Game g = random_game(rng);
    const Tabular tm = random_tabular(rng, 0.05);
    // Odd pairs take large shifts so the contrapositive premise is reached.
    const double scale = rng.uniform(0.0, n % 2 ? 4.0 : 0.6);
    const Tabular tm2 = n == 0 ? tm : perturb(tm, scale, rng);
    const double eps = tabular_dissimilarity(tm2, tm);
    const double j = expected_return(g, tm);
    const double j2 = expected_return(g, tm2);
    const double lower = j2 - (1.0 - eps) * j;
    const double upper = (1.0 + eps) * j - j2;
    rep.sandwich_worst_slack =
        std::min({rep.sandwich_worst_slack, lower, upper});
    ++rep.sandwich_checked;
    if (lower < -1e-9 || upper < -1e-9) {
      rep.sandwich_violations.push_back(
          fmt("pair %d: eps=%.12g J=%.12g J'=%.12g", n, eps, j, j2));
    }
    for (double e : kEpsGrid) {
      if (j2 < (1.0 - e) * j || j2 > (1.0 + e) * j) {
        ++rep.contrapositive_checked;
        if (!(eps > e)) {
          rep.contrapositive_violations.push_back(
              fmt("pair %d: eps=%.12g d=%.12g J'/J=%.12g", n, e, eps, j2 / j));
        }
      }
    }
  }

  // JSD never exceeds total variation.
  for (int n = 0; n < config.divergence_pairs; ++n) {
    const std::size_t k = 2 + rng.index(5);
    std::vector<double> p(k), q(k);
    const bool sparse = rng.uniform() < 0.2;
    double sp = 0.0, sq = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      p[i] = -std::log(1.0 - rng.uniform());
      q[i] = -std::log(1.0 - rng.uniform());
      if (sparse && rng.uniform() < 0.5) (rng.uniform() < 0.5 ? p[i] : q[i]) = 0.0;
    }
    for (std::size_t i = 0; i < k; ++i) {
      sp += p[i];
      sq += q[i];
    }
    if (sp == 0.0) p[0] = sp = 1.0;
    if (sq == 0.0) q[k - 1] = sq = 1.0;
    for (std::size_t i = 0; i < k; ++i) {
      p[i] /= sp;
      q[i] /= sq;
    }
    const double jsd = js_divergence(p, q);
    const double tv = tv_distance(p, q);
    ++rep.divergence_checked;
    if (jsd > tv + 1e-12) {
      rep.divergence_violations.push_back(
          fmt("sample %d: k=%zu JSD=%.12g TV=%.12g", n, k, jsd, tv));
    }
  }

  // Premise of the TV-to-dissimilarity bound: TV^min above the stated
  // threshold should force d > eps. The first instance is a fixed,
  // hand-picked pair.
  for (int n = 0; n < config.premise_pairs; ++n) {
    Tabular x, y;
    if (n == 0) {
      for (auto& t : x)
        for (auto& s : t) s = {0.6, 0.4};
      for (auto& t : y)
        for (auto& s : t) s = {0.5, 0.5};
    } else {
      x = random_tabular(rng, 0.02);
      y = random_tabular(rng, 0.02);
    }
    const double delta = std::min(min_prob(x), min_prob(y));
    const double tv = min_tv(x, y);
    const double d = tabular_dissimilarity(x, y);
    const double k = kA;
    for (double e : kEpsGrid) {
      const double bound =
          k * (k - 1.0) * delta / 2.0 *
          std::min(1.0 - std::pow(1.0 - e, 1.0 / kT),
                   std::pow(1.0 + e, 1.0 / kT) - 1.0);
      if (tv > bound) {
        ++rep.premise_checked;
        if (!(d > e)) {
          rep.premise_violations.push_back(
              fmt("pair %d: eps=%.6g TVmin=%.6g bound=%.6g delta=%.6g d=%.6g", n,
                  e, tv, bound, delta, d));
        }
      }
    }
  }
  return rep;
}

std::string TheoryReport::text() const {
  auto section = [](const char* name, int checked,
                    const std::vector<std::string>& v, std::string extra) {
    std::string out = std::string("[") + name + "] checked=" +
                      std::to_string(checked) +
                      " violations=" + std::to_string(v.size()) + extra +
                      " verdict=" + (v.empty() ? "PASS" : "VIOLATED") + "\n";
    for (const auto& line : v) out += "  violation " + line + "\n";
    return out;
  };
  char slack[64];
  std::snprintf(slack, sizeof slack, " worst_margin=%.3g", sandwich_worst_slack);
  return section("sandwich", sandwich_checked, sandwich_violations, slack) +
         section("contrapositive", contrapositive_checked,
                 contrapositive_violations, "") +
         section("jsd_le_tv", divergence_checked, divergence_violations, "") +
         section("tv_premise", premise_checked, premise_violations, "");
}

}  // namespace macop
