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

#ifndef MACOP_TESTS_SUPPORT_ORACLES_HPP_
#define MACOP_TESTS_SUPPORT_ORACLES_HPP_

// Reference computations written independently of the library code paths
// they check: finite differences, direct formula evaluation, brute-force
// enumeration and tabular value iteration.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

#include "macop/approximator.hpp"
#include "macop/marl.hpp"
#include "macop/rng.hpp"

namespace macop::oracle {

// Central-difference derivative of f with respect to every entry of x.
inline std::vector<double> numeric_gradient(
    const std::function<double(const std::vector<double>&)>& f,
    std::vector<double> x, double h = 1e-5) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + h;
    const double up = f(x);
    x[i] = keep - h;
    const double down = f(x);
    x[i] = keep;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

// max_i |a_i - b_i| / max(|a_i|, |b_i|, floor)
inline double max_relative_error(const std::vector<double>& a,
                                 const std::vector<double>& b,
                                 double floor = 1e-6) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double scale = std::max({std::abs(a[i]), std::abs(b[i]), floor});
    worst = std::max(worst, std::abs(a[i] - b[i]) / scale);
  }
  return worst;
}

// Plain loop-based MLP evaluation straight from the flat parameter layout
// (row-major weights, then bias, layer after layer).
inline std::vector<double> naive_forward(const NetSpec& spec,
                                         const std::vector<double>& backbone,
                                         const std::vector<double>& head,
                                         const std::vector<double>& input) {
  auto act = [&](double z) {
    return spec.activation == Activation::kTanh ? std::tanh(z)
                                                : std::max(0.0, z);
  };
  std::vector<double> x = input;
  auto run = [&](const std::vector<std::size_t>& dims,
                 const std::vector<double>& p, bool last_linear) {
    std::size_t off = 0;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
      const std::size_t in = dims[l], out = dims[l + 1];
      std::vector<double> y(out);
      for (std::size_t r = 0; r < out; ++r) {
        double z = 0.0;
        for (std::size_t c = 0; c < in; ++c) z += p[off + r * in + c] * x[c];
        z += p[off + in * out + r];
        y[r] = (last_linear && l + 2 == dims.size()) ? z : act(z);
      }
      off += in * out + out;
      x = y;
    }
  };
  run(spec.layer_dims(NetPart::kBackbone), backbone, false);
  run(spec.layer_dims(NetPart::kHead), head, true);
  return x;
}

// Direct (1/n) sum_i KL(pi_i || mean pi) per row, averaged over rows.
inline double direct_jsd(const std::vector<std::vector<std::vector<double>>>& q,
                         double temperature) {
  const std::size_t n = q.size(), rows = q[0].size(), k = q[0][0].size();
  double total = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    std::vector<std::vector<double>> p(n, std::vector<double>(k));
    for (std::size_t i = 0; i < n; ++i) {
      double z = 0.0;
      for (std::size_t a = 0; a < k; ++a) {
        p[i][a] = std::exp(q[i][r][a] / temperature);
        z += p[i][a];
      }
      for (double& v : p[i]) v /= z;
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t a = 0; a < k; ++a) {
        double m = 0.0;
        for (std::size_t j = 0; j < n; ++j) m += p[j][a] / n;
        total += p[i][a] * std::log(p[i][a] / m) / n;
      }
    }
  }
  return total / rows;
}

// Exact two-sided p-value of the rank-sum statistic by enumerating every
// split of the pooled ranks (no ties).
inline double exact_rank_sum_p(std::size_t n1, std::size_t n2, double w) {
  const std::size_t n = n1 + n2;
  std::vector<int> pick(n, 0);
  std::fill(pick.begin(), pick.begin() + static_cast<std::ptrdiff_t>(n1), 1);
  std::sort(pick.begin(), pick.end());
  const double mean = n1 * (n + 1.0) / 2.0;
  const double dev = std::abs(w - mean);
  double extreme = 0.0, total = 0.0;
  do {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += pick[i] ? (i + 1.0) : 0.0;
    total += 1.0;
    if (std::abs(s - mean) >= dev - 1e-12) extreme += 1.0;
  } while (std::next_permutation(pick.begin(), pick.end()));
  return extreme / total;
}

// A deterministic two-state MDP with an absorbing exit. Actions 0/1.
//   s0: a0 -> s1, r 0     a1 -> exit, r 0.5
//   s1: a0 -> exit, r 1   a1 -> s0,   r 0
struct TwoStateMdp {
  static int next(int s, int a) {
    if (s == 0) return a == 0 ? 1 : -1;
    return a == 0 ? -1 : 0;
  }
  static double reward(int s, int a) {
    if (s == 0) return a == 0 ? 0.0 : 0.5;
    return a == 0 ? 1.0 : 0.0;
  }
  // Q* by value iteration.
  static std::array<std::array<double, 2>, 2> q_star(double gamma) {
    std::array<std::array<double, 2>, 2> q{};
    for (int it = 0; it < 10000; ++it) {
      auto nq = q;
      for (int s = 0; s < 2; ++s)
        for (int a = 0; a < 2; ++a) {
          const int ns = next(s, a);
          nq[s][a] = reward(s, a) +
                     (ns < 0 ? 0.0 : gamma * std::max(q[ns][0], q[ns][1]));
        }
      q = nq;
    }
    return q;
  }
  // Uniform-random behaviour episode as one-hot single-agent inputs.
  static Episode sample(Rng& rng) {
    Episode ep;
    ep.n_agents = 1;
    ep.input_dim = 2;
    int s = static_cast<int>(rng.index(2));
    auto onehot = [](int st) {
      return std::vector<double>{st == 0 ? 1.0 : 0.0, st == 1 ? 1.0 : 0.0};
    };
    ep.inputs.push_back(onehot(s));
    while (s >= 0) {
      const int a = static_cast<int>(rng.index(2));
      const int ns = next(s, a);
      ep.actions.push_back({a});
      ep.rewards.push_back(reward(s, a));
      ep.return_undiscounted += reward(s, a);
      ep.inputs.push_back(ns < 0 ? std::vector<double>{0.0, 0.0} : onehot(ns));
      s = ns;
    }
    ep.terminated = true;
    return ep;
  }
};

}  // namespace macop::oracle

#endif  // MACOP_TESTS_SUPPORT_ORACLES_HPP_
