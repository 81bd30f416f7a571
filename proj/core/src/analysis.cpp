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

#include "macop/analysis.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <set>
#include <utility>

#include "macop/error.hpp"

namespace macop {
namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

double eval_pair(const GridEnv& env, const EgoPolicy& ego,
                 const TeammateGroup& g, int episodes, int per_head,
                 bool random_head, Rng& rng, int frame_stack) {
  const QNet net =
      ego_for_teammate(env, ego, g.tm_net, per_head, random_head, rng,
                       frame_stack);
  return cross_play_return(env, net, g, episodes, rng, frame_stack).mean;
}

}  // namespace

std::string EvalEntry::label() const {
  return run_id + ":" + std::to_string(group.id);
}

EvalSet eval_set_from_archives(std::span<const Archive> archives) {
  require(!archives.empty(), "evaluation set needs at least one archive");
  EvalSet out;
  out.env = archives[0].env;
  std::set<std::pair<std::string, std::int64_t>> seen;
  for (const Archive& a : archives) {
    require(a.env == out.env, "archives come from different environments");
    for (const ArchiveEntry& e : a.entries) {
      if (!seen.insert({a.run_id, e.group.id}).second) continue;
      out.entries.push_back({a.run_id, e.group});
    }
  }
  require(!out.entries.empty(), "evaluation set is empty");
  return out;
}

EvalSet build_eval_set(const std::vector<std::filesystem::path>& run_dirs) {
  std::vector<Archive> archives;
  for (const auto& dir : run_dirs) {
    archives.push_back(load_archive(dir / "archive.json"));
  }
  return eval_set_from_archives(archives);
}

std::string OverallResult::to_csv() const {
  std::string out = "entry,mean,std\n";
  for (const auto& e : entries) {
    out += e.label + "," + fmt(e.stats.mean) + "," + fmt(e.stats.std) + "\n";
  }
  out += "grand_mean," + fmt(grand_mean) + ",\n";
  return out;
}

OverallResult evaluate_overall(const GridEnv& env, const EgoPolicy& ego,
                               const EvalSet& eval_set, int episodes_per_pair,
                               int episodes_per_head, bool random_head,
                               Rng& rng, int frame_stack) {
  require(episodes_per_pair >= 1, "episodes_per_pair must be >= 1");
  require(!eval_set.entries.empty(), "evaluation set is empty");
  OverallResult out;
  for (const EvalEntry& e : eval_set.entries) {
    require(e.group.tm_net.spec == ego.spec,
            "teammate network does not match the ego's environment");
    const QNet net = ego_for_teammate(env, ego, e.group.tm_net,
                                      episodes_per_head, random_head, rng,
                                      frame_stack);
    const ReturnStats r =
        cross_play_return(env, net, e.group, episodes_per_pair, rng,
                          frame_stack);
    out.entries.push_back({e.label(), r});
    out.grand_mean += r.mean;
  }
  out.grand_mean /= static_cast<double>(out.entries.size());
  return out;
}

TransferMetrics continual_metrics(const AlphaMatrix& m) {
  const std::size_t K = m.size();
  require(K >= 2, "transfer metrics need at least two groups");
  for (const auto& row : m.alpha) require(row.size() >= K, "alpha rows too short");
  TransferMetrics out;
  const bool has_tilde = !m.alpha_tilde.empty();
  if (has_tilde) require(m.alpha_tilde.size() >= K, "alpha_tilde too short");
  // Indices below are zero-based: k, j here are the 1-based k-1, j-1.
  for (std::size_t k = 1; k < K; ++k) {
    double b = 0.0;
    for (std::size_t j = 0; j < k; ++j) b += m.alpha[k][j] - m.alpha[j][j];
    out.bwt += b / static_cast<double>(k);
    if (has_tilde) {
      double f = 0.0;
      for (std::size_t j = 1; j <= k; ++j) f += m.alpha[j][j] - m.alpha_tilde[j];
      out.fwt += f / static_cast<double>(k);
    }
  }
  out.bwt /= static_cast<double>(K - 1);
  out.fwt = has_tilde ? out.fwt / static_cast<double>(K - 1)
                      : std::numeric_limits<double>::quiet_NaN();
  return out;
}

AlphaMatrix continual_sequence(const GridEnv& env,
                               std::span<const TeammateGroup> sequence,
                               const MacopConfig& config, EgoMethod method,
                               bool with_alpha_tilde, Rng& rng) {
  require(!sequence.empty(), "empty teammate sequence");
  const NetSpec spec = net_spec_for(config, env);
  const EgoTrainConfig ecfg = ego_config(config, method);
  const std::size_t K = sequence.size();
  AlphaMatrix m;
  m.alpha.assign(K, std::vector<double>(K, 0.0));
  EgoPolicy ego = EgoPolicy::create(spec, rng);
  for (std::size_t k = 0; k < K; ++k) {
    continual_train(ego, env, sequence[k], config.t_ego, ecfg, rng);
    for (std::size_t j = 0; j < K; ++j) {
      m.alpha[k][j] = eval_pair(env, ego, sequence[j], config.eval_episodes,
                                config.meta_episodes_per_head, false, rng,
                                config.frame_stack);
    }
  }
  if (with_alpha_tilde) {
    for (std::size_t j = 0; j < K; ++j) {
      EgoPolicy fresh = EgoPolicy::create(spec, rng);
      continual_train(fresh, env, sequence[j], config.t_ego, ecfg, rng);
      m.alpha_tilde.push_back(eval_pair(env, fresh, sequence[j],
                                        config.eval_episodes,
                                        config.meta_episodes_per_head, false,
                                        rng, config.frame_stack));
    }
  }
  return m;
}

double CrossPlayMatrix::diagonal_mean() const {
  double s = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) s += values[i][i];
  return s / static_cast<double>(values.size());
}

double CrossPlayMatrix::off_diagonal_mean() const {
  double s = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    for (std::size_t j = 0; j < values.size(); ++j) {
      if (i == j) continue;
      s += values[i][j];
      ++n;
    }
  }
  return n == 0 ? 0.0 : s / static_cast<double>(n);
}

std::string CrossPlayMatrix::to_csv() const {
  std::string out = "teammate\\partner";
  for (const auto& l : labels) out += "," + l;
  out += "\n";
  for (std::size_t i = 0; i < values.size(); ++i) {
    out += labels[i];
    for (double v : values[i]) out += "," + fmt(v);
    out += "\n";
  }
  return out;
}

CrossPlayMatrix crossplay_matrix(const GridEnv& env,
                                 std::span<const TeammateGroup> groups,
                                 const std::vector<std::string>& labels,
                                 int n_eval, Rng& rng, int frame_stack) {
  require(groups.size() >= 2, "cross-play needs at least two groups");
  require(labels.size() == groups.size(), "one label per group");
  CrossPlayMatrix m;
  m.labels = labels;
  m.values.assign(groups.size(), std::vector<double>(groups.size(), 0.0));
  for (std::size_t i = 0; i < groups.size(); ++i) {
    for (std::size_t j = 0; j < groups.size(); ++j) {
      auto policy = JointPolicy::compose(
          groups[j].comp_ego_net, ActionMode::greedy(), groups[i].tm_net,
          ActionMode::greedy(), env.n_agents(), env.n_ego());
      m.values[i][j] =
          empirical_return(env, policy, n_eval, rng, frame_stack).mean;
    }
  }
  return m;
}

}  // namespace macop
