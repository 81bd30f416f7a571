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

#include "macop/teammate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "macop/error.hpp"

namespace macop {
namespace {

std::vector<int> slot_range(int from, int to) {
  std::vector<int> out;
  for (int i = from; i < to; ++i) out.push_back(i);
  return out;
}

// log softmax(q / temperature) of one row.
Eigen::RowVectorXd log_softmax_row(const Eigen::RowVectorXd& q,
                                   double temperature) {
  Eigen::RowVectorXd z = q / temperature;
  const double top = z.maxCoeff();
  const double lse = top + std::log((z.array() - top).exp().sum());
  return (z.array() - lse).matrix();
}

void check_finite(const Matrix& m) {
  if (!m.allFinite()) throw ContractError("non-finite q-values");
}

}  // namespace

JsdResult jsd_diversity(std::span<const Matrix> per_group_q,
                        double temperature) {
  require(!per_group_q.empty(), "jsd_diversity needs at least one group");
  require(temperature > 0.0, "temperature must be > 0");
  const Eigen::Index rows = per_group_q[0].rows();
  const Eigen::Index cols = per_group_q[0].cols();
  for (const Matrix& q : per_group_q) {
    require(q.rows() == rows && q.cols() == cols,
            "all groups must share observation count and action dim");
    check_finite(q);
  }
  const std::size_t n = per_group_q.size();
  const double inv_n = 1.0 / static_cast<double>(n);
  JsdResult out;
  out.grad_q.assign(n, Matrix::Zero(rows, cols));
  if (rows == 0) return out;
  const double inv_rows = 1.0 / static_cast<double>(rows);

  std::vector<Eigen::RowVectorXd> logp(n);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (std::size_t i = 0; i < n; ++i) {
      logp[i] = log_softmax_row(per_group_q[i].row(r), temperature);
    }
    // log of the mixture, computed per action via log-sum-exp.
    Eigen::RowVectorXd log_mix(cols);
    for (Eigen::Index a = 0; a < cols; ++a) {
      double top = -std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < n; ++i) top = std::max(top, logp[i](a));
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += std::exp(logp[i](a) - top);
      log_mix(a) = top + std::log(s) - std::log(static_cast<double>(n));
    }
    for (std::size_t i = 0; i < n; ++i) {
      const Eigen::RowVectorXd p = logp[i].array().exp().matrix();
      const Eigen::RowVectorXd diff = logp[i] - log_mix;
      out.value += inv_n * inv_rows * p.dot(diff);
      // d/dp_ia of the row value is (1/n)(log p_ia - log m_a); chain
      // through the softmax.
      const Eigen::RowVectorXd g = inv_n * inv_rows * diff;
      const double inner = p.dot(g);
      out.grad_q[i].row(r) =
          (p.array() * (g.array() - inner) / temperature).matrix();
    }
  }
  return out;
}

double dissimilarity(const QNet& tm_i, const QNet& tm_j,
                     std::span<const Episode> trajectories, int n_ego,
                     double temperature) {
  require(!trajectories.empty(), "dissimilarity needs trajectories");
  require(temperature > 0.0, "temperature must be > 0");
  double worst = 0.0;
  for (const Episode& ep : trajectories) {
    double product = 1.0;
    for (std::size_t t = 0; t < ep.length(); ++t) {
      for (std::size_t slot = static_cast<std::size_t>(n_ego);
           slot < ep.n_agents; ++slot) {
        const auto input = ep.agent_input(t, slot);
        const int a = ep.actions[t][slot];
        const auto qi = tm_i.q_values(input);
        const auto qj = tm_j.q_values(input);
        Eigen::RowVectorXd ri =
            Eigen::Map<const Eigen::RowVectorXd>(qi.data(), qi.size());
        Eigen::RowVectorXd rj =
            Eigen::Map<const Eigen::RowVectorXd>(qj.data(), qj.size());
        const double pi = std::exp(log_softmax_row(ri, temperature)(a));
        const double pj = std::exp(log_softmax_row(rj, temperature)(a));
        if (pj == 0.0) return std::numeric_limits<double>::infinity();
        product *= pi / pj;
      }
    }
    worst = std::max(worst, std::abs(1.0 - product));
  }
  return worst;
}

double dissimilarity(const TeammateGroup& group_i,
                     const TeammateGroup& group_j,
                     std::span<const Episode> trajectories, int n_ego,
                     double temperature) {
  return dissimilarity(group_i.tm_net, group_j.tm_net, trajectories, n_ego,
                       temperature);
}

TeammateGroup make_group(const NetSpec& spec, std::int64_t id,
                         std::size_t buffer_capacity, Rng& rng) {
  TeammateGroup g;
  g.id = id;
  g.tm_net = QNet::random(spec, rng);
  g.comp_ego_net = QNet::random(spec, rng);
  g.sp_buffer = ReplayBuffer(buffer_capacity);
  g.xp_buffer = ReplayBuffer(buffer_capacity);
  return g;
}

std::int64_t train_population(Population& population, const GridEnv& env,
                              std::span<const QNet> ego_nets,
                              std::int64_t budget,
                              const TeammateTrainConfig& config, Rng& rng) {
  const std::size_t n = population.size();
  require(n >= 1, "population must not be empty");
  require(ego_nets.empty() || ego_nets.size() == n,
          "need one ego network per member");
  require(config.updates_per_round >= 1, "updates_per_round must be >= 1");
  if (budget <= 0) return 0;

  const int n_ego = env.n_ego();
  const std::vector<int> tm_slots = slot_range(n_ego, env.n_agents());
  const std::vector<int> ego_slots = slot_range(0, n_ego);
  const bool use_incom = !ego_nets.empty() && config.alpha_incom > 0.0;
  const bool use_jsd = config.diversity == DiversityMode::kJsd &&
                       config.alpha_div > 0.0 && n >= 2;
  const bool use_lipo = config.diversity == DiversityMode::kLipo &&
                        config.alpha_div > 0.0 && n >= 2;

  std::vector<TrainableNet> tm(n);
  std::vector<TrainableNet> comp(n);
  for (std::size_t i = 0; i < n; ++i) {
    tm[i] = TrainableNet(population.members[i].tm_net, config.lr,
                         config.target_interval);
    comp[i] = TrainableNet(population.members[i].comp_ego_net, config.lr,
                           config.target_interval);
  }

  // The budget is per member; rounds give every member the same share.
  const std::int64_t total_budget = budget * static_cast<std::int64_t>(n);
  std::int64_t steps = 0;
  while (steps <= total_budget) {
    const double eps = epsilon_schedule(steps, total_budget, config.eps_start,
                                        config.eps_end,
                                        config.eps_decay_fraction);
    const ActionMode explore = ActionMode::eps_greedy(eps);
    for (std::size_t i = 0; i < n; ++i) {
      auto& member = population.members[i];
      if (use_incom) {
        auto policy = JointPolicy::compose(ego_nets[i], ActionMode::greedy(),
                                           tm[i].online, explore,
                                           env.n_agents(), n_ego);
        Episode ep = rollout(env, policy, rng, config.frame_stack);
        steps += static_cast<std::int64_t>(ep.length());
        member.xp_buffer.add(std::move(ep));
      }
      if (use_lipo) {
        std::size_t j = rng.index(n - 1);
        if (j >= i) ++j;
        auto policy = JointPolicy::compose(comp[j].online, explore,
                                           tm[i].online, explore,
                                           env.n_agents(), n_ego);
        Episode ep = rollout(env, policy, rng, config.frame_stack);
        steps += static_cast<std::int64_t>(ep.length());
        member.xp_buffer.add(std::move(ep));
      }
      auto policy = JointPolicy::compose(comp[i].online, explore, tm[i].online,
                                         explore, env.n_agents(), n_ego);
      Episode ep = rollout(env, policy, rng, config.frame_stack);
      steps += static_cast<std::int64_t>(ep.length());
      member.sp_buffer.add(std::move(ep));
    }

    for (int u = 0; u < config.updates_per_round; ++u) {
      std::vector<NetGrad> g_tm(n);
      std::vector<NetGrad> g_comp(n);
      std::vector<std::vector<const Episode*>> sp_batches(n);
      for (std::size_t i = 0; i < n; ++i) {
        auto& member = population.members[i];
        sp_batches[i] = member.sp_buffer.sample(config.batch_size, rng);
        const TdMember sp_members[] = {
            {&tm[i].online, &tm[i].target, tm_slots},
            {&comp[i].online, &comp[i].target, ego_slots}};
        TdResult sp = td_loss_and_grad(sp_members, sp_batches[i], config.gamma,
                                       +1.0);
        g_tm[i] = std::move(sp.grads[0]);
        g_comp[i] = std::move(sp.grads[1]);
        if ((use_incom || use_lipo) && !member.xp_buffer.empty()) {
          const auto xp_batch = member.xp_buffer.sample(config.batch_size, rng);
          const TdMember xp_members[] = {
              {&tm[i].online, &tm[i].target, tm_slots}};
          TdResult xp = td_loss_and_grad(xp_members, xp_batch, config.gamma,
                                         -1.0);
          const double weight = use_incom ? config.alpha_incom : 0.0;
          const double lipo_weight = use_lipo ? config.alpha_div : 0.0;
          g_tm[i].add_scaled(xp.grads[0], weight + lipo_weight);
        }
      }

      if (use_jsd) {
        // Teammate-slot inputs pooled from every member's self-play batch.
        std::vector<std::span<const double>> pool;
        for (std::size_t i = 0; i < n; ++i) {
          for (const Episode* ep : sp_batches[i]) {
            for (std::size_t t = 0; t < ep->length(); ++t) {
              for (int s : tm_slots) pool.push_back(ep->agent_input(t, s));
            }
          }
        }
        const std::size_t keep = std::min(pool.size(), config.jsd_max_obs);
        for (std::size_t k = 0; k < keep; ++k) {
          std::swap(pool[k], pool[k + rng.index(pool.size() - k)]);
        }
        const std::size_t in_dim = tm[0].online.spec.input_dim;
        Matrix x(static_cast<Eigen::Index>(keep), static_cast<Eigen::Index>(in_dim));
        for (std::size_t k = 0; k < keep; ++k) {
          x.row(static_cast<Eigen::Index>(k)) =
              Eigen::Map<const Eigen::RowVectorXd>(pool[k].data(), in_dim);
        }
        std::vector<ForwardCache> caches(n);
        std::vector<Matrix> qs(n);
        for (std::size_t i = 0; i < n; ++i) {
          qs[i] = forward_batch(tm[i].online.spec, tm[i].online.backbone,
                                tm[i].online.head, x, &caches[i]);
        }
        const JsdResult jsd = jsd_diversity(qs, config.temperature);
        for (std::size_t i = 0; i < n; ++i) {
          NetGrad gj = NetGrad::zeros_like(tm[i].online);
          backward_batch(tm[i].online.spec, tm[i].online.backbone,
                         tm[i].online.head, caches[i], jsd.grad_q[i],
                         gj.backbone, gj.head);
          // Loss carries -alpha_div * JSD: ascend the divergence.
          g_tm[i].add_scaled(gj, -config.alpha_div);
        }
      }

      for (std::size_t i = 0; i < n; ++i) {
        tm[i].apply(g_tm[i]);
        comp[i].apply(g_comp[i]);
      }
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    auto& member = population.members[i];
    member.tm_net = std::move(tm[i].online);
    member.comp_ego_net = std::move(comp[i].online);
    member.invalidate_caches();
  }
  return steps;
}

Population init_population(const GridEnv& env, const NetSpec& spec, int n_p,
                           std::int64_t pretrain_steps,
                           const TeammateTrainConfig& config, IdCounter& ids,
                           Rng& rng) {
  require(n_p >= 1, "population size must be >= 1");
  require(pretrain_steps >= 0, "pretrain_steps must be >= 0");
  Population pop;
  pop.generation = 0;
  for (int i = 0; i < n_p; ++i) {
    pop.members.push_back(make_group(spec, ids.next(), config.buffer_capacity, rng));
  }
  TeammateTrainConfig pre = config;
  pre.alpha_incom = 0.0;
  train_population(pop, env, {}, pretrain_steps, pre, rng);
  for (auto& m : pop.members) {
    m.sp_buffer.clear();
    m.xp_buffer.clear();
  }
  return pop;
}

Population mutate(const Population& parents, const GridEnv& env,
                  std::span<const QNet> ego_nets, std::int64_t t_tm,
                  const TeammateTrainConfig& config, IdCounter& ids,
                  Rng& rng) {
  require(t_tm >= env.horizon(),
          "mutation budget is smaller than one episode");
  Population offspring;
  offspring.generation = parents.generation + 1;
  for (const auto& parent : parents.members) {
    TeammateGroup child;
    child.id = ids.next();
    child.lineage = parent.id;
    child.generation = offspring.generation;
    child.tm_net = parent.tm_net;
    child.comp_ego_net = parent.comp_ego_net;
    child.sp_buffer = ReplayBuffer(config.buffer_capacity);
    child.xp_buffer = ReplayBuffer(config.buffer_capacity);
    offspring.members.push_back(std::move(child));
  }
  train_population(offspring, env, ego_nets, t_tm, config, rng);
  for (auto& m : offspring.members) {
    m.sp_buffer.clear();
    m.xp_buffer.clear();
  }
  return offspring;
}

std::vector<std::size_t> select_survivors(
    std::span<const SelectionCandidate> pool, std::size_t n_p) {
  require(pool.size() == 2 * n_p, "selection pool must hold 2 * n_p groups");
  std::vector<std::size_t> alive(pool.size());
  std::iota(alive.begin(), alive.end(), 0);

  const std::size_t drop_sp = n_p / 2;
  const std::size_t drop_xp = (n_p + 1) / 2;

  std::sort(alive.begin(), alive.end(), [&](std::size_t a, std::size_t b) {
    if (pool[a].sp_return != pool[b].sp_return) {
      return pool[a].sp_return < pool[b].sp_return;
    }
    return pool[a].id < pool[b].id;
  });
  alive.erase(alive.begin(), alive.begin() + static_cast<std::ptrdiff_t>(drop_sp));

  std::sort(alive.begin(), alive.end(), [&](std::size_t a, std::size_t b) {
    if (pool[a].xp_return != pool[b].xp_return) {
      return pool[a].xp_return > pool[b].xp_return;
    }
    return pool[a].id < pool[b].id;
  });
  alive.erase(alive.begin(), alive.begin() + static_cast<std::ptrdiff_t>(drop_xp));

  std::sort(alive.begin(), alive.end());
  return alive;
}

ReturnStats self_play_return(const GridEnv& env, const TeammateGroup& group,
                             int n_episodes, Rng& rng, int frame_stack) {
  auto policy = JointPolicy::compose(group.comp_ego_net, ActionMode::greedy(),
                                     group.tm_net, ActionMode::greedy(),
                                     env.n_agents(), env.n_ego());
  return empirical_return(env, policy, n_episodes, rng, frame_stack);
}

ReturnStats cross_play_return(const GridEnv& env, const QNet& ego,
                              const TeammateGroup& group, int n_episodes,
                              Rng& rng, int frame_stack) {
  auto policy = JointPolicy::compose(ego, ActionMode::greedy(), group.tm_net,
                                     ActionMode::greedy(), env.n_agents(),
                                     env.n_ego());
  return empirical_return(env, policy, n_episodes, rng, frame_stack);
}

}  // namespace macop
