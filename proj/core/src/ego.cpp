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

#include "macop/ego.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "macop/error.hpp"

namespace macop {
namespace {

std::vector<int> slot_range(int from, int to) {
  std::vector<int> out;
  for (int i = from; i < to; ++i) out.push_back(i);
  return out;
}

bool single_head(EgoMethod m) { return m != EgoMethod::kMacop; }

ReplayBuffer shrink(const ReplayBuffer& src, std::size_t capacity) {
  ReplayBuffer out(capacity);
  const std::size_t start = src.size() > capacity ? src.size() - capacity : 0;
  for (std::size_t i = start; i < src.size(); ++i) out.add(src.at(i));
  return out;
}

// Half of the batch from the current buffer, the rest spread round-robin
// over the rehearsal buffers.
std::vector<const Episode*> clear_batch(const ReplayBuffer& current,
                                        const std::vector<ReplayBuffer>& past,
                                        std::size_t batch, Rng& rng) {
  std::size_t n_past = 0;
  for (const auto& b : past) n_past += b.empty() ? 0 : 1;
  if (n_past == 0) return current.sample(batch, rng);
  auto out = current.sample(batch - batch / 2, rng);
  std::vector<std::size_t> quota(past.size(), 0);
  std::size_t want = batch / 2;
  for (std::size_t i = 0; want > 0; i = (i + 1) % past.size()) {
    if (!past[i].empty()) {
      quota[i] += 1;
      want -= 1;
    }
  }
  for (std::size_t i = 0; i < past.size(); ++i) {
    if (quota[i] == 0) continue;
    for (const Episode* ep : past[i].sample(quota[i], rng)) out.push_back(ep);
  }
  return out;
}

void add_ewc_penalty(NetGrad& g, const QNet& net, const EgoPolicy& ego,
                     double mu) {
  if (ego.fisher_backbone.empty()) return;
  for (std::size_t i = 0; i < g.backbone.size(); ++i) {
    g.backbone[i] += mu * ego.fisher_backbone[i] *
                     (net.backbone[i] - ego.anchor_backbone[i]);
  }
  for (std::size_t i = 0; i < g.head.size(); ++i) {
    g.head[i] +=
        mu * ego.fisher_head[i] * (net.head[i] - ego.anchor_head[i]);
  }
}

}  // namespace

const char* ego_method_name(EgoMethod m) {
  switch (m) {
    case EgoMethod::kMacop: return "macop";
    case EgoMethod::kFinetune: return "finetune";
    case EgoMethod::kSingleHead: return "single_head";
    case EgoMethod::kEwc: return "ewc";
    case EgoMethod::kClear: return "clear";
  }
  return "macop";
}

EgoMethod parse_ego_method(const std::string& name) {
  for (EgoMethod m : {EgoMethod::kMacop, EgoMethod::kFinetune,
                      EgoMethod::kSingleHead, EgoMethod::kEwc,
                      EgoMethod::kClear}) {
    if (name == ego_method_name(m)) return m;
  }
  throw ContractError("unknown ego method: " + name);
}

EgoPolicy EgoPolicy::create(const NetSpec& spec, Rng& rng) {
  spec.validate();
  EgoPolicy ego;
  ego.spec = spec;
  ego.backbone = init_params(spec, NetPart::kBackbone, rng);
  return ego;
}

QNet EgoPolicy::compose(std::size_t head) const {
  require(head < heads.size(), "head index out of range");
  return QNet{spec, backbone, heads[head]};
}

std::vector<QNet> EgoPolicy::compose_all() const {
  std::vector<QNet> out;
  for (std::size_t h = 0; h < heads.size(); ++h) out.push_back(compose(h));
  return out;
}

RegResult reg_loss(const ParamStore& backbone,
                   const std::vector<ParamStore>& snapshots, double p) {
  require(p >= 1.0, "reg norm order must be >= 1");
  RegResult out;
  out.grad = ParamStore(backbone.size());
  if (snapshots.empty()) return out;
  const double inv_m = 1.0 / static_cast<double>(snapshots.size());
  std::vector<double> diff(backbone.size());
  for (const ParamStore& snap : snapshots) {
    require(snap.size() == backbone.size(), "snapshot shape mismatch");
    double acc = 0.0;
    for (std::size_t k = 0; k < diff.size(); ++k) {
      diff[k] = backbone[k] - snap[k];
      acc += std::pow(std::abs(diff[k]), p);
    }
    const double norm = std::pow(acc, 1.0 / p);
    out.value += inv_m * norm;
    if (norm == 0.0) continue;  // subgradient 0 at the snapshot
    const double denom = std::pow(norm, p - 1.0);
    for (std::size_t k = 0; k < diff.size(); ++k) {
      if (diff[k] == 0.0) continue;
      const double s = diff[k] > 0.0 ? 1.0 : -1.0;
      out.grad[k] += inv_m * s * std::pow(std::abs(diff[k]), p - 1.0) / denom;
    }
  }
  return out;
}

bool expansion_decision(double r_new, const std::vector<double>& r_existing,
                        double lambda) {
  if (r_existing.empty()) return true;
  const double best = *std::max_element(r_existing.begin(), r_existing.end());
  if (best <= 0.0) return true;
  return (r_new - best) / best >= lambda;
}

HeadEvalReport meta_select_head(const GridEnv& env, const EgoPolicy& ego,
                                const QNet& teammate, int episodes_per_head,
                                Rng& rng, int frame_stack) {
  require(ego.head_count() >= 1, "meta-selection needs at least one head");
  require(episodes_per_head >= 1, "episodes_per_head must be >= 1");
  HeadEvalReport report;
  report.episodes_per_head = episodes_per_head;
  report.per_head_mean.assign(ego.head_count(), 0.0);
  const std::vector<QNet> nets = ego.compose_all();
  std::vector<JointPolicy> policies;
  for (const QNet& net : nets) {
    policies.push_back(JointPolicy::compose(net, ActionMode::greedy(),
                                            teammate, ActionMode::greedy(),
                                            env.n_agents(), env.n_ego()));
  }
  for (int e = 0; e < episodes_per_head; ++e) {
    for (std::size_t h = 0; h < nets.size(); ++h) {
      const Episode ep = rollout(env, policies[h], rng, frame_stack);
      double& mean = report.per_head_mean[h];
      mean += (ep.return_undiscounted - mean) / static_cast<double>(e + 1);
    }
  }
  for (std::size_t h = 1; h < nets.size(); ++h) {
    if (report.per_head_mean[h] > report.per_head_mean[report.chosen]) {
      report.chosen = h;
    }
  }
  return report;
}

QNet ego_for_teammate(const GridEnv& env, const EgoPolicy& ego,
                      const QNet& teammate, int episodes_per_head,
                      bool random_head, Rng& rng, int frame_stack) {
  require(ego.head_count() >= 1, "ego has no heads");
  if (ego.head_count() == 1) return ego.compose(0);
  if (random_head) return ego.compose(rng.index(ego.head_count()));
  const auto report =
      meta_select_head(env, ego, teammate, episodes_per_head, rng, frame_stack);
  return ego.compose(report.chosen);
}

ContinualReport continual_train(EgoPolicy& ego, const GridEnv& env,
                                const TeammateGroup& group,
                                std::int64_t budget,
                                const EgoTrainConfig& config, Rng& rng) {
  require(budget > 0, "continual training needs a positive budget");
  require(config.updates_per_round >= 1, "updates_per_round must be >= 1");
  const NetSpec& spec = ego.spec;
  const bool fresh_head = !single_head(config.method) || ego.heads.empty();
  ParamStore head = fresh_head ? init_params(spec, NetPart::kHead, rng)
                               : ego.heads.back();
  TrainableNet learner(QNet{spec, ego.backbone, head}, config.lr,
                       config.target_interval);
  TrainableNet partner(QNet::random(spec, rng), config.lr,
                       config.target_interval);
  ReplayBuffer xp_buffer(config.buffer_capacity);
  ReplayBuffer sp_buffer(config.buffer_capacity);
  const std::vector<int> ego_slots = slot_range(0, env.n_ego());
  const std::vector<int> tm_slots = slot_range(env.n_ego(), env.n_agents());
  const bool regularize = (config.method == EgoMethod::kMacop ||
                           config.method == EgoMethod::kSingleHead) &&
                          config.alpha_reg > 0.0;

  ContinualReport report;
  while (report.steps <= budget) {
    const double eps =
        epsilon_schedule(report.steps, budget, config.eps_start,
                         config.eps_end, config.eps_decay_fraction);
    const ActionMode explore = ActionMode::eps_greedy(eps);
    {
      auto policy = JointPolicy::compose(learner.online, explore,
                                         group.tm_net, ActionMode::greedy(),
                                         env.n_agents(), env.n_ego());
      Episode ep = rollout(env, policy, rng, config.frame_stack);
      report.steps += static_cast<std::int64_t>(ep.length());
      xp_buffer.add(std::move(ep));
    }
    if (config.use_self_play) {
      auto policy = JointPolicy::compose(learner.online, explore,
                                         partner.online, explore,
                                         env.n_agents(), env.n_ego());
      Episode ep = rollout(env, policy, rng, config.frame_stack);
      report.steps += static_cast<std::int64_t>(ep.length());
      sp_buffer.add(std::move(ep));
    }

    for (int u = 0; u < config.updates_per_round; ++u) {
      const auto xp_batch =
          config.method == EgoMethod::kClear
              ? clear_batch(xp_buffer, ego.rehearsal, config.batch_size, rng)
              : xp_buffer.sample(config.batch_size, rng);
      const TdMember xp_members[] = {
          {&learner.online, &learner.target, ego_slots}};
      TdResult xp = td_loss_and_grad(xp_members, xp_batch, config.gamma, 1.0);
      NetGrad g = std::move(xp.grads[0]);
      report.last_loss = xp.loss;

      if (config.use_self_play) {
        const auto sp_batch = sp_buffer.sample(config.batch_size, rng);
        const TdMember sp_members[] = {
            {&learner.online, &learner.target, ego_slots},
            {&partner.online, &partner.target, tm_slots}};
        TdResult sp = td_loss_and_grad(sp_members, sp_batch, config.gamma, 1.0);
        g.add_scaled(sp.grads[0], 1.0);
        partner.apply(sp.grads[1]);
      }
      if (regularize) {
        const RegResult reg =
            reg_loss(learner.online.backbone, ego.snapshots, config.reg_p);
        for (std::size_t i = 0; i < g.backbone.size(); ++i) {
          g.backbone[i] += config.alpha_reg * reg.grad[i];
        }
      }
      if (config.method == EgoMethod::kEwc) {
        add_ewc_penalty(g, learner.online, ego, config.ewc_mu);
      }
      learner.apply(g);
    }
  }

  const QNet& trained = learner.online;
  if (config.method == EgoMethod::kMacop) {
    auto policy = JointPolicy::compose(trained, ActionMode::greedy(),
                                       group.tm_net, ActionMode::greedy(),
                                       env.n_agents(), env.n_ego());
    report.new_head_return =
        empirical_return(env, policy, config.expansion_eval_episodes, rng,
                         config.frame_stack)
            .mean;
    for (const ParamStore& old_head : ego.heads) {
      const QNet old{spec, trained.backbone, old_head};
      auto p = JointPolicy::compose(old, ActionMode::greedy(), group.tm_net,
                                    ActionMode::greedy(), env.n_agents(),
                                    env.n_ego());
      report.existing_returns.push_back(
          empirical_return(env, p, config.expansion_eval_episodes, rng,
                           config.frame_stack)
              .mean);
    }
    report.kept = expansion_decision(report.new_head_return,
                                     report.existing_returns, config.lambda);
    ego.backbone = trained.backbone;
    if (report.kept) {
      ego.heads.push_back(trained.head);
      ego.snapshots.push_back(trained.backbone);
      ego.head_origin.push_back(group.id);
    }
    return report;
  }

  if (config.method == EgoMethod::kEwc) {
    NetGrad fisher = NetGrad::zeros_like(trained);
    const double inv = 1.0 / static_cast<double>(config.fisher_batches);
    for (int b = 0; b < config.fisher_batches; ++b) {
      const auto batch = xp_buffer.sample(config.batch_size, rng);
      const TdMember members[] = {
          {&learner.online, &learner.target, ego_slots}};
      const TdResult r = td_loss_and_grad(members, batch, config.gamma, 1.0);
      for (std::size_t i = 0; i < fisher.backbone.size(); ++i) {
        fisher.backbone[i] += inv * r.grads[0].backbone[i] * r.grads[0].backbone[i];
      }
      for (std::size_t i = 0; i < fisher.head.size(); ++i) {
        fisher.head[i] += inv * r.grads[0].head[i] * r.grads[0].head[i];
      }
    }
    if (ego.fisher_backbone.empty()) {
      ego.fisher_backbone = fisher.backbone;
      ego.fisher_head = fisher.head;
    } else {
      for (std::size_t i = 0; i < fisher.backbone.size(); ++i) {
        ego.fisher_backbone[i] += fisher.backbone[i];
      }
      for (std::size_t i = 0; i < fisher.head.size(); ++i) {
        ego.fisher_head[i] += fisher.head[i];
      }
    }
    ego.anchor_backbone = trained.backbone;
    ego.anchor_head = trained.head;
  }
  if (config.method == EgoMethod::kClear) {
    const std::size_t groups = ego.rehearsal.size() + 1;
    const std::size_t share =
        std::max<std::size_t>(1, config.rehearsal_capacity / groups);
    for (auto& buf : ego.rehearsal) buf = shrink(buf, share);
    ego.rehearsal.push_back(shrink(xp_buffer, share));
  }
  ego.backbone = trained.backbone;
  ego.heads = {trained.head};
  ego.snapshots = {trained.backbone};
  ego.head_origin = {group.id};
  report.kept = true;
  return report;
}

std::int64_t train_ego_on_pool(EgoPolicy& ego, const GridEnv& env,
                               std::span<const QNet> teammates,
                               std::int64_t budget,
                               const EgoTrainConfig& config, Rng& rng) {
  require(!teammates.empty(), "teammate pool is empty");
  require(budget > 0, "training budget must be positive");
  require(config.updates_per_round >= 1, "updates_per_round must be >= 1");
  ParamStore head = ego.heads.empty() ? init_params(ego.spec, NetPart::kHead, rng)
                                      : ego.heads.back();
  TrainableNet learner(QNet{ego.spec, ego.backbone, head}, config.lr,
                       config.target_interval);
  ReplayBuffer buffer(config.buffer_capacity);
  const std::vector<int> ego_slots = slot_range(0, env.n_ego());
  std::int64_t steps = 0;
  while (steps <= budget) {
    const double eps = epsilon_schedule(steps, budget, config.eps_start,
                                        config.eps_end,
                                        config.eps_decay_fraction);
    const QNet& tm = teammates[rng.index(teammates.size())];
    auto policy = JointPolicy::compose(learner.online,
                                       ActionMode::eps_greedy(eps), tm,
                                       ActionMode::greedy(), env.n_agents(),
                                       env.n_ego());
    Episode ep = rollout(env, policy, rng, config.frame_stack);
    steps += static_cast<std::int64_t>(ep.length());
    buffer.add(std::move(ep));
    for (int u = 0; u < config.updates_per_round; ++u) {
      const auto batch = buffer.sample(config.batch_size, rng);
      const TdMember members[] = {
          {&learner.online, &learner.target, ego_slots}};
      TdResult r = td_loss_and_grad(members, batch, config.gamma, 1.0);
      learner.apply(r.grads[0]);
    }
  }
  ego.backbone = learner.online.backbone;
  ego.heads = {learner.online.head};
  ego.snapshots = {learner.online.backbone};
  ego.head_origin = {-1};
  return steps;
}

}  // namespace macop
