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

#include "macop/marl.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "macop/error.hpp"

namespace macop {

QNet QNet::random(const NetSpec& spec, Rng& rng) {
  QNet net;
  net.spec = spec;
  net.backbone = init_params(spec, NetPart::kBackbone, rng);
  net.head = init_params(spec, NetPart::kHead, rng);
  return net;
}

std::vector<double> QNet::q_values(std::span<const double> input) const {
  return forward(spec, backbone, head, input);
}

int select_action(std::span<const double> q_values, const ActionMode& mode,
                  Rng& rng) {
  require(!q_values.empty(), "select_action needs at least one q-value");
  for (double q : q_values) {
    if (!std::isfinite(q)) throw ContractError("non-finite q-value");
  }
  auto argmax = [&] {
    std::size_t best = 0;
    for (std::size_t i = 1; i < q_values.size(); ++i) {
      if (q_values[i] > q_values[best]) best = i;
    }
    return static_cast<int>(best);
  };
  switch (mode.kind) {
    case ActionMode::Kind::kGreedy:
      return argmax();
    case ActionMode::Kind::kEpsGreedy:
      if (rng.uniform() < mode.epsilon) {
        return static_cast<int>(rng.index(q_values.size()));
      }
      return argmax();
    case ActionMode::Kind::kSoftmax: {
      require(mode.temperature > 0.0, "softmax temperature must be > 0");
      const double top = *std::max_element(q_values.begin(), q_values.end());
      std::vector<double> w(q_values.size());
      double total = 0.0;
      for (std::size_t i = 0; i < w.size(); ++i) {
        w[i] = std::exp((q_values[i] - top) / mode.temperature);
        total += w[i];
      }
      double u = rng.uniform() * total;
      for (std::size_t i = 0; i < w.size(); ++i) {
        if (u < w[i]) return static_cast<int>(i);
        u -= w[i];
      }
      return argmax();
    }
  }
  return argmax();
}

JointPolicy JointPolicy::compose(const QNet& ego, ActionMode ego_mode,
                                 const QNet& teammate, ActionMode tm_mode,
                                 int n_agents, int n_ego) {
  JointPolicy p;
  for (int i = 0; i < n_agents; ++i) {
    if (i < n_ego) {
      p.slots.push_back({&ego, ego_mode});
    } else {
      p.slots.push_back({&teammate, tm_mode});
    }
  }
  return p;
}

void JointPolicy::validate(int n_agents) const {
  require(static_cast<int>(slots.size()) == n_agents,
          "joint policy must assign every agent slot exactly once");
  for (const auto& s : slots) require(s.net != nullptr, "unassigned slot");
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  require(capacity >= 1, "replay capacity must be >= 1");
}

void ReplayBuffer::add(Episode episode) {
  if (episodes_.size() == capacity_) episodes_.pop_front();
  episodes_.push_back(std::move(episode));
}

std::vector<const Episode*> ReplayBuffer::sample(std::size_t batch,
                                                 Rng& rng) const {
  const std::size_t n = std::min(batch, episodes_.size());
  std::vector<std::size_t> idx(episodes_.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::vector<const Episode*> out;
  out.reserve(n);
  // Partial Fisher-Yates.
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = i + rng.index(idx.size() - i);
    std::swap(idx[i], idx[j]);
    out.push_back(&episodes_[idx[i]]);
  }
  return out;
}

std::size_t network_input_dim(const GridEnv& env, int frame_stack) {
  require(frame_stack >= 1, "frame_stack must be >= 1");
  return env.obs_dim() * static_cast<std::size_t>(frame_stack);
}

namespace {

void push_stacked(const JointObservation& obs,
                  std::vector<std::deque<std::vector<double>>>& history,
                  int frame_stack, std::size_t obs_dim,
                  std::vector<double>& out) {
  out.clear();
  for (std::size_t i = 0; i < obs.size(); ++i) {
    auto& h = history[i];
    h.push_back(obs[i]);
    while (static_cast<int>(h.size()) > frame_stack) h.pop_front();
    const std::size_t pad = static_cast<std::size_t>(frame_stack) - h.size();
    out.insert(out.end(), pad * obs_dim, 0.0);
    for (const auto& o : h) out.insert(out.end(), o.begin(), o.end());
  }
}

}  // namespace

Episode rollout(const GridEnv& env, const JointPolicy& policy, Rng& rng,
                int frame_stack) {
  policy.validate(env.n_agents());
  const std::size_t n = static_cast<std::size_t>(env.n_agents());
  const std::size_t in_dim = network_input_dim(env, frame_stack);
  for (const auto& s : policy.slots) {
    require(s.net->spec.input_dim == in_dim,
            "network input_dim does not match the environment observation");
  }
  Episode ep;
  ep.n_agents = n;
  ep.input_dim = in_dim;
  ep.seed = rng.next_u64();
  Rng ep_rng(ep.seed);

  auto [state, obs] = env.reset(ep_rng);
  std::vector<std::deque<std::vector<double>>> history(n);
  std::vector<double> stacked;
  push_stacked(obs, history, frame_stack, env.obs_dim(), stacked);
  ep.inputs.push_back(stacked);

  bool done = false;
  while (!done) {
    std::vector<int> joint(n);
    const auto& current = ep.inputs.back();
    for (std::size_t i = 0; i < n; ++i) {
      std::span<const double> input(current.data() + i * in_dim, in_dim);
      const auto q = policy.slots[i].net->q_values(input);
      joint[i] = select_action(q, policy.slots[i].mode, ep_rng);
    }
    StepResult r = env.step(state, joint, ep_rng);
    push_stacked(r.next_obs, history, frame_stack, env.obs_dim(), stacked);
    ep.inputs.push_back(stacked);
    ep.actions.push_back(std::move(joint));
    ep.rewards.push_back(r.reward);
    ep.return_undiscounted += r.reward;
    done = r.done;
  }
  ep.terminated = true;
  return ep;
}

ReturnStats empirical_return(const GridEnv& env, const JointPolicy& policy,
                             int n_episodes, Rng& rng, int frame_stack) {
  require(n_episodes >= 1, "n_episodes must be >= 1");
  JointPolicy greedy = policy;
  for (auto& s : greedy.slots) s.mode = ActionMode::greedy();
  std::vector<double> returns;
  returns.reserve(n_episodes);
  for (int e = 0; e < n_episodes; ++e) {
    returns.push_back(rollout(env, greedy, rng, frame_stack).return_undiscounted);
  }
  ReturnStats out;
  for (double r : returns) out.mean += r;
  out.mean /= n_episodes;
  double var = 0.0;
  for (double r : returns) var += (r - out.mean) * (r - out.mean);
  out.std = std::sqrt(var / n_episodes);
  return out;
}

double epsilon_schedule(std::int64_t steps_done, std::int64_t budget,
                        double start, double end, double decay_fraction) {
  const double horizon = std::max(1.0, decay_fraction * static_cast<double>(budget));
  const double frac = static_cast<double>(steps_done) / horizon;
  if (frac >= 1.0) return end;
  return start + (end - start) * frac;
}

NetGrad NetGrad::zeros_like(const QNet& net) {
  return {ParamStore(net.backbone.size()), ParamStore(net.head.size())};
}

void NetGrad::add_scaled(const NetGrad& other, double scale) {
  require(other.backbone.size() == backbone.size() &&
              other.head.size() == head.size(),
          "gradient shape mismatch");
  for (std::size_t i = 0; i < backbone.size(); ++i) {
    backbone.values[i] += scale * other.backbone.values[i];
  }
  for (std::size_t i = 0; i < head.size(); ++i) {
    head.values[i] += scale * other.head.values[i];
  }
}

void NetGrad::scale(double s) {
  for (double& v : backbone.values) v *= s;
  for (double& v : head.values) v *= s;
}

TdResult td_loss_and_grad(std::span<const TdMember> members,
                          std::span<const Episode* const> batch, double gamma,
                          double reward_sign) {
  require(!batch.empty(), "TD update needs a non-empty batch");
  require(!members.empty(), "TD update needs at least one member");

  std::size_t transitions = 0;
  for (const Episode* ep : batch) transitions += ep->length();
  require(transitions > 0, "TD batch holds no transitions");

  std::vector<double> joint_q(transitions, 0.0);
  std::vector<double> target(transitions, 0.0);
  {
    std::size_t p = 0;
    for (const Episode* ep : batch) {
      for (std::size_t t = 0; t < ep->length(); ++t, ++p) {
        target[p] = reward_sign * ep->rewards[t];
      }
    }
  }

  struct MemberPass {
    ForwardCache cache;
    Matrix q;
    std::vector<int> actions;
  };
  std::vector<MemberPass> passes(members.size());

  for (std::size_t m = 0; m < members.size(); ++m) {
    const TdMember& mem = members[m];
    require(mem.online != nullptr && mem.target != nullptr,
            "TD member without networks");
    require(!mem.slots.empty(), "TD member without slots");
    const std::size_t in_dim = mem.online->spec.input_dim;
    const std::size_t rows = transitions * mem.slots.size();
    Matrix x(rows, in_dim);
    Matrix x_next(rows, in_dim);
    auto& pass = passes[m];
    pass.actions.resize(rows);
    std::size_t r = 0;
    for (const Episode* ep : batch) {
      require(ep->input_dim == in_dim, "episode input width mismatch");
      for (std::size_t t = 0; t < ep->length(); ++t) {
        for (int slot : mem.slots) {
          require(slot >= 0 && static_cast<std::size_t>(slot) < ep->n_agents,
                  "slot index out of range");
          auto cur = ep->agent_input(t, slot);
          auto nxt = ep->agent_input(t + 1, slot);
          x.row(r) = Eigen::Map<const Eigen::RowVectorXd>(cur.data(), in_dim);
          x_next.row(r) =
              Eigen::Map<const Eigen::RowVectorXd>(nxt.data(), in_dim);
          pass.actions[r] = ep->actions[t][slot];
          ++r;
        }
      }
    }
    pass.q = forward_batch(mem.online->spec, mem.online->backbone,
                           mem.online->head, x, &pass.cache);
    const Matrix q_next = forward_batch(mem.target->spec, mem.target->backbone,
                                        mem.target->head, x_next);
    const Eigen::VectorXd next_max = q_next.rowwise().maxCoeff();

    std::size_t p = 0;
    r = 0;
    for (const Episode* ep : batch) {
      for (std::size_t t = 0; t < ep->length(); ++t, ++p) {
        const bool terminal = ep->terminated && t + 1 == ep->length();
        for (std::size_t s = 0; s < mem.slots.size(); ++s, ++r) {
          joint_q[p] += pass.q(static_cast<Eigen::Index>(r), pass.actions[r]);
          if (!terminal) target[p] += gamma * next_max(static_cast<Eigen::Index>(r));
        }
      }
    }
  }

  TdResult out;
  const double inv_n = 1.0 / static_cast<double>(transitions);
  std::vector<double> djoint(transitions);
  for (std::size_t p = 0; p < transitions; ++p) {
    const double err = joint_q[p] - target[p];
    out.loss += err * err * inv_n;
    djoint[p] = 2.0 * err * inv_n;
  }

  for (std::size_t m = 0; m < members.size(); ++m) {
    const TdMember& mem = members[m];
    auto& pass = passes[m];
    Matrix upstream = Matrix::Zero(pass.q.rows(), pass.q.cols());
    const std::size_t s_count = mem.slots.size();
    for (Eigen::Index r = 0; r < upstream.rows(); ++r) {
      upstream(r, pass.actions[r]) = djoint[static_cast<std::size_t>(r) / s_count];
    }
    NetGrad g = NetGrad::zeros_like(*mem.online);
    backward_batch(mem.online->spec, mem.online->backbone, mem.online->head,
                   pass.cache, upstream, g.backbone, g.head);
    out.grads.push_back(std::move(g));
  }
  out.joint_q = std::move(joint_q);
  return out;
}

TrainableNet::TrainableNet(QNet net, double lr, std::int64_t interval)
    : online(net), target(net), target_interval(interval) {
  opt_backbone = OptState::for_params(online.backbone, lr);
  opt_head = OptState::for_params(online.head, lr);
  require(interval >= 1, "target_update_interval must be >= 1");
}

void TrainableNet::apply(const NetGrad& grad) {
  if (train_backbone) optimizer_step(online.backbone, grad.backbone, opt_backbone);
  if (train_head) optimizer_step(online.head, grad.head, opt_head);
  updates += 1;
  if (updates % target_interval == 0) target = online;
}

double vdn_td_update(std::span<const VdnParticipant> participants,
                     std::span<const Episode* const> batch, double gamma,
                     double reward_sign) {
  std::vector<TdMember> members;
  for (const auto& p : participants) {
    require(p.net != nullptr, "participant without network");
    members.push_back({&p.net->online, &p.net->target, p.slots});
  }
  TdResult r = td_loss_and_grad(members, batch, gamma, reward_sign);
  for (std::size_t i = 0; i < participants.size(); ++i) {
    participants[i].net->apply(r.grads[i]);
  }
  return r.loss;
}

}  // namespace macop
