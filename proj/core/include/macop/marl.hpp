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

#ifndef MACOP_MARL_HPP_
#define MACOP_MARL_HPP_

// Joint-policy rollouts, episodic replay and value-decomposition (VDN)
// temporal-difference learning with per-agent parameter sharing.

#include <cstddef>
#include <cstdint>
#include <deque>
#include <span>
#include <utility>
#include <vector>

#include "macop/approximator.hpp"
#include "macop/environment.hpp"
#include "macop/rng.hpp"

namespace macop {

// A Q-network: one backbone plus the head currently used for decisions.
struct QNet {
  NetSpec spec;
  ParamStore backbone;
  ParamStore head;

  static QNet random(const NetSpec& spec, Rng& rng);
  std::vector<double> q_values(std::span<const double> input) const;
  bool operator==(const QNet&) const = default;
};

struct ActionMode {
  enum class Kind { kGreedy, kEpsGreedy, kSoftmax };
  Kind kind = Kind::kGreedy;
  double epsilon = 0.0;
  double temperature = 1.0;

  static ActionMode greedy() { return {}; }
  static ActionMode eps_greedy(double eps) {
    return {Kind::kEpsGreedy, eps, 1.0};
  }
  static ActionMode softmax(double temperature) {
    return {Kind::kSoftmax, 0.0, temperature};
  }
};

// Greedy ties resolve to the lowest index. Throws on empty or non-finite
// q-values.
int select_action(std::span<const double> q_values, const ActionMode& mode,
                  Rng& rng);

// Which network drives one agent slot. Networks are borrowed, not owned.
struct SlotPolicy {
  const QNet* net = nullptr;
  ActionMode mode;
};

// Slots 0..m-1 are the controllable (ego) agents, m..n-1 the teammates.
struct JointPolicy {
  std::vector<SlotPolicy> slots;

  static JointPolicy compose(const QNet& ego, ActionMode ego_mode,
                             const QNet& teammate, ActionMode tm_mode,
                             int n_agents, int n_ego);
  void validate(int n_agents) const;
};

// Per-agent network inputs are the last `frame_stack` observations,
// zero-padded at the start of an episode.
struct Episode {
  std::size_t n_agents = 0;
  std::size_t input_dim = 0;
  // inputs[t] holds n_agents * input_dim values for timestep t; there are
  // length()+1 entries (the last one is the final observation).
  std::vector<std::vector<double>> inputs;
  std::vector<std::vector<int>> actions;
  std::vector<double> rewards;
  bool terminated = false;
  double return_undiscounted = 0.0;
  std::uint64_t seed = 0;

  std::size_t length() const { return rewards.size(); }
  std::span<const double> agent_input(std::size_t t, std::size_t agent) const {
    return {inputs[t].data() + agent * input_dim, input_dim};
  }
};

class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity = 512);

  void add(Episode episode);
  // Uniform sample of min(batch, size) distinct episodes.
  std::vector<const Episode*> sample(std::size_t batch, Rng& rng) const;
  std::size_t size() const { return episodes_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return episodes_.empty(); }
  const Episode& at(std::size_t i) const { return episodes_[i]; }
  void clear() { episodes_.clear(); }

 private:
  std::size_t capacity_;
  std::deque<Episode> episodes_;
};

std::size_t network_input_dim(const GridEnv& env, int frame_stack);

Episode rollout(const GridEnv& env, const JointPolicy& policy, Rng& rng,
                int frame_stack = 1);

struct ReturnStats {
  double mean = 0.0;
  double std = 0.0;
};

// Mean and population std of undiscounted returns over n episodes. Every
// slot is forced to greedy execution.
ReturnStats empirical_return(const GridEnv& env, const JointPolicy& policy,
                             int n_episodes, Rng& rng, int frame_stack = 1);

// Linear decay from `start` to `end` over the first `decay_fraction` of the
// budget, flat afterwards.
double epsilon_schedule(std::int64_t steps_done, std::int64_t budget,
                        double start = 1.0, double end = 0.05,
                        double decay_fraction = 0.5);

// One network taking part in a VDN update and the agent slots it controls.
// Only the listed slots enter the summed joint value.
struct TdMember {
  const QNet* online = nullptr;
  const QNet* target = nullptr;
  std::vector<int> slots;
};

struct NetGrad {
  ParamStore backbone;
  ParamStore head;

  static NetGrad zeros_like(const QNet& net);
  void add_scaled(const NetGrad& other, double scale);
  void scale(double s);
};

struct TdResult {
  double loss = 0.0;
  std::vector<NetGrad> grads;  // one per member
  // Summed joint Q(s, a) per transition, batch order.
  std::vector<double> joint_q;
};

// Squared TD error of the summed per-agent values, averaged over every
// transition in the batch:
//   y = reward_sign * r + gamma * (1 - terminal) * sum_i max_a Q_i^target
TdResult td_loss_and_grad(std::span<const TdMember> members,
                          std::span<const Episode* const> batch, double gamma,
                          double reward_sign);

// A trainable network with its target copy and optimizer moments.
struct TrainableNet {
  QNet online;
  QNet target;
  OptState opt_backbone;
  OptState opt_head;
  std::int64_t updates = 0;
  std::int64_t target_interval = 200;
  bool train_backbone = true;
  bool train_head = true;

  TrainableNet() = default;
  TrainableNet(QNet net, double lr, std::int64_t target_interval);
  // Applies one optimizer step and refreshes the target every
  // target_interval calls.
  void apply(const NetGrad& grad);
};

struct VdnParticipant {
  TrainableNet* net = nullptr;
  std::vector<int> slots;
};

// Loss, one optimizer step on every participant, target refresh.
double vdn_td_update(std::span<const VdnParticipant> participants,
                     std::span<const Episode* const> batch, double gamma,
                     double reward_sign);

}  // namespace macop

#endif  // MACOP_MARL_HPP_
