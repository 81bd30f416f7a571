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

#ifndef MACOP_EGO_HPP_
#define MACOP_EGO_HPP_

// The controllable agents: a shared backbone with a growing list of frozen
// output heads, trained against one teammate group at a time.

#include <cstdint>
#include <vector>

#include "macop/approximator.hpp"
#include "macop/environment.hpp"
#include "macop/marl.hpp"
#include "macop/rng.hpp"
#include "macop/teammate.hpp"

namespace macop {

// How the ego absorbs a new teammate group.
enum class EgoMethod {
  kMacop,       // fresh head per group, regularized backbone, expansion test
  kFinetune,    // one head, every parameter tuned freely
  kSingleHead,  // one head, backbone regularized toward the last snapshot
  kEwc,         // one head, diagonal-Fisher quadratic penalty
  kClear,       // one head, rehearsal of past cross-play episodes
};

const char* ego_method_name(EgoMethod m);
EgoMethod parse_ego_method(const std::string& name);

struct EgoPolicy {
  NetSpec spec;
  ParamStore backbone;
  std::vector<ParamStore> heads;      // frozen once retained
  std::vector<ParamStore> snapshots;  // backbone copy per retained head
  std::vector<std::int64_t> head_origin;  // group that triggered retention

  // Consolidation state for the single-head baselines.
  ParamStore fisher_backbone;
  ParamStore fisher_head;
  ParamStore anchor_backbone;
  ParamStore anchor_head;
  std::vector<ReplayBuffer> rehearsal;

  static EgoPolicy create(const NetSpec& spec, Rng& rng);
  std::size_t head_count() const { return heads.size(); }
  QNet compose(std::size_t head) const;
  // One network per head, sharing the current backbone.
  std::vector<QNet> compose_all() const;
};

struct RegResult {
  double value = 0.0;
  ParamStore grad;
};

// (1/m) sum_i ||phi - phi_i||_p; zero with an empty snapshot list.
RegResult reg_loss(const ParamStore& backbone,
                   const std::vector<ParamStore>& snapshots, double p);

// Keep the new head when nothing exists yet, when the best existing return
// is not positive, or when it beats that return by a relative margin lambda.
bool expansion_decision(double r_new, const std::vector<double>& r_existing,
                        double lambda);

struct HeadEvalReport {
  std::vector<double> per_head_mean;
  int episodes_per_head = 0;
  std::size_t chosen = 0;
};

// Round-robin greedy evaluation of every head with the group's teammates.
HeadEvalReport meta_select_head(const GridEnv& env, const EgoPolicy& ego,
                                const QNet& teammate, int episodes_per_head,
                                Rng& rng, int frame_stack = 1);

// The network the ego uses with a given teammate: the meta-selected head,
// or a uniformly random one when `random_head` is set.
QNet ego_for_teammate(const GridEnv& env, const EgoPolicy& ego,
                      const QNet& teammate, int episodes_per_head,
                      bool random_head, Rng& rng, int frame_stack = 1);

struct EgoTrainConfig {
  EgoMethod method = EgoMethod::kMacop;
  double alpha_reg = 10.0;
  double reg_p = 2.0;
  double lambda = 0.0;
  double ewc_mu = 1.0;
  int fisher_batches = 8;
  std::size_t rehearsal_capacity = 512;
  int expansion_eval_episodes = 8;
  // Include self-play with a trainable complementary teammate.
  bool use_self_play = true;
  double gamma = 0.99;
  std::size_t batch_size = 32;
  std::size_t buffer_capacity = 512;
  double lr = 5e-4;
  std::int64_t target_interval = 200;
  int updates_per_round = 1;
  int frame_stack = 1;
  double eps_start = 1.0;
  double eps_end = 0.05;
  double eps_decay_fraction = 0.5;
};

struct ContinualReport {
  std::int64_t steps = 0;
  bool kept = false;
  double new_head_return = 0.0;
  std::vector<double> existing_returns;
  double last_loss = 0.0;
};

// Trains the ego against one frozen teammate group for `budget` env steps.
ContinualReport continual_train(EgoPolicy& ego, const GridEnv& env,
                                const TeammateGroup& group,
                                std::int64_t budget,
                                const EgoTrainConfig& config, Rng& rng);

// Best-response training of a single-head ego against a pool of frozen
// teammates, one uniformly drawn partner per episode.
std::int64_t train_ego_on_pool(EgoPolicy& ego, const GridEnv& env,
                               std::span<const QNet> teammates,
                               std::int64_t budget,
                               const EgoTrainConfig& config, Rng& rng);

}  // namespace macop

#endif  // MACOP_EGO_HPP_
