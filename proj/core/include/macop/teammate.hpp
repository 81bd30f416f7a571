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

#ifndef MACOP_TEAMMATE_HPP_
#define MACOP_TEAMMATE_HPP_

// Teammate groups, the population container, and the policy-space
// measures used to keep a population diverse: the Jensen-Shannon
// divergence of softmax policies and the trajectory-ratio dissimilarity.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "macop/approximator.hpp"
#include "macop/environment.hpp"
#include "macop/marl.hpp"

namespace macop {

struct TeammateGroup {
  std::int64_t id = 0;
  std::optional<std::int64_t> lineage;
  int generation = 0;
  QNet tm_net;        // drives the teammate slots
  QNet comp_ego_net;  // complementary partner in the ego slots
  ReplayBuffer sp_buffer{512};
  ReplayBuffer xp_buffer{512};
  std::optional<ReturnStats> sp_return_cache;
  std::optional<ReturnStats> xp_return_cache;

  void invalidate_caches() {
    sp_return_cache.reset();
    xp_return_cache.reset();
  }
};

struct Population {
  std::vector<TeammateGroup> members;
  int generation = 0;

  std::size_t size() const { return members.size(); }
};

// Hands out ids that are unique within a run.
class IdCounter {
 public:
  explicit IdCounter(std::int64_t next = 1) : next_(next) {}
  std::int64_t next() { return next_++; }
  std::int64_t peek() const { return next_; }

 private:
  std::int64_t next_;
};

struct JsdResult {
  double value = 0.0;
  // d value / d q, one (observations x actions) matrix per group.
  std::vector<Matrix> grad_q;
};

// Mean over rows of (1/n) sum_i KL(pi_i || mean_k pi_k) with
// pi_i = softmax(q_i / temperature), natural log, exact gradients.
JsdResult jsd_diversity(std::span<const Matrix> per_group_q,
                        double temperature);

// max over trajectories of |1 - prod_t pi_i(a_t|tau_t) / pi_j(a_t|tau_t)|
// across the teammate slots (n_ego .. n_agents-1). Returns +infinity when
// a taken action has zero probability under group j.
double dissimilarity(const QNet& tm_i, const QNet& tm_j,
                     std::span<const Episode> trajectories, int n_ego,
                     double temperature);
double dissimilarity(const TeammateGroup& group_i,
                     const TeammateGroup& group_j,
                     std::span<const Episode> trajectories, int n_ego,
                     double temperature);

// How teammate parameters are pushed apart from each other.
enum class DiversityMode {
  kJsd,   // ascend the population Jensen-Shannon divergence
  kLipo,  // descend the return of randomly paired groups
};

struct TeammateTrainConfig {
  double alpha_div = 0.1;
  double alpha_incom = 0.1;
  DiversityMode diversity = DiversityMode::kJsd;
  double gamma = 0.99;
  double temperature = 1.0;
  std::size_t batch_size = 32;
  std::size_t buffer_capacity = 512;
  double lr = 5e-4;
  std::int64_t target_interval = 200;
  int updates_per_round = 1;
  int frame_stack = 1;
  double eps_start = 1.0;
  double eps_end = 0.05;
  double eps_decay_fraction = 0.5;
  // Cap on the number of observations entering one divergence estimate.
  std::size_t jsd_max_obs = 256;
};

// Fresh randomly initialized group.
TeammateGroup make_group(const NetSpec& spec, std::int64_t id,
                         std::size_t buffer_capacity, Rng& rng);

// Shared training engine: rounds of rollouts for every member (a
// cross-play episode against `ego_nets[i]` when given and alpha_incom > 0,
// then a self-play episode with the complementary partner) followed by
// updates_per_round updates per member. `budget` counts env steps per member; training
// stops once the population as a whole has consumed more than
// budget * size steps. Returns the total steps consumed.
std::int64_t train_population(Population& population, const GridEnv& env,
                              std::span<const QNet> ego_nets,
                              std::int64_t budget,
                              const TeammateTrainConfig& config, Rng& rng);

// n_p randomly initialized groups, pre-trained without the
// incompatibility term.
Population init_population(const GridEnv& env, const NetSpec& spec, int n_p,
                           std::int64_t pretrain_steps,
                           const TeammateTrainConfig& config, IdCounter& ids,
                           Rng& rng);

// Deep copies of the parents with fresh ids and lineage, trained against
// the frozen ego networks (one per member). Parents are untouched.
Population mutate(const Population& parents, const GridEnv& env,
                  std::span<const QNet> ego_nets, std::int64_t t_tm,
                  const TeammateTrainConfig& config, IdCounter& ids,
                  Rng& rng);

struct SelectionCandidate {
  std::int64_t id = 0;
  double sp_return = 0.0;
  double xp_return = 0.0;
};

// Removes floor(n_p/2) lowest self-play candidates, then ceil(n_p/2)
// highest cross-play candidates from the rest; ties remove the lower id
// first. Returns the indices of the n_p survivors in pool order.
std::vector<std::size_t> select_survivors(
    std::span<const SelectionCandidate> pool, std::size_t n_p);

ReturnStats self_play_return(const GridEnv& env, const TeammateGroup& group,
                             int n_episodes, Rng& rng, int frame_stack);
ReturnStats cross_play_return(const GridEnv& env, const QNet& ego,
                              const TeammateGroup& group, int n_episodes,
                              Rng& rng, int frame_stack);

}  // namespace macop

#endif  // MACOP_TEAMMATE_HPP_
