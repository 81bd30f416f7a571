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

#ifndef MACOP_CONFIG_HPP_
#define MACOP_CONFIG_HPP_

// Run configuration. Files are JSON objects; a "profile" key picks the
// base values ("desk" or "full") and every other key overrides one field.
// Unknown keys are rejected.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "macop/approximator.hpp"
#include "macop/ego.hpp"
#include "macop/environment.hpp"
#include "macop/teammate.hpp"

namespace macop {

struct MacopConfig {
  std::string profile = "desk";
  std::string env = "lbf4";

  // Population and loop.
  int n_p = 4;
  double alpha_div = 0.1;
  double alpha_incom = 0.1;
  double alpha_reg = 10.0;
  double reg_p = 2.0;
  double lambda = 0.0;
  double xi = 0.5;
  int n_min = 3;
  int n_max = 6;
  std::int64_t t_tm = 20000;  // per population member
  std::int64_t t_ego = 10000;
  std::int64_t pretrain_steps = 20000;

  // Learner.
  double gamma = 0.99;
  double temperature = 1.0;
  std::size_t batch_size = 8;
  std::size_t buffer_capacity = 512;
  double lr = 5e-4;
  std::int64_t target_interval = 25;
  int updates_per_round = 4;
  int frame_stack = 1;
  double eps_start = 1.0;
  double eps_end = 0.05;
  double eps_decay_fraction = 0.5;
  std::size_t jsd_max_obs = 256;
  std::vector<std::size_t> hidden_dims{32, 32};
  std::vector<std::size_t> head_hidden_dims{};
  bool ego_self_play = true;

  // Evaluation.
  int eval_episodes = 32;
  int select_episodes = 8;
  int meta_episodes_per_head = 4;
  int expansion_eval_episodes = 8;

  // Baselines.
  int baseline_population = 6;
  std::int64_t baseline_population_steps = 40000;  // per member
  std::int64_t baseline_ego_steps = 30000;
  double ewc_mu = 1.0;
  int fisher_batches = 8;
  std::size_t rehearsal_capacity = 512;

  void validate() const;
  bool operator==(const MacopConfig&) const = default;
};

// Base values of a named profile.
MacopConfig profile_config(const std::string& profile);

MacopConfig parse_config(const std::string& json_text);
MacopConfig load_config(const std::filesystem::path& path);
std::string config_to_json(const MacopConfig& config);

NetSpec net_spec_for(const MacopConfig& config, const GridEnv& env);
TeammateTrainConfig teammate_config(const MacopConfig& config);
EgoTrainConfig ego_config(const MacopConfig& config, EgoMethod method);

}  // namespace macop

#endif  // MACOP_CONFIG_HPP_
