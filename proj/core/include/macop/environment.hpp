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

#ifndef MACOP_ENVIRONMENT_HPP_
#define MACOP_ENVIRONMENT_HPP_

// Grid-world cooperative scenarios with a shared team reward. Four
// scenario families are provided: level-based foraging with one food
// (lbf1) or four corner foods (lbf4), grid predator-prey and grid
// cooperative navigation.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "macop/rng.hpp"

namespace macop {

enum class Scenario { kLbf1, kLbf4, kGridPp, kGridCn };
enum class PreyBehavior { kRandomWalk, kFleeNearest };

inline constexpr int kNumActions = 5;
enum Action : int { kUp = 0, kDown = 1, kLeft = 2, kRight = 3, kStay = 4 };

struct Cell {
  int x = 0;
  int y = 0;
  bool operator==(const Cell&) const = default;
};

inline int manhattan(Cell a, Cell b) {
  return (a.x > b.x ? a.x - b.x : b.x - a.x) +
         (a.y > b.y ? a.y - b.y : b.y - a.y);
}

struct EntitySpec {
  Cell cell;
  int level = 1;  // food level; unused for preys and landmarks
};

struct EnvSpec {
  Scenario scenario = Scenario::kLbf1;
  std::string name = "lbf1";
  int width = 5;
  int height = 5;
  int n_agents = 2;
  int n_ego = 1;
  int horizon = 15;
  std::vector<Cell> agent_spawn_cells;
  std::vector<int> agent_levels;
  std::vector<EntitySpec> entities;
  PreyBehavior prey_behavior = PreyBehavior::kRandomWalk;
  // lbf1: earlier timesteps with the two agents within one cell of each
  // other that must precede a collection.
  int required_adjacency = 2;
  double collision_penalty = 0.1;

  void validate() const;
};

// Built-in scenario presets: lbf1, lbf4, pp1, pp2, cn2, cn3.
EnvSpec scenario_preset(const std::string& name);
std::vector<std::string> scenario_names();

struct EntityState {
  Cell cell;
  bool alive = true;
  int level = 1;
};

struct EnvState {
  std::vector<Cell> agent_cells;
  std::vector<EntityState> entities;
  int step = 0;
  int adjacency_count = 0;
  bool terminal = false;

  bool operator==(const EnvState& other) const;
};

// Per-agent flat observation vectors.
using JointObservation = std::vector<std::vector<double>>;
using JointAction = std::vector<int>;

struct StepResult {
  JointObservation next_obs;
  double reward = 0.0;
  bool done = false;
};

class GridEnv {
 public:
  explicit GridEnv(EnvSpec spec);

  const EnvSpec& spec() const { return spec_; }
  std::size_t obs_dim() const { return obs_dim_; }
  int n_agents() const { return spec_.n_agents; }
  int n_ego() const { return spec_.n_ego; }
  int horizon() const { return spec_.horizon; }
  // Per-step reward range.
  double min_step_reward() const;
  double max_step_reward() const;

  EnvState reset_state(Rng& rng) const;
  std::pair<EnvState, JointObservation> reset(Rng& rng) const;
  // Advances `state` in place. Throws ContractError on a terminal state or
  // malformed joint action.
  StepResult step(EnvState& state, std::span<const int> joint_action,
                  Rng& rng) const;
  JointObservation observe(const EnvState& state) const;

 private:
  void move_agents(EnvState& state, std::span<const int> actions,
                   int& conflicts) const;
  void move_preys(EnvState& state, Rng& rng) const;
  bool blocked_for_agent(const EnvState& state, Cell c) const;
  bool in_grid(Cell c) const;

  EnvSpec spec_;
  std::size_t obs_dim_ = 0;
};

GridEnv make_env(const EnvSpec& spec);

Cell apply_action(Cell c, int action);

}  // namespace macop

#endif  // MACOP_ENVIRONMENT_HPP_
