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

#include "macop/environment.hpp"

#include <algorithm>
#include <utility>

#include "macop/error.hpp"

namespace macop {
namespace {

std::vector<Cell> cells(std::initializer_list<std::pair<int, int>> xs) {
  std::vector<Cell> out;
  for (auto [x, y] : xs) out.push_back({x, y});
  return out;
}

std::vector<EntitySpec> entities(std::initializer_list<std::pair<int, int>> xs,
                                 int level) {
  std::vector<EntitySpec> out;
  for (auto [x, y] : xs) out.push_back({{x, y}, level});
  return out;
}

bool is_lbf(Scenario s) {
  return s == Scenario::kLbf1 || s == Scenario::kLbf4;
}

}  // namespace

Cell apply_action(Cell c, int action) {
  switch (action) {
    case kUp:
      return {c.x, c.y - 1};
    case kDown:
      return {c.x, c.y + 1};
    case kLeft:
      return {c.x - 1, c.y};
    case kRight:
      return {c.x + 1, c.y};
    default:
      return c;
  }
}

bool EnvState::operator==(const EnvState& other) const {
  if (agent_cells != other.agent_cells || step != other.step ||
      adjacency_count != other.adjacency_count || terminal != other.terminal ||
      entities.size() != other.entities.size()) {
    return false;
  }
  for (std::size_t i = 0; i < entities.size(); ++i) {
    if (!(entities[i].cell == other.entities[i].cell) ||
        entities[i].alive != other.entities[i].alive ||
        entities[i].level != other.entities[i].level) {
      return false;
    }
  }
  return true;
}

void EnvSpec::validate() const {
  require(width >= 2 && height >= 2, "grid must be at least 2x2");
  require(n_agents >= 1, "need at least one agent");
  require(n_ego >= 1 && n_ego <= n_agents, "n_ego must be in [1, n_agents]");
  require(horizon >= 1, "horizon must be >= 1");
  require(static_cast<int>(agent_spawn_cells.size()) >= n_agents,
          "spawn set smaller than agent count");
  require(static_cast<int>(agent_levels.size()) == n_agents,
          "agent_levels must list one level per agent");
  require(!entities.empty(), "scenario needs at least one entity");
  require(collision_penalty >= 0.0, "collision_penalty must be >= 0");
  auto inside = [&](Cell c) {
    return c.x >= 0 && c.y >= 0 && c.x < width && c.y < height;
  };
  for (Cell c : agent_spawn_cells) require(inside(c), "spawn cell off grid");
  for (const auto& e : entities) {
    require(inside(e.cell), "entity cell off grid");
    require(e.level >= 1, "entity level must be >= 1");
    if (scenario != Scenario::kGridCn) {
      for (Cell c : agent_spawn_cells) {
        require(!(c == e.cell), "spawn cell overlaps a blocking entity");
      }
    }
  }
  if (scenario == Scenario::kGridCn) {
    require(static_cast<int>(entities.size()) == n_agents,
            "cooperative navigation needs one landmark per agent");
  }
}

EnvSpec scenario_preset(const std::string& name) {
  EnvSpec s;
  s.name = name;
  if (name == "lbf1") {
    s.scenario = Scenario::kLbf1;
    s.width = s.height = 5;
    s.n_agents = 2;
    s.n_ego = 1;
    s.horizon = 15;
    s.agent_spawn_cells = cells({{0, 0}, {0, 1}, {1, 0}, {1, 1}});
    s.agent_levels = {1, 1};
    s.entities = entities({{4, 4}}, 2);
  } else if (name == "lbf4") {
    s.scenario = Scenario::kLbf4;
    s.width = s.height = 6;
    s.n_agents = 2;
    s.n_ego = 1;
    s.horizon = 8;
    s.agent_spawn_cells = cells({{2, 2}, {2, 3}, {3, 2}, {3, 3}});
    s.agent_levels = {1, 1};
    s.entities = entities({{0, 0}, {0, 5}, {5, 0}, {5, 5}}, 2);
  } else if (name == "pp1" || name == "pp2") {
    s.scenario = Scenario::kGridPp;
    s.width = s.height = 7;
    s.n_agents = 2;
    s.n_ego = 1;
    s.horizon = 20;
    s.agent_spawn_cells = cells({{3, 3}, {2, 3}, {4, 3}, {3, 2}, {3, 4}});
    s.agent_levels = {1, 1};
    if (name == "pp1") {
      s.prey_behavior = PreyBehavior::kRandomWalk;
      s.entities = entities({{1, 1}, {5, 1}, {3, 6}}, 1);
    } else {
      s.prey_behavior = PreyBehavior::kFleeNearest;
      s.entities =
          entities({{0, 0}, {6, 0}, {0, 6}, {6, 6}, {3, 0}}, 1);
    }
  } else if (name == "cn2" || name == "cn3") {
    s.scenario = Scenario::kGridCn;
    s.width = s.height = 5;
    s.horizon = 10;
    s.collision_penalty = 0.1;
    s.agent_spawn_cells = cells({{2, 2}, {1, 2}, {3, 2}, {2, 1}, {2, 3}});
    if (name == "cn2") {
      s.n_agents = 2;
      s.n_ego = 1;
      s.entities = entities({{0, 2}, {4, 2}}, 1);
    } else {
      s.n_agents = 3;
      s.n_ego = 2;
      s.entities = entities({{0, 0}, {4, 0}, {2, 4}}, 1);
    }
    s.agent_levels.assign(s.n_agents, 1);
  } else {
    throw ContractError("unknown scenario '" + name + "'");
  }
  if (s.scenario != Scenario::kGridCn) s.collision_penalty = 0.0;
  return s;
}

std::vector<std::string> scenario_names() {
  return {"lbf1", "lbf4", "pp1", "pp2", "cn2", "cn3"};
}

GridEnv::GridEnv(EnvSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  const std::size_t n = static_cast<std::size_t>(spec_.n_agents);
  obs_dim_ = 2 * n + 3 * spec_.entities.size() + n;
  if (spec_.scenario == Scenario::kLbf1) obs_dim_ += 1;
}

GridEnv make_env(const EnvSpec& spec) { return GridEnv(spec); }

double GridEnv::min_step_reward() const {
  const double n = spec_.n_agents;
  return -spec_.collision_penalty * n * (n - 1) / 2.0;
}

double GridEnv::max_step_reward() const {
  return static_cast<double>(spec_.entities.size());
}

bool GridEnv::in_grid(Cell c) const {
  return c.x >= 0 && c.y >= 0 && c.x < spec_.width && c.y < spec_.height;
}

bool GridEnv::blocked_for_agent(const EnvState& state, Cell c) const {
  if (!in_grid(c)) return true;
  if (spec_.scenario == Scenario::kGridCn) return false;
  for (const auto& e : state.entities) {
    if (e.alive && e.cell == c) return true;
  }
  return false;
}

EnvState GridEnv::reset_state(Rng& rng) const {
  EnvState s;
  std::vector<Cell> pool = spec_.agent_spawn_cells;
  for (int i = 0; i < spec_.n_agents; ++i) {
    const std::size_t k = rng.index(pool.size());
    s.agent_cells.push_back(pool[k]);
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(k));
  }
  for (const auto& e : spec_.entities) s.entities.push_back({e.cell, true, e.level});
  s.step = 0;
  if (spec_.scenario == Scenario::kLbf1 && spec_.n_agents >= 2 &&
      manhattan(s.agent_cells[0], s.agent_cells[1]) <= 1) {
    s.adjacency_count = 1;
  }
  return s;
}

std::pair<EnvState, JointObservation> GridEnv::reset(Rng& rng) const {
  EnvState s = reset_state(rng);
  JointObservation obs = observe(s);
  return {std::move(s), std::move(obs)};
}

JointObservation GridEnv::observe(const EnvState& state) const {
  const int n = spec_.n_agents;
  const double sx = 1.0 / static_cast<double>(spec_.width - 1);
  const double sy = 1.0 / static_cast<double>(spec_.height - 1);
  JointObservation obs(n);
  for (int i = 0; i < n; ++i) {
    auto& o = obs[i];
    o.reserve(obs_dim_);
    o.push_back(state.agent_cells[i].x * sx);
    o.push_back(state.agent_cells[i].y * sy);
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      o.push_back(state.agent_cells[j].x * sx);
      o.push_back(state.agent_cells[j].y * sy);
    }
    for (const auto& e : state.entities) {
      o.push_back(e.cell.x * sx);
      o.push_back(e.cell.y * sy);
      o.push_back(e.alive ? 1.0 : 0.0);
    }
    for (int j = 0; j < n; ++j) o.push_back(j == i ? 1.0 : 0.0);
    if (spec_.scenario == Scenario::kLbf1) {
      const int req = std::max(1, spec_.required_adjacency);
      o.push_back(static_cast<double>(std::min(state.adjacency_count, req)) /
                  req);
    }
  }
  return obs;
}

void GridEnv::move_agents(EnvState& state, std::span<const int> actions,
                          int& conflicts) const {
  const std::size_t n = state.agent_cells.size();
  std::vector<Cell> target(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Cell from = state.agent_cells[i];
    const Cell to = apply_action(from, actions[i]);
    target[i] = blocked_for_agent(state, to) ? from : to;
  }
  std::vector<bool> stay(n, false);
  conflicts = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool same_target = target[i] == target[j];
      const bool swap = target[i] == state.agent_cells[j] &&
                        target[j] == state.agent_cells[i] &&
                        !(target[i] == state.agent_cells[i]);
      if (same_target || swap) {
        ++conflicts;
        stay[i] = stay[j] = true;
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (stay[i]) target[i] = state.agent_cells[i];
  }
  // A mover may not enter a cell whose occupant ends up staying.
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (target[i] == state.agent_cells[i]) continue;
      for (std::size_t k = 0; k < n; ++k) {
        if (k != i && target[k] == target[i]) {
          target[i] = state.agent_cells[i];
          changed = true;
          break;
        }
      }
    }
  }
  state.agent_cells = std::move(target);
}

void GridEnv::move_preys(EnvState& state, Rng& rng) const {
  auto occupied = [&](Cell c, std::size_t self) {
    if (!in_grid(c)) return true;
    for (Cell a : state.agent_cells) {
      if (a == c) return true;
    }
    for (std::size_t k = 0; k < state.entities.size(); ++k) {
      if (k != self && state.entities[k].alive && state.entities[k].cell == c) {
        return true;
      }
    }
    return false;
  };
  for (std::size_t k = 0; k < state.entities.size(); ++k) {
    auto& prey = state.entities[k];
    if (!prey.alive) continue;
    if (spec_.prey_behavior == PreyBehavior::kRandomWalk) {
      const int a = static_cast<int>(rng.index(kNumActions));
      const Cell to = apply_action(prey.cell, a);
      if (!occupied(to, k)) prey.cell = to;
    } else {
      int best_dist = -1;
      Cell best = prey.cell;
      for (int a = 0; a < kNumActions; ++a) {
        Cell to = apply_action(prey.cell, a);
        if (a != kStay && occupied(to, k)) to = prey.cell;
        int nearest = 1 << 20;
        for (Cell p : state.agent_cells) nearest = std::min(nearest, manhattan(p, to));
        if (nearest > best_dist) {
          best_dist = nearest;
          best = to;
        }
      }
      prey.cell = best;
    }
  }
}

StepResult GridEnv::step(EnvState& state, std::span<const int> joint_action,
                         Rng& rng) const {
  require(!state.terminal && state.step < spec_.horizon,
          "step called on a terminal state");
  require(static_cast<int>(joint_action.size()) == spec_.n_agents,
          "joint action length must equal the agent count");
  for (int a : joint_action) {
    require(a >= 0 && a < kNumActions, "action index out of range");
  }
  int conflicts = 0;
  move_agents(state, joint_action, conflicts);
  state.step += 1;

  double reward = 0.0;
  if (is_lbf(spec_.scenario)) {
    const bool gated = spec_.scenario == Scenario::kLbf1 &&
                       state.adjacency_count < spec_.required_adjacency;
    for (auto& food : state.entities) {
      if (!food.alive) continue;
      int level_sum = 0;
      for (std::size_t i = 0; i < state.agent_cells.size(); ++i) {
        if (manhattan(state.agent_cells[i], food.cell) <= 1) {
          level_sum += spec_.agent_levels[i];
        }
      }
      if (level_sum >= food.level && !gated) {
        food.alive = false;
        reward += 1.0;
      }
    }
    if (spec_.scenario == Scenario::kLbf1 && spec_.n_agents >= 2 &&
        manhattan(state.agent_cells[0], state.agent_cells[1]) <= 1) {
      state.adjacency_count += 1;
    }
  } else if (spec_.scenario == Scenario::kGridPp) {
    for (auto& prey : state.entities) {
      if (!prey.alive) continue;
      bool all_near = true;
      for (Cell a : state.agent_cells) {
        if (manhattan(a, prey.cell) > 1) all_near = false;
      }
      if (all_near) {
        prey.alive = false;
        reward += 1.0;
      }
    }
    move_preys(state, rng);
  } else {
    bool covered = true;
    for (const auto& lm : state.entities) {
      bool hit = false;
      for (Cell a : state.agent_cells) hit = hit || a == lm.cell;
      covered = covered && hit;
    }
    reward = (covered ? 1.0 : 0.0) - spec_.collision_penalty * conflicts;
  }

  bool all_gone = spec_.scenario != Scenario::kGridCn;
  if (all_gone) {
    for (const auto& e : state.entities) all_gone = all_gone && !e.alive;
  }
  state.terminal = all_gone || state.step >= spec_.horizon;
  StepResult out;
  out.next_obs = observe(state);
  out.reward = reward;
  out.done = state.terminal;
  return out;
}

}  // namespace macop
