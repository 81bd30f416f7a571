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

// Baselines that do not run the population loop: a population trained
// once (self-play only, JSD-diverse, or LIPO-style), followed either by a
// best-response ego over the whole pool or by sequential single-head
// continual training over its groups.

#include <chrono>

#include "macop/error.hpp"
#include "macop/orchestrator.hpp"

namespace macop {

RunState run_population_baseline(Algo algo, const MacopConfig& config,
                                 std::uint64_t seed) {
  require(!is_loop_algo(algo), "not a population baseline");
  const auto t0 = std::chrono::steady_clock::now();
  const GridEnv env = make_env(scenario_preset(config.env));
  RunState s;
  s.config = algo_config(algo, config);
  s.algo = algo;
  s.seed = seed;
  s.rng = Rng(seed);
  s.archive.run_id = run_id(algo, seed);
  s.archive.env = config.env;
  const MacopConfig& c = s.config;
  const NetSpec spec = net_spec_for(c, env);
  s.ego = EgoPolicy::create(spec, s.rng);

  TeammateTrainConfig tcfg = teammate_config(c);
  tcfg.alpha_incom = 0.0;
  if (algo == Algo::kLipo) tcfg.diversity = DiversityMode::kLipo;
  s.population = init_population(env, spec, c.baseline_population,
                                 c.baseline_population_steps, tcfg, s.ids,
                                 s.rng);

  const EgoTrainConfig ecfg = ego_config(c, algo_ego_method(algo));
  if (algo == Algo::kEwc || algo == Algo::kClear) {
    for (const auto& g : s.population.members) {
      continual_train(s.ego, env, g, c.t_ego, ecfg, s.rng);
    }
  } else {
    std::vector<QNet> pool;
    for (const auto& g : s.population.members) pool.push_back(g.tm_net);
    train_ego_on_pool(s.ego, env, pool, c.baseline_ego_steps, ecfg, s.rng);
  }

  IterationLog log;
  log.iteration = 1;
  for (auto& g : s.population.members) {
    MemberLog m;
    m.id = g.id;
    m.sp = self_play_return(env, g, c.select_episodes, s.rng, c.frame_stack);
    m.xp = cross_play_return(env, s.ego.compose(0), g, c.select_episodes,
                             s.rng, c.frame_stack);
    g.sp_return_cache = m.sp;
    g.xp_return_cache = m.xp;
    log.members.push_back(m);
    TeammateGroup frozen;
    frozen.id = g.id;
    frozen.generation = g.generation;
    frozen.tm_net = g.tm_net;
    frozen.comp_ego_net = g.comp_ego_net;
    frozen.sp_return_cache = m.sp;
    frozen.xp_return_cache = m.xp;
    s.archive.entries.push_back({1, std::move(frozen)});
  }
  log.head_count = s.ego.head_count();
  log.archive_size = s.archive.entries.size();
  log.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  s.logs.push_back(std::move(log));
  s.iteration = 1;
  s.finished = true;
  return s;
}

}  // namespace macop
