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

#ifndef MACOP_ORCHESTRATOR_HPP_
#define MACOP_ORCHESTRATOR_HPP_

// The outer loop: evolve an incompatible teammate population against the
// current ego, then train the ego on each new group, until the newest
// population is already handled well enough or the iteration cap is hit.
// Baseline trainers share the same artifacts.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "macop/checkpoint.hpp"
#include "macop/config.hpp"
#include "macop/ego.hpp"
#include "macop/teammate.hpp"

namespace macop {

enum class Algo {
  kMacop,
  kFcp,
  kTrajedi,
  kLipo,
  kFinetune,
  kSingleHead,
  kRandomHead,
  kEwc,
  kClear,
  kNoIncom,
  kNoDiv,
  kNoIncomDiv,
  kNoReg,
};

const char* algo_name(Algo a);
Algo parse_algo(const std::string& name);
std::vector<Algo> all_algos();
// Algorithms driven by the iterative population loop.
bool is_loop_algo(Algo a);
// Config with the coefficients an ablation removes set to zero.
MacopConfig algo_config(Algo a, MacopConfig config);
EgoMethod algo_ego_method(Algo a);

struct MemberLog {
  std::int64_t id = 0;
  ReturnStats sp;
  ReturnStats xp;
};

struct IterationLog {
  int iteration = 0;
  std::vector<MemberLog> members;
  std::optional<double> criterion;  // only once iteration >= n_min
  std::size_t head_count = 0;
  std::size_t archive_size = 0;
  double wall_seconds = 0.0;
};

struct RunState {
  MacopConfig config;
  Algo algo = Algo::kMacop;
  std::uint64_t seed = 0;
  EgoPolicy ego;
  Population population;
  Archive archive;
  IdCounter ids;
  Rng rng;
  int iteration = 0;
  bool finished = false;
  std::vector<IterationLog> logs;
  // Evaluate with a uniformly random head instead of meta-selection.
  bool random_head_eval = false;
};

std::string run_id(Algo algo, std::uint64_t seed);

// C = min_i xp_i / mean_i sp_i. A denominator <= 1e-9 yields +infinity and
// sets *warned.
double criterion_value(const std::vector<double>& xp,
                       const std::vector<double>& sp, bool* warned = nullptr);

// Stopping criterion over a population: cross-play with the meta-selected
// ego head, self-play with each group's complementary partner.
double stopping_criterion(const GridEnv& env, const EgoPolicy& ego,
                          const Population& population, int n_eval,
                          int episodes_per_head, Rng& rng,
                          int frame_stack = 1, bool* warned = nullptr);

// Keeps n_p groups out of parents + offspring.
Population select_population(const GridEnv& env, const Population& parents,
                             const Population& offspring,
                             const EgoPolicy& ego, int n_eval,
                             int episodes_per_head, Rng& rng,
                             int frame_stack = 1);

class MacopRun {
 public:
  // Builds the ego and the pre-trained initial population.
  MacopRun(const MacopConfig& config, Algo algo, std::uint64_t seed);
  explicit MacopRun(RunState state);

  // One outer iteration; returns false once the run has finished.
  bool step();
  void run_to_end();

  const RunState& state() const { return state_; }
  const GridEnv& env() const { return env_; }

 private:
  RunState state_;
  GridEnv env_;
};

// Runs any algorithm to completion. Loop algorithms checkpoint into
// `out_dir` (when given) after every iteration.
RunState run_algo(Algo algo, const MacopConfig& config, std::uint64_t seed,
                  const std::optional<std::filesystem::path>& out_dir = {});

// Continues a run directory written by run_algo.
RunState resume_run(const std::filesystem::path& dir);

// Artifact files inside a run directory.
void save_run(const std::filesystem::path& dir, const RunState& state);
RunState load_run(const std::filesystem::path& dir);
std::string log_csv(const RunState& state, bool include_wall = true);

}  // namespace macop

#endif  // MACOP_ORCHESTRATOR_HPP_
