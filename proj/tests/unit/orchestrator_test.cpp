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

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "macop/error.hpp"
#include "macop/orchestrator.hpp"

namespace macop {
namespace {

namespace fs = std::filesystem;

TEST(Criterion, MinCrossPlayOverMeanSelfPlay) {
  bool warned = true;
  EXPECT_DOUBLE_EQ(criterion_value({0.5, 0.75}, {1.0, 1.0}, &warned), 0.5);
  EXPECT_FALSE(warned);
  EXPECT_DOUBLE_EQ(criterion_value({0.2, 0.9}, {0.5, 0.3}), 0.5);
}

TEST(Criterion, DegenerateSelfPlayIsInfiniteWithWarning) {
  bool warned = false;
  EXPECT_TRUE(std::isinf(criterion_value({0.1}, {0.0}, &warned)));
  EXPECT_TRUE(warned);
  EXPECT_THROW(criterion_value({}, {}), ContractError);
  EXPECT_THROW(criterion_value({0.1}, {0.1, 0.2}), ContractError);
}

TEST(Algos, NamesRoundTripAndRunIds) {
  for (Algo a : all_algos()) EXPECT_EQ(parse_algo(algo_name(a)), a);
  EXPECT_EQ(all_algos().size(), 13u);
  EXPECT_THROW(parse_algo("macop2"), ContractError);
  EXPECT_EQ(run_id(Algo::kMacop, 3), "macop-3");
  EXPECT_TRUE(is_loop_algo(Algo::kMacop));
  EXPECT_TRUE(is_loop_algo(Algo::kFinetune));
  EXPECT_FALSE(is_loop_algo(Algo::kTrajedi));
}

TEST(Algos, AblationsZeroTheirCoefficients) {
  const MacopConfig base;
  EXPECT_EQ(algo_config(Algo::kNoIncom, base).alpha_incom, 0.0);
  EXPECT_EQ(algo_config(Algo::kNoDiv, base).alpha_div, 0.0);
  const MacopConfig both = algo_config(Algo::kNoIncomDiv, base);
  EXPECT_EQ(both.alpha_incom + both.alpha_div, 0.0);
  EXPECT_EQ(algo_config(Algo::kNoReg, base).alpha_reg, 0.0);
  EXPECT_EQ(algo_config(Algo::kMacop, base), base);
  EXPECT_EQ(algo_ego_method(Algo::kFinetune), EgoMethod::kFinetune);
  EXPECT_EQ(algo_ego_method(Algo::kNoReg), EgoMethod::kMacop);
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  EXPECT_THROW(parse_config(R"({"alpha_incomm": 0.1})"), ContractError);
  EXPECT_THROW(parse_config(R"({"n_min": 5, "n_max": 4})"), ContractError);
  EXPECT_THROW(parse_config(R"({"lr": "fast"})"), ContractError);
  EXPECT_THROW(parse_config("[1, 2]"), ContractError);
  EXPECT_THROW(parse_config(R"({"profile": "huge"})"), ContractError);
}

TEST(Config, JsonRoundTripAndProfiles) {
  MacopConfig c = parse_config(R"({"n_p": 3, "xi": 0.25, "hidden_dims": [16]})");
  EXPECT_EQ(c.n_p, 3);
  EXPECT_EQ(c.xi, 0.25);
  EXPECT_EQ(parse_config(config_to_json(c)), c);
  const MacopConfig full = profile_config("full");
  EXPECT_GT(full.t_tm, profile_config("desk").t_tm);
  EXPECT_EQ(parse_config(R"({"profile": "full"})"), full);
}

MacopConfig tiny_config() {
  MacopConfig c;
  c.env = "lbf1";
  c.n_p = 2;
  c.n_min = 2;
  c.n_max = 3;
  c.t_tm = 24;
  c.t_ego = 24;
  c.pretrain_steps = 24;
  c.hidden_dims = {8};
  c.batch_size = 2;
  c.buffer_capacity = 16;
  c.updates_per_round = 1;
  c.eval_episodes = 2;
  c.select_episodes = 2;
  c.meta_episodes_per_head = 1;
  c.expansion_eval_episodes = 1;
  return c;
}

TEST(Loop, ZeroThresholdStopsAtMinimumIteration) {
  MacopConfig c = tiny_config();
  c.xi = 0.0;
  MacopRun run(c, Algo::kMacop, 1);
  run.run_to_end();
  const RunState& s = run.state();
  EXPECT_TRUE(s.finished);
  EXPECT_EQ(s.iteration, c.n_min);
  ASSERT_EQ(s.logs.size(), static_cast<std::size_t>(c.n_min));
  EXPECT_FALSE(s.logs[0].criterion.has_value());
  ASSERT_TRUE(s.logs.back().criterion.has_value());
  // The stopping iteration trains nothing new.
  EXPECT_EQ(s.archive.entries.size(), static_cast<std::size_t>(c.n_p * (c.n_min - 1)));
  EXPECT_FALSE(run.step());
}

TEST(Loop, UnreachableThresholdRunsToMaximum) {
  MacopConfig c = tiny_config();
  c.xi = 1e300;
  MacopRun run(c, Algo::kMacop, 2);
  run.run_to_end();
  const RunState& s = run.state();
  const bool stopped_early = !s.logs.empty() && s.logs.back().criterion &&
                             *s.logs.back().criterion >= c.xi;
  if (!stopped_early) {
    EXPECT_EQ(s.iteration, c.n_max);
    EXPECT_EQ(s.archive.entries.size(), static_cast<std::size_t>(c.n_p * c.n_max));
  }
  for (const auto& e : s.archive.entries) EXPECT_LE(e.iteration, s.iteration);
  for (const auto& log : s.logs) {
    EXPECT_EQ(log.members.size(), static_cast<std::size_t>(c.n_p));
  }
  // Head count never shrinks for the multi-head learner.
  for (std::size_t i = 1; i < s.logs.size(); ++i) {
    EXPECT_GE(s.logs[i].head_count, s.logs[i - 1].head_count);
  }
}

TEST(Loop, FinetuneKeepsOneHead) {
  MacopConfig c = tiny_config();
  c.xi = 1e300;
  c.n_max = 2;
  MacopRun run(c, Algo::kFinetune, 3);
  run.run_to_end();
  EXPECT_EQ(run.state().ego.head_count(), 1u);
}

TEST(Loop, CheckpointResumeMatchesUninterruptedRun) {
  MacopConfig c = tiny_config();
  c.xi = 1e300;
  const fs::path dir = fs::temp_directory_path() / "macop_orch_resume";
  fs::remove_all(dir);
  const RunState full = run_algo(Algo::kMacop, c, 4);

  MacopRun partial(c, Algo::kMacop, 4);
  partial.step();
  save_run(dir, partial.state());
  MacopRun resumed(load_run(dir));
  resumed.run_to_end();
  EXPECT_EQ(log_csv(resumed.state(), false), log_csv(full, false));
  EXPECT_EQ(resumed.state().ego.heads, full.ego.heads);
  EXPECT_EQ(resumed.state().ego.backbone, full.ego.backbone);
  fs::remove_all(dir);
}

TEST(Loop, LogCsvHeader) {
  MacopConfig c = tiny_config();
  c.xi = 0.0;
  const RunState s = run_algo(Algo::kMacop, c, 5);
  const std::string csv = log_csv(s, false);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "iteration,member_id,sp_mean,sp_std,xp_mean,xp_std,C,head_count,archive_size,"
            "wall_seconds");
}

}  // namespace
}  // namespace macop
