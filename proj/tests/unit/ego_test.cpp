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

#include "macop/ego.hpp"
#include "macop/error.hpp"
#include "oracles.hpp"

namespace macop {
namespace {

TEST(RegLoss, EuclideanDistanceToSnapshot) {
  ParamStore phi;
  phi.values = {3.0, 4.0};
  const RegResult r = reg_loss(phi, {ParamStore(2)}, 2.0);
  EXPECT_DOUBLE_EQ(r.value, 5.0);
  EXPECT_NEAR(r.grad[0], 0.6, 1e-12);
  EXPECT_NEAR(r.grad[1], 0.8, 1e-12);
  EXPECT_DOUBLE_EQ(reg_loss(phi, {ParamStore(2)}, 1.0).value, 7.0);
}

TEST(RegLoss, AveragesOverSnapshots) {
  ParamStore phi, a, b;
  phi.values = {3.0, 4.0};
  a.values = {0.0, 0.0};
  b.values = {3.0, 4.0};
  EXPECT_DOUBLE_EQ(reg_loss(phi, {a, b}, 2.0).value, 2.5);
  EXPECT_DOUBLE_EQ(reg_loss(phi, {}, 2.0).value, 0.0);
}

TEST(RegLoss, ZeroValueAndGradientAtSnapshot) {
  ParamStore phi;
  phi.values = {0.3, -1.2, 2.0};
  const RegResult r = reg_loss(phi, {phi}, 2.0);
  EXPECT_DOUBLE_EQ(r.value, 0.0);
  for (double g : r.grad.values) EXPECT_DOUBLE_EQ(g, 0.0);
}

TEST(RegLoss, GradientMatchesFiniteDifferences) {
  Rng rng(1);
  for (double p : {1.5, 2.0, 3.0}) {
    std::vector<ParamStore> snaps(3, ParamStore(6));
    for (auto& s : snaps)
      for (double& v : s.values) v = rng.uniform(-1, 1);
    ParamStore phi(6);
    for (double& v : phi.values) v = rng.uniform(-1, 1);
    const RegResult r = reg_loss(phi, snaps, p);
    const auto num = oracle::numeric_gradient(
        [&](const std::vector<double>& v) {
          ParamStore probe;
          probe.values = v;
          return reg_loss(probe, snaps, p).value;
        },
        phi.values);
    EXPECT_LT(oracle::max_relative_error(r.grad.values, num), 1e-6) << "p=" << p;
  }
  EXPECT_THROW(reg_loss(ParamStore(2), {}, 0.5), ContractError);
}

TEST(Expansion, TruthTable) {
  EXPECT_TRUE(expansion_decision(0.0, {}, 0.5));
  EXPECT_TRUE(expansion_decision(-1.0, {0.0, -0.5}, 0.5));
  EXPECT_TRUE(expansion_decision(1.2, {1.0, 0.4}, 0.1));
  EXPECT_FALSE(expansion_decision(1.05, {1.0}, 0.1));
  EXPECT_TRUE(expansion_decision(1.0, {1.0}, 0.0));
  EXPECT_FALSE(expansion_decision(0.9, {1.0}, 0.0));
}

TEST(EgoMethodNames, RoundTrip) {
  for (EgoMethod m : {EgoMethod::kMacop, EgoMethod::kFinetune, EgoMethod::kSingleHead,
                      EgoMethod::kEwc, EgoMethod::kClear}) {
    EXPECT_EQ(parse_ego_method(ego_method_name(m)), m);
  }
  EXPECT_THROW(parse_ego_method("nope"), ContractError);
}

// 3x2 strip: both agents spawn diagonal to a level-2 food and reach it
// together with a single Up move.
GridEnv strip_env() {
  EnvSpec s = scenario_preset("lbf4");
  s.name = "strip";
  s.width = 3;
  s.height = 2;
  s.horizon = 3;
  s.agent_spawn_cells = {{0, 1}, {2, 1}};
  s.entities = {EntitySpec{{1, 0}, 2}};
  return make_env(s);
}

NetSpec linear_spec(const GridEnv& env) {
  NetSpec s;
  s.input_dim = network_input_dim(env, 1);
  s.hidden_dims = {};
  s.output_dim = kNumActions;
  return s;
}

ParamStore action_head(const NetSpec& s, int action) {
  ParamStore h(s.param_count(NetPart::kHead));
  h[flat_index(s, NetPart::kHead, 0, true, action)] = 1.0;
  return h;
}

TEST(MetaSelection, PicksBestHeadWithLowestIndexOnTies) {
  const GridEnv env = strip_env();
  const NetSpec s = linear_spec(env);
  Rng rng(2);
  EgoPolicy ego = EgoPolicy::create(s, rng);
  for (int a : {kDown, kUp, kUp}) {
    ego.heads.push_back(action_head(s, a));
    ego.snapshots.push_back(ego.backbone);
    ego.head_origin.push_back(0);
  }
  const QNet tm{s, ParamStore(), action_head(s, kUp)};
  const HeadEvalReport r = meta_select_head(env, ego, tm, 3, rng);
  EXPECT_EQ(r.per_head_mean, (std::vector<double>{0.0, 1.0, 1.0}));
  EXPECT_EQ(r.chosen, 1u);
  EXPECT_EQ(ego_for_teammate(env, ego, tm, 3, false, rng), ego.compose(1));
  EXPECT_THROW(meta_select_head(env, ego, tm, 0, rng), ContractError);
}

TEST(MetaSelection, SingleHeadSkipsEvaluation) {
  const GridEnv env = strip_env();
  const NetSpec s = linear_spec(env);
  Rng rng(3);
  EgoPolicy ego = EgoPolicy::create(s, rng);
  EXPECT_THROW(ego_for_teammate(env, ego, QNet::random(s, rng), 1, false, rng),
               ContractError);
  ego.heads.push_back(action_head(s, kLeft));
  ego.snapshots.push_back(ego.backbone);
  ego.head_origin.push_back(0);
  EXPECT_EQ(ego_for_teammate(env, ego, QNet::random(s, rng), 5, false, rng),
            ego.compose(0));
}

class ContinualFixture : public ::testing::Test {
 protected:
  GridEnv env = make_env(scenario_preset("lbf1"));
  NetSpec spec;
  EgoTrainConfig cfg;
  Rng rng{5};
  TeammateGroup group;
  void SetUp() override {
    spec.input_dim = network_input_dim(env, 1);
    spec.hidden_dims = {8};
    cfg.batch_size = 4;
    cfg.buffer_capacity = 32;
    cfg.expansion_eval_episodes = 2;
    group = make_group(spec, 42, 8, rng);
  }
};

TEST_F(ContinualFixture, MacopNeverTouchesRetainedHeads) {
  EgoPolicy ego = EgoPolicy::create(spec, rng);
  for (int k = 0; k < 2; ++k) {
    ego.heads.push_back(init_params(spec, NetPart::kHead, rng));
    ego.snapshots.push_back(ego.backbone);
    ego.head_origin.push_back(k);
  }
  const auto frozen = ego.heads;
  const ContinualReport rep = continual_train(ego, env, group, 60, cfg, rng);
  EXPECT_GT(rep.steps, 60);
  ASSERT_GE(ego.heads.size(), 2u);
  EXPECT_EQ(ego.heads[0], frozen[0]);
  EXPECT_EQ(ego.heads[1], frozen[1]);
  EXPECT_EQ(ego.snapshots.size(), ego.heads.size());
  EXPECT_EQ(ego.head_origin.size(), ego.heads.size());
  EXPECT_EQ(ego.heads.size(), rep.kept ? 3u : 2u);
  if (rep.kept) {
    EXPECT_EQ(ego.head_origin.back(), 42);
    EXPECT_EQ(ego.snapshots.back(), ego.backbone);
  }
  EXPECT_EQ(rep.existing_returns.size(), 2u);
}

TEST_F(ContinualFixture, FirstGroupAlwaysAddsAHead) {
  EgoPolicy ego = EgoPolicy::create(spec, rng);
  const ContinualReport rep = continual_train(ego, env, group, 30, cfg, rng);
  EXPECT_TRUE(rep.kept);
  EXPECT_EQ(ego.head_count(), 1u);
}

TEST_F(ContinualFixture, SingleHeadBaselinesKeepOneHead) {
  for (EgoMethod m : {EgoMethod::kFinetune, EgoMethod::kSingleHead, EgoMethod::kEwc,
                      EgoMethod::kClear}) {
    cfg.method = m;
    EgoPolicy ego = EgoPolicy::create(spec, rng);
    continual_train(ego, env, group, 30, cfg, rng);
    continual_train(ego, env, group, 30, cfg, rng);
    EXPECT_EQ(ego.head_count(), 1u) << ego_method_name(m);
  }
}

TEST_F(ContinualFixture, RejectsEmptyBudget) {
  EgoPolicy ego = EgoPolicy::create(spec, rng);
  EXPECT_THROW(continual_train(ego, env, group, 0, cfg, rng), ContractError);
}

}  // namespace
}  // namespace macop
