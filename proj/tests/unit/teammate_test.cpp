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
#include <numeric>

#include "macop/error.hpp"
#include "macop/teammate.hpp"
#include "oracles.hpp"

namespace macop {
namespace {

std::vector<Matrix> random_qs(std::size_t n, Eigen::Index rows, Eigen::Index k,
                              Rng& rng, double scale = 2.0) {
  std::vector<Matrix> qs(n, Matrix(rows, k));
  for (auto& q : qs)
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index a = 0; a < k; ++a) q(r, a) = rng.uniform(-scale, scale);
  return qs;
}

std::vector<std::vector<std::vector<double>>> nested(const std::vector<Matrix>& qs) {
  std::vector<std::vector<std::vector<double>>> out;
  for (const auto& q : qs) {
    std::vector<std::vector<double>> m(q.rows(), std::vector<double>(q.cols()));
    for (Eigen::Index r = 0; r < q.rows(); ++r)
      for (Eigen::Index a = 0; a < q.cols(); ++a) m[r][a] = q(r, a);
    out.push_back(m);
  }
  return out;
}

TEST(Jsd, MatchesDirectDefinition) {
  Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const auto qs = random_qs(2 + trial % 4, 7, 5, rng);
    const double tau = 0.5 + 0.1 * trial;
    EXPECT_NEAR(jsd_diversity(qs, tau).value, oracle::direct_jsd(nested(qs), tau),
                1e-10);
  }
}

TEST(Jsd, IdenticalGroupsGiveZero) {
  Rng rng(2);
  auto qs = random_qs(1, 6, 5, rng);
  qs.push_back(qs[0]);
  qs.push_back(qs[0]);
  const JsdResult r = jsd_diversity(qs, 1.0);
  EXPECT_NEAR(r.value, 0.0, 1e-12);
  for (const auto& g : r.grad_q) EXPECT_LT(g.cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Jsd, DisjointDeterministicPairApproachesLog2) {
  std::vector<Matrix> qs(2, Matrix::Zero(1, 2));
  qs[0](0, 0) = 60.0;
  qs[1](0, 1) = 60.0;
  EXPECT_NEAR(jsd_diversity(qs, 1.0).value, std::log(2.0), 1e-9);
}

TEST(Jsd, GradientMatchesFiniteDifferences) {
  Rng rng(3);
  auto qs = random_qs(3, 4, 5, rng);
  const double tau = 0.7;
  const JsdResult r = jsd_diversity(qs, tau);
  for (std::size_t i = 0; i < qs.size(); ++i) {
    std::vector<double> flat(qs[i].data(), qs[i].data() + qs[i].size());
    const auto num = oracle::numeric_gradient(
        [&](const std::vector<double>& v) {
          auto probe = qs;
          std::copy(v.begin(), v.end(), probe[i].data());
          return jsd_diversity(probe, tau).value;
        },
        flat);
    std::vector<double> got(r.grad_q[i].data(), r.grad_q[i].data() + r.grad_q[i].size());
    EXPECT_LT(oracle::max_relative_error(got, num), 1e-5) << "group " << i;
  }
}

TEST(Jsd, RejectsMismatchedShapes) {
  std::vector<Matrix> qs{Matrix::Zero(2, 3), Matrix::Zero(3, 3)};
  EXPECT_THROW(jsd_diversity(qs, 1.0), ContractError);
  std::vector<Matrix> one{Matrix::Zero(2, 3)};
  EXPECT_THROW(jsd_diversity(one, 0.0), ContractError);
}

// Linear net with zero weights: the policy is softmax(bias).
QNet bias_net(std::vector<double> bias) {
  NetSpec s;
  s.input_dim = 1;
  s.hidden_dims = {};
  s.output_dim = bias.size();
  QNet q{s, ParamStore(), ParamStore(s.param_count(NetPart::kHead))};
  for (std::size_t a = 0; a < bias.size(); ++a)
    q.head[flat_index(s, NetPart::kHead, 0, true, static_cast<int>(a))] = bias[a];
  return q;
}

Episode one_step(int action, std::size_t steps = 1) {
  Episode ep;
  ep.n_agents = 2;
  ep.input_dim = 1;
  for (std::size_t t = 0; t <= steps; ++t) ep.inputs.push_back({0.0, 0.0});
  for (std::size_t t = 0; t < steps; ++t) {
    ep.actions.push_back({0, action});
    ep.rewards.push_back(0.0);
  }
  ep.terminated = true;
  return ep;
}

TEST(Dissimilarity, HalfOverQuarterGivesOne) {
  const QNet a = bias_net({0.0, 0.0});            // pi(0) = 0.5
  const QNet b = bias_net({0.0, std::log(3.0)});  // pi(0) = 0.25
  const std::vector<Episode> eps{one_step(0)};
  EXPECT_NEAR(dissimilarity(a, b, eps, 1, 1.0), 1.0, 1e-12);
  EXPECT_NEAR(dissimilarity(a, a, eps, 1, 1.0), 0.0, 1e-12);
}

TEST(Dissimilarity, MaxOverTrajectoriesMatchesLogSpaceOracle) {
  Rng rng(4);
  const QNet a = bias_net({0.3, -0.2, 0.1});
  const QNet b = bias_net({-0.1, 0.4, 0.0});
  std::vector<Episode> eps;
  for (int k = 0; k < 5; ++k) {
    Episode ep = one_step(0, 4);
    for (auto& act : ep.actions) act[1] = static_cast<int>(rng.index(3));
    eps.push_back(ep);
  }
  auto logp = [](const QNet& q, int act) {
    const auto v = q.q_values(std::vector<double>{0.0});
    double z = 0.0;
    for (double x : v) z += std::exp(x);
    return v[act] - std::log(z);
  };
  double want = 0.0;
  for (const auto& ep : eps) {
    double s = 0.0;
    for (const auto& act : ep.actions) s += logp(a, act[1]) - logp(b, act[1]);
    want = std::max(want, std::abs(1.0 - std::exp(s)));
  }
  EXPECT_NEAR(dissimilarity(a, b, eps, 1, 1.0), want, 1e-12);
}

TEST(Dissimilarity, ZeroProbabilityIsInfinite) {
  const QNet a = bias_net({0.0, 0.0});
  const QNet b = bias_net({0.0, 1e6});
  const std::vector<Episode> eps{one_step(0)};
  EXPECT_TRUE(std::isinf(dissimilarity(a, b, eps, 1, 1.0)));
  EXPECT_THROW(dissimilarity(a, b, std::vector<Episode>{}, 1, 1.0), ContractError);
}

TEST(Selection, HandTrace) {
  const std::vector<SelectionCandidate> pool{
      {1, 0.2, 0.1}, {2, 0.9, 0.8}, {3, 0.9, 0.3}, {4, 0.5, 0.3}};
  // Lowest self-play (id 1) goes first, then the highest cross-play (id 2).
  EXPECT_EQ(select_survivors(pool, 2), (std::vector<std::size_t>{2, 3}));
}

TEST(Selection, TiesRemoveLowerIdFirst) {
  const std::vector<SelectionCandidate> pool{
      {7, 0.5, 0.5}, {3, 0.5, 0.5}, {9, 0.5, 0.5}, {5, 0.5, 0.5}};
  // id 3 fails on self-play, then id 5 on cross-play.
  EXPECT_EQ(select_survivors(pool, 2), (std::vector<std::size_t>{0, 2}));
}

TEST(Selection, PoolSizesAndRejections) {
  Rng rng(5);
  for (std::size_t n_p = 1; n_p <= 8; ++n_p) {
    std::vector<SelectionCandidate> pool;
    for (std::size_t i = 0; i < 2 * n_p; ++i)
      pool.push_back({static_cast<std::int64_t>(i + 1), rng.uniform(0, 1), rng.uniform(0, 1)});
    const auto kept = select_survivors(pool, n_p);
    EXPECT_EQ(kept.size(), n_p);
    EXPECT_TRUE(std::is_sorted(kept.begin(), kept.end()));
  }
  const std::vector<SelectionCandidate> odd{{1, 0, 0}, {2, 0, 0}, {3, 0, 0}};
  EXPECT_THROW(select_survivors(odd, 2), ContractError);
}

class TinyPopulation : public ::testing::Test {
 protected:
  GridEnv env = make_env(scenario_preset("lbf1"));
  NetSpec spec;
  TeammateTrainConfig cfg;
  IdCounter ids;
  Rng rng{6};
  void SetUp() override {
    spec.input_dim = network_input_dim(env, 1);
    spec.hidden_dims = {8};
    cfg.batch_size = 4;
  }
};

TEST_F(TinyPopulation, TrainingConsumesAtLeastTheBudget) {
  Population pop = init_population(env, spec, 2, 0, cfg, ids, rng);
  const std::int64_t used = train_population(pop, env, {}, 40, cfg, rng);
  EXPECT_GT(used, 80);
  EXPECT_LE(used, 80 + 2 * env.horizon());
  EXPECT_EQ(train_population(pop, env, {}, 0, cfg, rng), 0);
}

TEST_F(TinyPopulation, MutateLeavesParentsUnchanged) {
  const Population parents = init_population(env, spec, 3, 30, cfg, ids, rng);
  const Population before = parents;
  std::vector<QNet> egos;
  for (int i = 0; i < 3; ++i) egos.push_back(QNet::random(spec, rng));
  const Population kids = mutate(parents, env, egos, 30, cfg, ids, rng);
  ASSERT_EQ(kids.size(), 3u);
  EXPECT_EQ(kids.generation, parents.generation + 1);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(parents.members[i].tm_net, before.members[i].tm_net);
    EXPECT_EQ(parents.members[i].comp_ego_net, before.members[i].comp_ego_net);
    EXPECT_EQ(kids.members[i].lineage, parents.members[i].id);
    EXPECT_NE(kids.members[i].id, parents.members[i].id);
    EXPECT_NE(kids.members[i].tm_net, parents.members[i].tm_net);
  }
  EXPECT_THROW(mutate(parents, env, egos, 1, cfg, ids, rng), ContractError);
}

TEST_F(TinyPopulation, SelfPlayIsDeterministicUnderGreedyPlay) {
  const Population pop = init_population(env, spec, 1, 0, cfg, ids, rng);
  Rng a(11), b(11);
  const ReturnStats ra = self_play_return(env, pop.members[0], 5, a, 1);
  const ReturnStats rb = self_play_return(env, pop.members[0], 5, b, 1);
  EXPECT_EQ(ra.mean, rb.mean);
  EXPECT_EQ(ra.std, rb.std);
}

}  // namespace
}  // namespace macop
