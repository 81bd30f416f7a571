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

#include "macop/approximator.hpp"
#include "macop/error.hpp"
#include "oracles.hpp"

namespace macop {
namespace {

NetSpec small_spec(Activation act = Activation::kTanh) {
  NetSpec s;
  s.input_dim = 3;
  s.hidden_dims = {4, 5};
  s.head_hidden_dims = {3};
  s.output_dim = 2;
  s.activation = act;
  return s;
}

TEST(NetSpec, ParamCountMatchesLayerSizes) {
  const NetSpec s = small_spec();
  EXPECT_EQ(s.param_count(NetPart::kBackbone), 3u * 4 + 4 + 4 * 5 + 5);
  EXPECT_EQ(s.param_count(NetPart::kHead), 5u * 3 + 3 + 3 * 2 + 2);
  EXPECT_EQ(s.feature_dim(), 5u);
}

TEST(NetSpec, RejectsZeroWidths) {
  NetSpec s = small_spec();
  s.hidden_dims = {4, 0};
  EXPECT_THROW(s.validate(), ContractError);
  s = small_spec();
  s.output_dim = 0;
  EXPECT_THROW(s.validate(), ContractError);
}

TEST(Approximator, SingleLinearLayerMatchesHandComputation) {
  NetSpec s;
  s.input_dim = 2;
  s.hidden_dims = {};
  s.output_dim = 2;
  ParamStore bb;  // identity backbone
  ParamStore head(std::vector<double>{1, 2, 3, 4, 0.5, -0.5}.size());
  head.values = {1, 2, 3, 4, 0.5, -0.5};  // W = [[1,2],[3,4]], b = (.5,-.5)
  const std::vector<double> x{1.0, -1.0};
  const auto q = forward(s, bb, head, x);
  EXPECT_DOUBLE_EQ(q[0], 1 - 2 + 0.5);
  EXPECT_DOUBLE_EQ(q[1], 3 - 4 - 0.5);
}

TEST(Approximator, FlattenUnflattenRoundTrip) {
  Rng rng(3);
  const NetSpec s = small_spec();
  const ParamStore p = init_params(s, NetPart::kBackbone, rng);
  EXPECT_EQ(flatten(s, NetPart::kBackbone, unflatten(s, NetPart::kBackbone, p)), p);
  const auto layers = unflatten(s, NetPart::kBackbone, p);
  EXPECT_EQ(layers[1].weight(2, 3),
            p[flat_index(s, NetPart::kBackbone, 1, false, 2, 3)]);
  EXPECT_EQ(layers[0].bias(1), p[flat_index(s, NetPart::kBackbone, 0, true, 1)]);
}

TEST(Approximator, InitWithinFanInBound) {
  Rng rng(4);
  NetSpec s = small_spec();
  const auto layers = unflatten(s, NetPart::kBackbone,
                                init_params(s, NetPart::kBackbone, rng));
  EXPECT_LE(layers[0].weight.cwiseAbs().maxCoeff(), 1.0 / std::sqrt(3.0));
  EXPECT_LE(layers[1].weight.cwiseAbs().maxCoeff(), 1.0 / std::sqrt(4.0));
}

TEST(Approximator, ForwardMatchesNaiveLoops) {
  Rng rng(5);
  for (Activation act : {Activation::kRelu, Activation::kTanh}) {
    const NetSpec s = small_spec(act);
    const ParamStore bb = init_params(s, NetPart::kBackbone, rng);
    const ParamStore hd = init_params(s, NetPart::kHead, rng);
    const std::vector<double> x{0.3, -0.7, 1.1};
    const auto got = forward(s, bb, hd, x);
    const auto want = oracle::naive_forward(s, bb.values, hd.values, x);
    ASSERT_EQ(got.size(), want.size());
    for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], want[i], 1e-12);
  }
}

TEST(Approximator, BatchForwardMatchesPerSample) {
  Rng rng(6);
  const NetSpec s = small_spec(Activation::kRelu);
  const ParamStore bb = init_params(s, NetPart::kBackbone, rng);
  const ParamStore hd = init_params(s, NetPart::kHead, rng);
  Matrix x(4, 3);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform(-1, 1);
  const Matrix q = forward_batch(s, bb, hd, x);
  for (Eigen::Index r = 0; r < 4; ++r) {
    const std::vector<double> row(x.row(r).data(), x.row(r).data() + 3);
    const auto one = forward(s, bb, hd, row);
    for (Eigen::Index c = 0; c < 2; ++c) EXPECT_NEAR(q(r, c), one[c], 1e-12);
  }
}

// Gradient of sum(upstream .* q) against central differences.
TEST(Approximator, GradientsMatchFiniteDifferences) {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    NetSpec s;
    s.input_dim = 1 + rng.index(4);
    s.hidden_dims = {1 + rng.index(6), 1 + rng.index(6)};
    s.head_hidden_dims = trial % 2 ? std::vector<std::size_t>{2 + rng.index(3)}
                                   : std::vector<std::size_t>{};
    s.output_dim = 1 + rng.index(4);
    s.activation = trial % 3 ? Activation::kTanh : Activation::kRelu;
    const ParamStore bb = init_params(s, NetPart::kBackbone, rng);
    const ParamStore hd = init_params(s, NetPart::kHead, rng);
    std::vector<double> x(s.input_dim), up(s.output_dim);
    for (double& v : x) v = rng.uniform(-1, 1);
    for (double& v : up) v = rng.uniform(-1, 1);
    auto loss = [&](const std::vector<double>& b, const std::vector<double>& h) {
      const auto q = oracle::naive_forward(s, b, h, x);
      double l = 0.0;
      for (std::size_t i = 0; i < q.size(); ++i) l += up[i] * q[i];
      return l;
    };
    const auto [gb, gh] = backward(s, bb, hd, x, up);
    const auto nb = oracle::numeric_gradient(
        [&](const std::vector<double>& b) { return loss(b, hd.values); }, bb.values);
    const auto nh = oracle::numeric_gradient(
        [&](const std::vector<double>& h) { return loss(bb.values, h); }, hd.values);
    EXPECT_LT(oracle::max_relative_error(gb.values, nb), 1e-4) << "trial " << trial;
    EXPECT_LT(oracle::max_relative_error(gh.values, nh), 1e-4) << "trial " << trial;
  }
}

TEST(Approximator, BackwardBatchAccumulates) {
  Rng rng(8);
  const NetSpec s = small_spec();
  const ParamStore bb = init_params(s, NetPart::kBackbone, rng);
  const ParamStore hd = init_params(s, NetPart::kHead, rng);
  Matrix x = Matrix::Constant(2, 3, 0.2);
  Matrix up = Matrix::Constant(2, 2, 1.0);
  ForwardCache cache;
  forward_batch(s, bb, hd, x, &cache);
  ParamStore gb(bb.size()), gh(hd.size());
  backward_batch(s, bb, hd, cache, up, gb, gh);
  const ParamStore once = gh;
  backward_batch(s, bb, hd, cache, up, gb, gh);
  for (std::size_t i = 0; i < gh.size(); ++i) EXPECT_NEAR(gh[i], 2 * once[i], 1e-12);
}

TEST(Optimizer, AdamStepMatchesClosedForm) {
  ParamStore p(std::vector<double>{1.0, -2.0}.size());
  p.values = {1.0, -2.0};
  ParamStore g(2);
  g.values = {0.5, -0.25};
  OptState st = OptState::for_params(p, 0.1);
  optimizer_step(p, g, st);
  // First step of bias-corrected Adam moves each weight by lr * sign(g)
  // (up to eps).
  EXPECT_NEAR(p[0], 1.0 - 0.1 * 0.5 / (0.5 + 1e-8), 1e-12);
  EXPECT_NEAR(p[1], -2.0 + 0.1 * 0.25 / (0.25 + 1e-8), 1e-12);
  // Second step against an independent recomputation.
  optimizer_step(p, g, st);
  const double m = 0.9 * 0.1 * 0.5 + 0.1 * 0.5;
  const double v = 0.999 * 0.001 * 0.25 + 0.001 * 0.25;
  const double mh = m / (1 - 0.81), vh = v / (1 - 0.999 * 0.999);
  EXPECT_NEAR(p[0], 1.0 - 0.1 * 0.5 / (0.5 + 1e-8) - 0.1 * mh / (std::sqrt(vh) + 1e-8),
              1e-12);
}

TEST(Optimizer, NonFiniteGradientThrows) {
  ParamStore p(2), g(2);
  g.values = {0.0, std::nan("")};
  OptState st = OptState::for_params(p);
  EXPECT_THROW(optimizer_step(p, g, st), DivergenceError);
}

}  // namespace
}  // namespace macop
