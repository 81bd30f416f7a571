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

#include <benchmark/benchmark.h>

#include "macop/approximator.hpp"
#include "macop/environment.hpp"
#include "macop/marl.hpp"
#include "macop/teammate.hpp"

namespace {

using namespace macop;

NetSpec bench_spec(std::size_t width) {
  NetSpec s;
  s.input_dim = 20;
  s.hidden_dims = {width, width};
  s.output_dim = kNumActions;
  return s;
}

void BM_ForwardBatch(benchmark::State& state) {
  const NetSpec spec = bench_spec(static_cast<std::size_t>(state.range(0)));
  Rng rng(1);
  const ParamStore bb = init_params(spec, NetPart::kBackbone, rng);
  const ParamStore hd = init_params(spec, NetPart::kHead, rng);
  Matrix x = Matrix::Random(256, static_cast<Eigen::Index>(spec.input_dim));
  for (auto _ : state) {
    benchmark::DoNotOptimize(forward_batch(spec, bb, hd, x, nullptr));
  }
  state.SetItemsProcessed(state.iterations() * 256);
}
BENCHMARK(BM_ForwardBatch)->Arg(32)->Arg(64)->Arg(128);

void BM_BackwardBatch(benchmark::State& state) {
  const NetSpec spec = bench_spec(static_cast<std::size_t>(state.range(0)));
  Rng rng(2);
  const ParamStore bb = init_params(spec, NetPart::kBackbone, rng);
  const ParamStore hd = init_params(spec, NetPart::kHead, rng);
  Matrix x = Matrix::Random(256, static_cast<Eigen::Index>(spec.input_dim));
  Matrix up = Matrix::Random(256, static_cast<Eigen::Index>(spec.output_dim));
  ParamStore gb(bb.size()), gh(hd.size());
  for (auto _ : state) {
    ForwardCache cache;
    forward_batch(spec, bb, hd, x, &cache);
    backward_batch(spec, bb, hd, cache, up, gb, gh);
    benchmark::ClobberMemory();
  }
  state.SetItemsProcessed(state.iterations() * 256);
}
BENCHMARK(BM_BackwardBatch)->Arg(64);

void BM_Rollout(benchmark::State& state) {
  const GridEnv env = make_env(scenario_preset("lbf4"));
  NetSpec spec = bench_spec(64);
  spec.input_dim = network_input_dim(env, 1);
  Rng rng(3);
  const QNet a = QNet::random(spec, rng);
  const QNet b = QNet::random(spec, rng);
  const auto policy = JointPolicy::compose(a, ActionMode::eps_greedy(0.1), b,
                                           ActionMode::eps_greedy(0.1),
                                           env.n_agents(), env.n_ego());
  for (auto _ : state) benchmark::DoNotOptimize(rollout(env, policy, rng));
}
BENCHMARK(BM_Rollout);

void BM_JsdDiversity(benchmark::State& state) {
  std::vector<Matrix> qs;
  for (int i = 0; i < 4; ++i) qs.push_back(Matrix::Random(256, kNumActions));
  for (auto _ : state) benchmark::DoNotOptimize(jsd_diversity(qs, 1.0));
}
BENCHMARK(BM_JsdDiversity);

}  // namespace

BENCHMARK_MAIN();
