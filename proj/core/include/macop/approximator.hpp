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

#ifndef MACOP_APPROXIMATOR_HPP_
#define MACOP_APPROXIMATOR_HPP_

// Small multilayer perceptron split into a shared feature backbone and a
// decision head. Parameters live in flat vectors so snapshots, targets and
// optimizer moments are plain value copies.

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "macop/rng.hpp"

namespace macop {

using Matrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

enum class Activation { kRelu, kTanh };

enum class NetPart { kBackbone, kHead };

struct NetSpec {
  std::size_t input_dim = 1;
  // Backbone hidden layers. Empty means the backbone is the identity map,
  // which leaves a single linear layer when head_hidden_dims is empty too.
  std::vector<std::size_t> hidden_dims{64, 64};
  // Hidden layers inside each head, before the output layer.
  std::vector<std::size_t> head_hidden_dims{};
  std::size_t output_dim = 5;
  Activation activation = Activation::kRelu;

  void validate() const;
  std::size_t feature_dim() const;
  // Layer widths, input first, for one part of the network.
  std::vector<std::size_t> layer_dims(NetPart part) const;
  std::size_t param_count(NetPart part) const;

  bool operator==(const NetSpec&) const = default;
};

struct ParamStore {
  std::vector<double> values;

  ParamStore() = default;
  explicit ParamStore(std::size_t n, double fill = 0.0) : values(n, fill) {}

  std::size_t size() const { return values.size(); }
  bool empty() const { return values.empty(); }
  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }

  bool operator==(const ParamStore&) const = default;
};

// One dense layer unpacked from a ParamStore.
struct LayerParams {
  Matrix weight;  // out x in
  Vector bias;    // out
};

// Flat index of a weight (row, col) or bias (row) entry. Weights of a layer
// are stored row-major and followed by that layer's bias.
std::size_t flat_index(const NetSpec& spec, NetPart part, std::size_t layer,
                       bool is_bias, std::size_t row, std::size_t col = 0);

std::vector<LayerParams> unflatten(const NetSpec& spec, NetPart part,
                                   const ParamStore& store);
ParamStore flatten(const NetSpec& spec, NetPart part,
                   const std::vector<LayerParams>& layers);

// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)] for weights and biases.
ParamStore init_params(const NetSpec& spec, NetPart part, Rng& rng);

ParamStore copy_params(const ParamStore& src);

// Intermediate values of a batched forward pass, needed for backprop.
struct ForwardCache {
  std::vector<Matrix> inputs;   // input to each layer (backbone then head)
  std::vector<Matrix> outputs;  // post-activation output of each layer
};

// Rows of `input` are samples. Returns batch x output_dim q-values.
Matrix forward_batch(const NetSpec& spec, const ParamStore& backbone,
                     const ParamStore& head, const Matrix& input,
                     ForwardCache* cache = nullptr);

// Accumulates (+=) the gradient of sum(upstream .* output) into the two
// gradient stores, which must already have the right sizes.
void backward_batch(const NetSpec& spec, const ParamStore& backbone,
                    const ParamStore& head, const ForwardCache& cache,
                    const Matrix& upstream, ParamStore& grad_backbone,
                    ParamStore& grad_head);

std::vector<double> forward(const NetSpec& spec, const ParamStore& backbone,
                            const ParamStore& head,
                            std::span<const double> input);

std::pair<ParamStore, ParamStore> backward(const NetSpec& spec,
                                           const ParamStore& backbone,
                                           const ParamStore& head,
                                           std::span<const double> input,
                                           std::span<const double> upstream);

struct OptState {
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  std::int64_t step_count = 0;
  double lr = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static OptState for_params(const ParamStore& params, double lr = 5e-4);
};

// Bias-corrected Adam update. Throws DivergenceError on non-finite grads.
void optimizer_step(ParamStore& params, const ParamStore& grads,
                    OptState& state);

}  // namespace macop

#endif  // MACOP_APPROXIMATOR_HPP_
