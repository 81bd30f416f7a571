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

#include "macop/approximator.hpp"

#include <cmath>
#include <string>

#include "macop/error.hpp"

namespace macop {
namespace {

using RowVec = Eigen::Matrix<double, 1, Eigen::Dynamic>;
using ConstMatMap = Eigen::Map<const Matrix>;
using MatMap = Eigen::Map<Matrix>;
using ConstRowMap = Eigen::Map<const RowVec>;
using RowMap = Eigen::Map<RowVec>;

struct LayerSlot {
  std::size_t offset;
  std::size_t in;
  std::size_t out;
  bool activated;
};

std::vector<LayerSlot> layer_slots(const NetSpec& spec, NetPart part) {
  const auto dims = spec.layer_dims(part);
  std::vector<LayerSlot> slots;
  std::size_t offset = 0;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const bool last_of_head =
        part == NetPart::kHead && l + 2 == dims.size();
    slots.push_back({offset, dims[l], dims[l + 1], !last_of_head});
    offset += dims[l] * dims[l + 1] + dims[l + 1];
  }
  return slots;
}

void apply_activation(Activation act, Matrix& m) {
  if (act == Activation::kRelu) {
    m = m.cwiseMax(0.0);
  } else {
    m = m.array().tanh().matrix();
  }
}

void run_layers(const std::vector<LayerSlot>& slots, const ParamStore& params,
                Activation act, Matrix& x, ForwardCache* cache) {
  for (const LayerSlot& s : slots) {
    ConstMatMap w(params.values.data() + s.offset, s.out, s.in);
    ConstRowMap b(params.values.data() + s.offset + s.out * s.in, s.out);
    Matrix y(x.rows(), s.out);
    y.noalias() = x * w.transpose();
    y.rowwise() += b;
    if (s.activated) apply_activation(act, y);
    if (cache != nullptr) {
      cache->inputs.push_back(std::move(x));
      cache->outputs.push_back(y);
    }
    x = std::move(y);
  }
}

// Walks layers in reverse; `grad` enters as d(out of last layer) and leaves
// as d(input of first layer).
void backprop_layers(const std::vector<LayerSlot>& slots,
                     const ParamStore& params, Activation act,
                     const ForwardCache& cache, std::size_t cache_offset,
                     Matrix& grad, ParamStore& out_grad) {
  for (std::size_t k = slots.size(); k-- > 0;) {
    const LayerSlot& s = slots[k];
    const Matrix& x = cache.inputs[cache_offset + k];
    const Matrix& y = cache.outputs[cache_offset + k];
    if (s.activated) {
      if (act == Activation::kRelu) {
        grad = (y.array() > 0.0).select(grad, 0.0);
      } else {
        grad = (grad.array() * (1.0 - y.array().square())).matrix();
      }
    }
    MatMap gw(out_grad.values.data() + s.offset, s.out, s.in);
    RowMap gb(out_grad.values.data() + s.offset + s.out * s.in, s.out);
    gw.noalias() += grad.transpose() * x;
    gb += grad.colwise().sum();
    ConstMatMap w(params.values.data() + s.offset, s.out, s.in);
    Matrix next(grad.rows(), s.in);
    next.noalias() = grad * w;
    grad = std::move(next);
  }
}

void check_sizes(const NetSpec& spec, const ParamStore& backbone,
                 const ParamStore& head) {
  require(backbone.size() == spec.param_count(NetPart::kBackbone),
          "backbone parameter count does not match the network spec");
  require(head.size() == spec.param_count(NetPart::kHead),
          "head parameter count does not match the network spec");
}

}  // namespace

void NetSpec::validate() const {
  require(input_dim >= 1, "input_dim must be >= 1");
  require(output_dim >= 1, "output_dim must be >= 1");
  for (std::size_t h : hidden_dims) require(h >= 1, "hidden dims must be >= 1");
  for (std::size_t h : head_hidden_dims) {
    require(h >= 1, "head hidden dims must be >= 1");
  }
}

std::size_t NetSpec::feature_dim() const {
  return hidden_dims.empty() ? input_dim : hidden_dims.back();
}

std::vector<std::size_t> NetSpec::layer_dims(NetPart part) const {
  std::vector<std::size_t> dims;
  if (part == NetPart::kBackbone) {
    dims.push_back(input_dim);
    dims.insert(dims.end(), hidden_dims.begin(), hidden_dims.end());
  } else {
    dims.push_back(feature_dim());
    dims.insert(dims.end(), head_hidden_dims.begin(), head_hidden_dims.end());
    dims.push_back(output_dim);
  }
  return dims;
}

std::size_t NetSpec::param_count(NetPart part) const {
  const auto dims = layer_dims(part);
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    n += dims[l] * dims[l + 1] + dims[l + 1];
  }
  return n;
}

std::size_t flat_index(const NetSpec& spec, NetPart part, std::size_t layer,
                       bool is_bias, std::size_t row, std::size_t col) {
  const auto slots = layer_slots(spec, part);
  require(layer < slots.size(), "layer index out of range");
  const LayerSlot& s = slots[layer];
  require(row < s.out, "row index out of range");
  if (is_bias) return s.offset + s.out * s.in + row;
  require(col < s.in, "column index out of range");
  return s.offset + row * s.in + col;
}

std::vector<LayerParams> unflatten(const NetSpec& spec, NetPart part,
                                   const ParamStore& store) {
  require(store.size() == spec.param_count(part),
          "parameter count does not match the network spec");
  std::vector<LayerParams> layers;
  for (const LayerSlot& s : layer_slots(spec, part)) {
    LayerParams lp;
    lp.weight = ConstMatMap(store.values.data() + s.offset, s.out, s.in);
    lp.bias = Eigen::Map<const Vector>(
        store.values.data() + s.offset + s.out * s.in, s.out);
    layers.push_back(std::move(lp));
  }
  return layers;
}

ParamStore flatten(const NetSpec& spec, NetPart part,
                   const std::vector<LayerParams>& layers) {
  const auto slots = layer_slots(spec, part);
  require(layers.size() == slots.size(), "layer count mismatch");
  ParamStore store(spec.param_count(part));
  for (std::size_t l = 0; l < slots.size(); ++l) {
    const LayerSlot& s = slots[l];
    require(static_cast<std::size_t>(layers[l].weight.rows()) == s.out &&
                static_cast<std::size_t>(layers[l].weight.cols()) == s.in &&
                static_cast<std::size_t>(layers[l].bias.size()) == s.out,
            "layer shape mismatch");
    MatMap(store.values.data() + s.offset, s.out, s.in) = layers[l].weight;
    Eigen::Map<Vector>(store.values.data() + s.offset + s.out * s.in, s.out) =
        layers[l].bias;
  }
  return store;
}

ParamStore init_params(const NetSpec& spec, NetPart part, Rng& rng) {
  spec.validate();
  ParamStore store(spec.param_count(part));
  for (const LayerSlot& s : layer_slots(spec, part)) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(s.in));
    const std::size_t n = s.out * s.in + s.out;
    for (std::size_t i = 0; i < n; ++i) {
      store.values[s.offset + i] = rng.uniform(-bound, bound);
    }
  }
  return store;
}

ParamStore copy_params(const ParamStore& src) { return src; }

Matrix forward_batch(const NetSpec& spec, const ParamStore& backbone,
                     const ParamStore& head, const Matrix& input,
                     ForwardCache* cache) {
  check_sizes(spec, backbone, head);
  require(static_cast<std::size_t>(input.cols()) == spec.input_dim,
          "input width " + std::to_string(input.cols()) +
              " does not match input_dim " + std::to_string(spec.input_dim));
  if (cache != nullptr) {
    cache->inputs.clear();
    cache->outputs.clear();
  }
  Matrix x = input;
  run_layers(layer_slots(spec, NetPart::kBackbone), backbone, spec.activation,
             x, cache);
  run_layers(layer_slots(spec, NetPart::kHead), head, spec.activation, x,
             cache);
  return x;
}

void backward_batch(const NetSpec& spec, const ParamStore& backbone,
                    const ParamStore& head, const ForwardCache& cache,
                    const Matrix& upstream, ParamStore& grad_backbone,
                    ParamStore& grad_head) {
  check_sizes(spec, backbone, head);
  check_sizes(spec, grad_backbone, grad_head);
  const auto bb_slots = layer_slots(spec, NetPart::kBackbone);
  const auto head_slots = layer_slots(spec, NetPart::kHead);
  require(cache.inputs.size() == bb_slots.size() + head_slots.size(),
          "forward cache does not match the network");
  require(static_cast<std::size_t>(upstream.cols()) == spec.output_dim &&
              upstream.rows() == cache.outputs.back().rows(),
          "upstream gradient shape mismatch");
  Matrix grad = upstream;
  backprop_layers(head_slots, head, spec.activation, cache, bb_slots.size(),
                  grad, grad_head);
  backprop_layers(bb_slots, backbone, spec.activation, cache, 0, grad,
                  grad_backbone);
}

std::vector<double> forward(const NetSpec& spec, const ParamStore& backbone,
                            const ParamStore& head,
                            std::span<const double> input) {
  require(input.size() == spec.input_dim, "input length mismatch");
  Matrix x = Eigen::Map<const Matrix>(input.data(), 1, input.size());
  Matrix y = forward_batch(spec, backbone, head, x);
  return std::vector<double>(y.data(), y.data() + y.size());
}

std::pair<ParamStore, ParamStore> backward(const NetSpec& spec,
                                           const ParamStore& backbone,
                                           const ParamStore& head,
                                           std::span<const double> input,
                                           std::span<const double> upstream) {
  require(input.size() == spec.input_dim, "input length mismatch");
  require(upstream.size() == spec.output_dim, "upstream length mismatch");
  ForwardCache cache;
  Matrix x = Eigen::Map<const Matrix>(input.data(), 1, input.size());
  forward_batch(spec, backbone, head, x, &cache);
  Matrix g = Eigen::Map<const Matrix>(upstream.data(), 1, upstream.size());
  ParamStore gb(backbone.size());
  ParamStore gh(head.size());
  backward_batch(spec, backbone, head, cache, g, gb, gh);
  return {std::move(gb), std::move(gh)};
}

OptState OptState::for_params(const ParamStore& params, double lr) {
  OptState s;
  s.first_moment.assign(params.size(), 0.0);
  s.second_moment.assign(params.size(), 0.0);
  s.lr = lr;
  return s;
}

void optimizer_step(ParamStore& params, const ParamStore& grads,
                    OptState& state) {
  require(params.size() == grads.size(), "gradient length mismatch");
  if (state.first_moment.size() != params.size()) {
    require(state.step_count == 0 && state.first_moment.empty(),
            "optimizer state length mismatch");
    state.first_moment.assign(params.size(), 0.0);
    state.second_moment.assign(params.size(), 0.0);
  }
  for (double g : grads.values) {
    if (!std::isfinite(g)) {
      throw DivergenceError("non-finite gradient entry in optimizer step");
    }
  }
  state.step_count += 1;
  const double t = static_cast<double>(state.step_count);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads.values[i];
    double& m = state.first_moment[i];
    double& v = state.second_moment[i];
    m = state.beta1 * m + (1.0 - state.beta1) * g;
    v = state.beta2 * v + (1.0 - state.beta2) * g * g;
    const double m_hat = m / c1;
    const double v_hat = v / c2;
    params.values[i] -= state.lr * m_hat / (std::sqrt(v_hat) + state.eps);
  }
}

}  // namespace macop
