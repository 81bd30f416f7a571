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

#include "macop/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "macop/error.hpp"

namespace macop {
namespace {

using nlohmann::json;

// Every serialized field, in file order. `profile` is handled separately.
template <class Config, class Visitor>
void visit_fields(Config& c, Visitor&& v) {
  v("env", c.env);
  v("n_p", c.n_p);
  v("alpha_div", c.alpha_div);
  v("alpha_incom", c.alpha_incom);
  v("alpha_reg", c.alpha_reg);
  v("reg_p", c.reg_p);
  v("lambda", c.lambda);
  v("xi", c.xi);
  v("n_min", c.n_min);
  v("n_max", c.n_max);
  v("t_tm", c.t_tm);
  v("t_ego", c.t_ego);
  v("pretrain_steps", c.pretrain_steps);
  v("gamma", c.gamma);
  v("temperature", c.temperature);
  v("batch_size", c.batch_size);
  v("buffer_capacity", c.buffer_capacity);
  v("lr", c.lr);
  v("target_interval", c.target_interval);
  v("updates_per_round", c.updates_per_round);
  v("frame_stack", c.frame_stack);
  v("eps_start", c.eps_start);
  v("eps_end", c.eps_end);
  v("eps_decay_fraction", c.eps_decay_fraction);
  v("jsd_max_obs", c.jsd_max_obs);
  v("hidden_dims", c.hidden_dims);
  v("head_hidden_dims", c.head_hidden_dims);
  v("ego_self_play", c.ego_self_play);
  v("eval_episodes", c.eval_episodes);
  v("select_episodes", c.select_episodes);
  v("meta_episodes_per_head", c.meta_episodes_per_head);
  v("expansion_eval_episodes", c.expansion_eval_episodes);
  v("baseline_population", c.baseline_population);
  v("baseline_population_steps", c.baseline_population_steps);
  v("baseline_ego_steps", c.baseline_ego_steps);
  v("ewc_mu", c.ewc_mu);
  v("fisher_batches", c.fisher_batches);
  v("rehearsal_capacity", c.rehearsal_capacity);
}

}  // namespace

void MacopConfig::validate() const {
  scenario_preset(env);  // throws on unknown names
  require(n_p >= 1, "n_p must be >= 1");
  require(n_min >= 1 && n_min <= n_max, "need 1 <= n_min <= n_max");
  require(t_tm > 0 && t_ego > 0 && pretrain_steps >= 0,
          "budgets must be positive");
  require(alpha_div >= 0 && alpha_incom >= 0 && alpha_reg >= 0 &&
              lambda >= 0 && xi >= 0 && ewc_mu >= 0,
          "coefficients must be >= 0");
  require(reg_p >= 1.0, "reg_p must be >= 1");
  require(gamma >= 0.0 && gamma <= 1.0, "gamma must lie in [0, 1]");
  require(temperature > 0.0, "temperature must be > 0");
  require(batch_size >= 1 && buffer_capacity >= 1, "batch and buffer >= 1");
  require(lr > 0.0 && target_interval >= 1, "lr > 0, target_interval >= 1");
  require(frame_stack >= 1, "frame_stack must be >= 1");
  require(updates_per_round >= 1, "updates_per_round must be >= 1");
  require(eval_episodes >= 1 && select_episodes >= 1 &&
              meta_episodes_per_head >= 1 && expansion_eval_episodes >= 1,
          "episode counts must be >= 1");
  require(baseline_population >= 1 && baseline_population_steps > 0 &&
              baseline_ego_steps > 0,
          "baseline budgets must be positive");
  require(fisher_batches >= 1 && rehearsal_capacity >= 1,
          "fisher_batches and rehearsal_capacity must be >= 1");
}

MacopConfig profile_config(const std::string& profile) {
  MacopConfig c;
  if (profile == "desk") return c;
  if (profile == "full") {
    c.profile = "full";
    c.n_min = 4;
    c.n_max = 10;
    c.t_tm = 500000;
    c.t_ego = 125000;
    c.pretrain_steps = 500000;
    c.baseline_population_steps = 1000000;
    c.baseline_ego_steps = 750000;
    c.batch_size = 32;
    c.target_interval = 200;
    c.updates_per_round = 1;
    c.hidden_dims = {64, 64};
    return c;
  }
  throw ContractError("unknown profile: " + profile);
}

MacopConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ContractError(std::string("config is not valid JSON: ") + e.what());
  }
  require(j.is_object(), "config must be a JSON object");
  MacopConfig c = profile_config(j.value("profile", std::string("desk")));
  std::set<std::string> known{"profile"};
  visit_fields(c, [&](const char* key, auto& field) {
    known.insert(key);
    if (!j.contains(key)) return;
    try {
      field = j.at(key).get<std::remove_reference_t<decltype(field)>>();
    } catch (const json::exception& e) {
      throw ContractError(std::string("bad value for config key '") + key +
                          "': " + e.what());
    }
  });
  for (const auto& item : j.items()) {
    if (!known.count(item.key())) {
      throw ContractError("unknown config key: " + item.key());
    }
  }
  c.validate();
  return c;
}

MacopConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string config_to_json(const MacopConfig& config) {
  json j;
  j["profile"] = config.profile;
  visit_fields(config, [&](const char* key, const auto& field) {
    j[key] = field;
  });
  return j.dump(2);
}

NetSpec net_spec_for(const MacopConfig& config, const GridEnv& env) {
  NetSpec spec;
  spec.input_dim = network_input_dim(env, config.frame_stack);
  spec.hidden_dims = config.hidden_dims;
  spec.head_hidden_dims = config.head_hidden_dims;
  spec.output_dim = kNumActions;
  spec.validate();
  return spec;
}

TeammateTrainConfig teammate_config(const MacopConfig& c) {
  TeammateTrainConfig t;
  t.alpha_div = c.alpha_div;
  t.alpha_incom = c.alpha_incom;
  t.gamma = c.gamma;
  t.temperature = c.temperature;
  t.batch_size = c.batch_size;
  t.buffer_capacity = c.buffer_capacity;
  t.lr = c.lr;
  t.target_interval = c.target_interval;
  t.updates_per_round = c.updates_per_round;
  t.frame_stack = c.frame_stack;
  t.eps_start = c.eps_start;
  t.eps_end = c.eps_end;
  t.eps_decay_fraction = c.eps_decay_fraction;
  t.jsd_max_obs = c.jsd_max_obs;
  return t;
}

EgoTrainConfig ego_config(const MacopConfig& c, EgoMethod method) {
  EgoTrainConfig e;
  e.method = method;
  e.alpha_reg = c.alpha_reg;
  e.reg_p = c.reg_p;
  e.lambda = c.lambda;
  e.ewc_mu = c.ewc_mu;
  e.fisher_batches = c.fisher_batches;
  e.rehearsal_capacity = c.rehearsal_capacity;
  e.expansion_eval_episodes = c.expansion_eval_episodes;
  e.use_self_play = c.ego_self_play;
  e.gamma = c.gamma;
  e.batch_size = c.batch_size;
  e.buffer_capacity = c.buffer_capacity;
  e.lr = c.lr;
  e.target_interval = c.target_interval;
  e.updates_per_round = c.updates_per_round;
  e.frame_stack = c.frame_stack;
  e.eps_start = c.eps_start;
  e.eps_end = c.eps_end;
  e.eps_decay_fraction = c.eps_decay_fraction;
  return e;
}

}  // namespace macop
