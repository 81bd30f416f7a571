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

#include "macop/orchestrator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <limits>

#include "json_io.hpp"
#include "macop/error.hpp"

namespace macop {

using nlohmann::json;

namespace {

constexpr Algo kAlgos[] = {
    Algo::kMacop,   Algo::kFcp,        Algo::kTrajedi,    Algo::kLipo,
    Algo::kFinetune, Algo::kSingleHead, Algo::kRandomHead, Algo::kEwc,
    Algo::kClear,   Algo::kNoIncom,    Algo::kNoDiv,      Algo::kNoIncomDiv,
    Algo::kNoReg,
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

TeammateGroup frozen_copy(const TeammateGroup& g) {
  TeammateGroup out;
  out.id = g.id;
  out.lineage = g.lineage;
  out.generation = g.generation;
  out.tm_net = g.tm_net;
  out.comp_ego_net = g.comp_ego_net;
  out.sp_return_cache = g.sp_return_cache;
  out.xp_return_cache = g.xp_return_cache;
  return out;
}

// Fills both return caches of a group against the current ego.
MemberLog evaluate_member(const GridEnv& env, const EgoPolicy& ego,
                          TeammateGroup& g, int n_eval, int episodes_per_head,
                          Rng& rng, int frame_stack) {
  MemberLog log;
  log.id = g.id;
  log.sp = self_play_return(env, g, n_eval, rng, frame_stack);
  if (ego.head_count() > 0) {
    const QNet net = ego_for_teammate(env, ego, g.tm_net, episodes_per_head,
                                      false, rng, frame_stack);
    log.xp = cross_play_return(env, net, g, n_eval, rng, frame_stack);
  } else {
    log.xp = {std::numeric_limits<double>::quiet_NaN(),
              std::numeric_limits<double>::quiet_NaN()};
  }
  g.sp_return_cache = log.sp;
  g.xp_return_cache = log.xp;
  return log;
}

std::string fmt_real(double v) {
  if (std::isnan(v)) return "";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

const char* algo_name(Algo a) {
  switch (a) {
    case Algo::kMacop: return "macop";
    case Algo::kFcp: return "fcp";
    case Algo::kTrajedi: return "trajedi";
    case Algo::kLipo: return "lipo";
    case Algo::kFinetune: return "finetune";
    case Algo::kSingleHead: return "single_head";
    case Algo::kRandomHead: return "random_head";
    case Algo::kEwc: return "ewc";
    case Algo::kClear: return "clear";
    case Algo::kNoIncom: return "macop_no_incom";
    case Algo::kNoDiv: return "macop_no_div";
    case Algo::kNoIncomDiv: return "macop_no_incom_div";
    case Algo::kNoReg: return "macop_no_reg";
  }
  return "macop";
}

Algo parse_algo(const std::string& name) {
  for (Algo a : kAlgos) {
    if (name == algo_name(a)) return a;
  }
  throw ContractError("unknown algorithm: " + name);
}

std::vector<Algo> all_algos() { return {std::begin(kAlgos), std::end(kAlgos)}; }

bool is_loop_algo(Algo a) {
  switch (a) {
    case Algo::kFcp:
    case Algo::kTrajedi:
    case Algo::kLipo:
    case Algo::kEwc:
    case Algo::kClear:
      return false;
    default:
      return true;
  }
}

MacopConfig algo_config(Algo a, MacopConfig c) {
  switch (a) {
    case Algo::kNoIncom: c.alpha_incom = 0.0; break;
    case Algo::kNoDiv: c.alpha_div = 0.0; break;
    case Algo::kNoIncomDiv:
      c.alpha_incom = 0.0;
      c.alpha_div = 0.0;
      break;
    case Algo::kNoReg: c.alpha_reg = 0.0; break;
    case Algo::kFcp: c.alpha_div = 0.0; break;
    default: break;
  }
  return c;
}

EgoMethod algo_ego_method(Algo a) {
  switch (a) {
    case Algo::kFinetune:
    case Algo::kFcp:
    case Algo::kTrajedi:
    case Algo::kLipo:
      return EgoMethod::kFinetune;
    case Algo::kSingleHead: return EgoMethod::kSingleHead;
    case Algo::kEwc: return EgoMethod::kEwc;
    case Algo::kClear: return EgoMethod::kClear;
    default: return EgoMethod::kMacop;
  }
}

std::string run_id(Algo algo, std::uint64_t seed) {
  return std::string(algo_name(algo)) + "-" + std::to_string(seed);
}

double criterion_value(const std::vector<double>& xp,
                       const std::vector<double>& sp, bool* warned) {
  require(!xp.empty() && xp.size() == sp.size(),
          "criterion needs matching non-empty return lists");
  double sp_mean = 0.0;
  for (double v : sp) sp_mean += v;
  sp_mean /= static_cast<double>(sp.size());
  if (warned) *warned = false;
  if (sp_mean <= 1e-9) {
    if (warned) *warned = true;
    std::cerr << "warning: mean self-play return " << sp_mean
              << " <= 1e-9; stopping criterion set to +inf\n";
    return std::numeric_limits<double>::infinity();
  }
  return *std::min_element(xp.begin(), xp.end()) / sp_mean;
}

double stopping_criterion(const GridEnv& env, const EgoPolicy& ego,
                          const Population& population, int n_eval,
                          int episodes_per_head, Rng& rng, int frame_stack,
                          bool* warned) {
  require(population.size() > 0, "population must not be empty");
  require(ego.head_count() > 0, "ego has no heads");
  std::vector<double> xp, sp;
  for (const auto& g : population.members) {
    const QNet net = ego_for_teammate(env, ego, g.tm_net, episodes_per_head,
                                      false, rng, frame_stack);
    xp.push_back(cross_play_return(env, net, g, n_eval, rng, frame_stack).mean);
    sp.push_back(self_play_return(env, g, n_eval, rng, frame_stack).mean);
  }
  return criterion_value(xp, sp, warned);
}

Population select_population(const GridEnv& env, const Population& parents,
                             const Population& offspring,
                             const EgoPolicy& ego, int n_eval,
                             int episodes_per_head, Rng& rng,
                             int frame_stack) {
  require(parents.size() == offspring.size() && parents.size() > 0,
          "parents and offspring must have the same non-zero size");
  std::vector<TeammateGroup> pool;
  for (const auto& g : parents.members) pool.push_back(frozen_copy(g));
  for (const auto& g : offspring.members) pool.push_back(frozen_copy(g));
  std::vector<SelectionCandidate> cands;
  for (auto& g : pool) {
    const MemberLog m =
        evaluate_member(env, ego, g, n_eval, episodes_per_head, rng, frame_stack);
    cands.push_back({g.id, m.sp.mean, m.xp.mean});
  }
  Population out;
  out.generation = offspring.generation;
  for (std::size_t i : select_survivors(cands, parents.size())) {
    out.members.push_back(std::move(pool[i]));
  }
  return out;
}

MacopRun::MacopRun(const MacopConfig& config, Algo algo, std::uint64_t seed)
    : env_(make_env(scenario_preset(config.env))) {
  require(is_loop_algo(algo), "algorithm does not use the population loop");
  config.validate();
  state_.config = algo_config(algo, config);
  state_.algo = algo;
  state_.seed = seed;
  state_.rng = Rng(seed);
  state_.random_head_eval = algo == Algo::kRandomHead;
  state_.archive.run_id = run_id(algo, seed);
  state_.archive.env = config.env;
  const NetSpec spec = net_spec_for(state_.config, env_);
  state_.ego = EgoPolicy::create(spec, state_.rng);
  state_.population =
      init_population(env_, spec, state_.config.n_p,
                      state_.config.pretrain_steps,
                      teammate_config(state_.config), state_.ids, state_.rng);
}

MacopRun::MacopRun(RunState state)
    : state_(std::move(state)),
      env_(make_env(scenario_preset(state_.config.env))) {}

bool MacopRun::step() {
  if (state_.finished) return false;
  const auto t0 = std::chrono::steady_clock::now();
  const MacopConfig& c = state_.config;
  Rng& rng = state_.rng;
  state_.iteration += 1;

  if (state_.iteration > 1) {
    require(state_.ego.head_count() > 0, "ego has no heads to mutate against");
    std::vector<QNet> ego_nets;
    for (const auto& g : state_.population.members) {
      ego_nets.push_back(ego_for_teammate(env_, state_.ego, g.tm_net,
                                          c.meta_episodes_per_head, false,
                                          rng, c.frame_stack));
    }
    Population offspring =
        mutate(state_.population, env_, ego_nets, c.t_tm, teammate_config(c),
               state_.ids, rng);
    state_.population =
        select_population(env_, state_.population, offspring, state_.ego,
                          c.select_episodes, c.meta_episodes_per_head, rng,
                          c.frame_stack);
  }

  IterationLog log;
  log.iteration = state_.iteration;
  for (auto& g : state_.population.members) {
    log.members.push_back(evaluate_member(env_, state_.ego, g,
                                          c.select_episodes,
                                          c.meta_episodes_per_head, rng,
                                          c.frame_stack));
  }
  if (state_.iteration >= c.n_min && state_.ego.head_count() > 0) {
    std::vector<double> xp, sp;
    for (const auto& m : log.members) {
      xp.push_back(m.xp.mean);
      sp.push_back(m.sp.mean);
    }
    log.criterion = criterion_value(xp, sp);
    if (*log.criterion >= c.xi) state_.finished = true;
  }

  if (!state_.finished) {
    const EgoTrainConfig ecfg = ego_config(c, algo_ego_method(state_.algo));
    for (const auto& g : state_.population.members) {
      continual_train(state_.ego, env_, g, c.t_ego, ecfg, rng);
      state_.archive.entries.push_back({state_.iteration, frozen_copy(g)});
    }
    if (state_.iteration >= c.n_max) state_.finished = true;
  }
  log.head_count = state_.ego.head_count();
  log.archive_size = state_.archive.entries.size();
  log.wall_seconds = seconds_since(t0);
  state_.logs.push_back(std::move(log));
  return !state_.finished;
}

void MacopRun::run_to_end() {
  while (step()) {
  }
}

// Population baselines and the single-head consolidation baselines.
RunState run_population_baseline(Algo algo, const MacopConfig& config,
                                 std::uint64_t seed);

RunState run_algo(Algo algo, const MacopConfig& config, std::uint64_t seed,
                  const std::optional<std::filesystem::path>& out_dir) {
  config.validate();
  if (out_dir) {
    std::filesystem::create_directories(*out_dir);
    write_text_atomic(*out_dir / "config.json", config_to_json(config));
    write_text_atomic(*out_dir / "run.json",
                      json{{"algo", algo_name(algo)}, {"seed", seed}}.dump(2));
  }
  if (!is_loop_algo(algo)) {
    RunState s = run_population_baseline(algo, config, seed);
    if (out_dir) save_run(*out_dir, s);
    return s;
  }
  MacopRun run(config, algo, seed);
  if (out_dir) save_run(*out_dir, run.state());
  while (run.step()) {
    if (out_dir) save_run(*out_dir, run.state());
  }
  if (out_dir) save_run(*out_dir, run.state());
  return run.state();
}

RunState resume_run(const std::filesystem::path& dir) {
  if (!std::filesystem::exists(dir / "state.json")) {
    // Interrupted before the first checkpoint: start over.
    const json meta = parse_json(read_text(dir / "run.json"), "run.json");
    const MacopConfig config = load_config(dir / "config.json");
    return run_algo(parse_algo(meta.at("algo").get<std::string>()), config,
                    meta.at("seed").get<std::uint64_t>(), dir);
  }
  RunState s = load_run(dir);
  if (s.finished) return s;
  require(is_loop_algo(s.algo), "only loop runs checkpoint mid-way");
  MacopRun run(std::move(s));
  while (run.step()) save_run(dir, run.state());
  save_run(dir, run.state());
  return run.state();
}

std::string log_csv(const RunState& state, bool include_wall) {
  std::string out =
      "iteration,member_id,sp_mean,sp_std,xp_mean,xp_std,C,head_count,"
      "archive_size,wall_seconds\n";
  for (const auto& log : state.logs) {
    for (const auto& m : log.members) {
      out += std::to_string(log.iteration) + "," + std::to_string(m.id) + "," +
             fmt_real(m.sp.mean) + "," + fmt_real(m.sp.std) + "," +
             fmt_real(m.xp.mean) + "," + fmt_real(m.xp.std) + "," +
             (log.criterion ? fmt_real(*log.criterion) : "") + "," +
             std::to_string(log.head_count) + "," +
             std::to_string(log.archive_size) + "," +
             (include_wall ? fmt_real(log.wall_seconds) : "") + "\n";
    }
  }
  return out;
}

void save_run(const std::filesystem::path& dir, const RunState& s) {
  json logs = json::array();
  for (const auto& log : s.logs) {
    json members = json::array();
    for (const auto& m : log.members) {
      members.push_back({{"id", m.id}, {"sp", m.sp}, {"xp", m.xp}});
    }
    logs.push_back({{"iteration", log.iteration},
                    {"members", members},
                    {"criterion", log.criterion ? real_to_json(*log.criterion)
                                                : json(nullptr)},
                    {"has_criterion", log.criterion.has_value()},
                    {"head_count", log.head_count},
                    {"archive_size", log.archive_size},
                    {"wall_seconds", log.wall_seconds}});
  }
  const json state{{"algo", algo_name(s.algo)},
                   {"seed", s.seed},
                   {"config", parse_json(config_to_json(s.config), "config")},
                   {"population", s.population.members},
                   {"generation", s.population.generation},
                   {"next_id", s.ids.peek()},
                   {"rng", s.rng.state()},
                   {"iteration", s.iteration},
                   {"finished", s.finished},
                   {"random_head_eval", s.random_head_eval},
                   {"logs", logs}};
  std::filesystem::create_directories(dir);
  save_ego(dir / "ego.json", s.ego);
  save_archive(dir / "archive.json", s.archive);
  write_text_atomic(dir / "log.csv", log_csv(s));
  // Written last: its presence marks a complete checkpoint.
  write_text_atomic(dir / "state.json", state.dump());
}

RunState load_run(const std::filesystem::path& dir) {
  const json j = parse_json(read_text(dir / "state.json"), "run state");
  RunState s;
  try {
    s.algo = parse_algo(j.at("algo").get<std::string>());
    s.seed = j.at("seed").get<std::uint64_t>();
    s.config = parse_config(j.at("config").dump());
    s.population.members = j.at("population").get<std::vector<TeammateGroup>>();
    s.population.generation = j.at("generation").get<int>();
    s.ids = IdCounter(j.at("next_id").get<std::int64_t>());
    s.rng.restore(j.at("rng").get<std::string>());
    s.iteration = j.at("iteration").get<int>();
    s.finished = j.at("finished").get<bool>();
    s.random_head_eval = j.at("random_head_eval").get<bool>();
    for (const auto& l : j.at("logs")) {
      IterationLog log;
      log.iteration = l.at("iteration").get<int>();
      for (const auto& m : l.at("members")) {
        log.members.push_back({m.at("id").get<std::int64_t>(),
                               m.at("sp").get<ReturnStats>(),
                               m.at("xp").get<ReturnStats>()});
      }
      if (l.at("has_criterion").get<bool>()) {
        log.criterion = real_from_json(l.at("criterion"));
      }
      log.head_count = l.at("head_count").get<std::size_t>();
      log.archive_size = l.at("archive_size").get<std::size_t>();
      log.wall_seconds = l.at("wall_seconds").get<double>();
      s.logs.push_back(std::move(log));
    }
  } catch (const json::exception& e) {
    throw IoError(std::string("corrupt run state: ") + e.what());
  }
  s.ego = load_ego(dir / "ego.json");
  s.archive = load_archive(dir / "archive.json");
  return s;
}

}  // namespace macop
