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

// Command-line runner: train / resume / evaluate / analyze.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "macop/analysis.hpp"
#include "macop/checkpoint.hpp"
#include "macop/error.hpp"
#include "macop/orchestrator.hpp"

namespace fs = std::filesystem;
using namespace macop;

namespace {

void emit(const std::string& text, const std::string& out) {
  if (out.empty()) {
    std::cout << text;
  } else {
    write_text_atomic(out, text);
    std::cerr << "wrote " << out << "\n";
  }
}

std::string alpha_csv(const AlphaMatrix& m) {
  std::ostringstream out;
  out.precision(10);
  for (std::size_t k = 0; k < m.size(); ++k) {
    for (std::size_t j = 0; j < m.alpha[k].size(); ++j) {
      out << (j ? "," : "") << m.alpha[k][j];
    }
    out << "\n";
  }
  if (!m.alpha_tilde.empty()) {
    out << "tilde";
    for (double v : m.alpha_tilde) out << "," << v;
    out << "\n";
  }
  return out.str();
}

AlphaMatrix read_alpha(const fs::path& path) {
  AlphaMatrix m;
  std::istringstream in(read_text(path));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ls(line);
    std::string cell;
    bool tilde = false;
    while (std::getline(ls, cell, ',')) {
      if (cell == "tilde") {
        tilde = true;
        continue;
      }
      row.push_back(std::stod(cell));
    }
    (tilde ? m.alpha_tilde : (m.alpha.emplace_back(), m.alpha.back())) = row;
  }
  return m;
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(std::stod(cell));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"macop: continual teammate generation and multi-head ego training"};
  app.require_subcommand(1);

  // train
  auto* train = app.add_subcommand("train", "train an algorithm and write a run directory");
  std::string algo = "macop", env_name, config_path, out_dir, profile;
  std::uint64_t seed = 0;
  train->add_option("--algo", algo, "macop or a baseline name");
  train->add_option("--env", env_name, "lbf1|lbf4|pp1|pp2|cn2|cn3 (overrides config)");
  train->add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
  train->add_option("--profile", profile, "desk|full (when no config file)");
  train->add_option("--seed", seed, "run seed");
  train->add_option("--out", out_dir, "output directory")->required();

  // resume
  auto* resume = app.add_subcommand("resume", "continue an interrupted run");
  std::string resume_dir;
  resume->add_option("--dir", resume_dir, "run directory")->required()->check(CLI::ExistingDirectory);

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "score an ego against an evaluation set");
  std::string ego_dir, eval_out;
  std::vector<std::string> evalset_dirs;
  int episodes = 32, per_head = 4;
  bool random_head = false;
  evaluate->add_option("--ego", ego_dir, "run directory holding ego.json")->required();
  evaluate->add_option("--evalset", evalset_dirs, "run directories whose archives form the set")->required();
  evaluate->add_option("--episodes", episodes, "episodes per pairing");
  evaluate->add_option("--episodes-per-head", per_head, "meta-selection episodes per head");
  evaluate->add_flag("--random-head", random_head, "pick heads uniformly instead of meta-selection");
  evaluate->add_option("--seed", seed, "evaluation seed");
  evaluate->add_option("--out", eval_out, "CSV output (stdout if absent)");

  // analyze
  auto* analyze = app.add_subcommand("analyze", "metrics over trained artifacts");
  analyze->require_subcommand(1);
  std::string alpha_path, an_out;
  auto* bwt = analyze->add_subcommand("bwt", "backward transfer of an alpha matrix CSV");
  bwt->add_option("--alpha", alpha_path, "alpha CSV")->required()->check(CLI::ExistingFile);
  auto* fwt = analyze->add_subcommand("fwt", "forward transfer of an alpha matrix CSV");
  fwt->add_option("--alpha", alpha_path, "alpha CSV with a 'tilde' row")->required()->check(CLI::ExistingFile);

  auto* seq = analyze->add_subcommand("sequence", "train through a run's archive and write the alpha matrix");
  std::string seq_run, method = "macop";
  std::size_t seq_count = 6;
  bool with_tilde = false;
  seq->add_option("--run", seq_run, "run directory supplying the groups")->required();
  seq->add_option("--method", method, "macop|finetune|single_head|ewc|clear");
  seq->add_option("--count", seq_count, "number of groups in the sequence");
  seq->add_option("--config", config_path, "JSON config file");
  seq->add_flag("--with-tilde", with_tilde, "also train single-group reference egos");
  seq->add_option("--seed", seed, "seed");
  seq->add_option("--out", an_out, "CSV output");

  auto* xplay = analyze->add_subcommand("crossplay", "cross-play matrix of a run's groups");
  std::string xp_run, source = "population";
  int n_eval = 8;
  xplay->add_option("--run", xp_run, "run directory")->required();
  xplay->add_option("--source", source, "population|archive")->check(CLI::IsMember({"population", "archive"}));
  xplay->add_option("--episodes", n_eval, "episodes per cell");
  xplay->add_option("--seed", seed, "seed");
  xplay->add_option("--out", an_out, "CSV output");

  auto* theory = analyze->add_subcommand("theory", "numerical checks of the similarity bounds");
  theory->add_option("--seed", seed, "seed");
  theory->add_option("--out", an_out, "report output");

  auto* ranksum = analyze->add_subcommand("rank-sum", "two-sided Wilcoxon rank-sum test");
  std::string sample_a, sample_b;
  ranksum->add_option("--a", sample_a, "comma-separated sample")->required();
  ranksum->add_option("--b", sample_b, "comma-separated sample")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) {
      MacopConfig config = config_path.empty()
                               ? profile_config(profile.empty() ? "desk" : profile)
                               : load_config(config_path);
      if (!env_name.empty()) config.env = env_name;
      config.validate();
      const RunState s = run_algo(parse_algo(algo), config, seed, fs::path(out_dir));
      std::cout << "finished " << run_id(s.algo, s.seed) << ": iterations="
                << s.iteration << " heads=" << s.ego.head_count()
                << " archive=" << s.archive.entries.size() << "\n";
    } else if (*resume) {
      const RunState s = resume_run(resume_dir);
      std::cout << "finished " << run_id(s.algo, s.seed) << ": iterations="
                << s.iteration << " heads=" << s.ego.head_count() << "\n";
    } else if (*evaluate) {
      const RunState owner = load_run(ego_dir);
      std::vector<fs::path> dirs(evalset_dirs.begin(), evalset_dirs.end());
      const EvalSet set = build_eval_set(dirs);
      require(set.env == owner.config.env, "evaluation set environment differs from the ego's");
      const GridEnv env = make_env(scenario_preset(set.env));
      Rng rng(seed);
      const OverallResult r =
          evaluate_overall(env, owner.ego, set, episodes, per_head,
                           random_head || owner.random_head_eval, rng,
                           owner.config.frame_stack);
      emit(r.to_csv(), eval_out);
    } else if (*analyze) {
      if (*bwt || *fwt) {
        const TransferMetrics m = continual_metrics(read_alpha(alpha_path));
        std::cout << (*bwt ? "bwt," : "fwt,") << (*bwt ? m.bwt : m.fwt) << "\n";
      } else if (*seq) {
        const RunState run = load_run(seq_run);
        const MacopConfig config = config_path.empty() ? run.config : load_config(config_path);
        std::vector<TeammateGroup> groups;
        for (const auto& e : run.archive.entries) {
          if (groups.size() == seq_count) break;
          groups.push_back(e.group);
        }
        const GridEnv env = make_env(scenario_preset(run.archive.env));
        Rng rng(seed);
        const AlphaMatrix m = continual_sequence(env, groups, config, parse_ego_method(method),
                                                 with_tilde, rng);
        emit(alpha_csv(m), an_out);
      } else if (*xplay) {
        const RunState run = load_run(xp_run);
        std::vector<TeammateGroup> groups;
        std::vector<std::string> labels;
        if (source == "population") {
          groups = run.population.members;
        } else {
          for (const auto& e : run.archive.entries) groups.push_back(e.group);
        }
        for (const auto& g : groups) labels.push_back(std::to_string(g.id));
        const GridEnv env = make_env(scenario_preset(run.config.env));
        Rng rng(seed);
        emit(crossplay_matrix(env, groups, labels, n_eval, rng, run.config.frame_stack).to_csv(),
             an_out);
      } else if (*theory) {
        Rng rng(seed);
        emit(verify_theory(rng).text(), an_out);
      } else if (*ranksum) {
        const auto a = parse_list(sample_a);
        const auto b = parse_list(sample_b);
        const RankSumResult r = wilcoxon_rank_sum(a, b);
        std::cout << "rank_sum," << r.rank_sum << "\nz," << r.statistic
                  << "\np_value," << r.p_value << "\nverdict," << r.verdict << "\n";
      }
    }
  } catch (const ContractError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 3;
  } catch (const DivergenceError& e) {
    std::cerr << "diverged: " << e.what() << "\n";
    return 4;
  }
  return 0;
}
