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

#ifndef MACOP_ANALYSIS_HPP_
#define MACOP_ANALYSIS_HPP_

// Evaluation protocol and the numbers reported from trained artifacts:
// evaluation-set scores, transfer metrics, cross-play matrices, rank-sum
// tests and numerical checks of the similarity/compatibility bounds.

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "macop/checkpoint.hpp"
#include "macop/config.hpp"
#include "macop/ego.hpp"
#include "macop/teammate.hpp"

namespace macop {

struct EvalEntry {
  std::string run_id;
  TeammateGroup group;
  std::string label() const;
};

struct EvalSet {
  std::string env;
  std::vector<EvalEntry> entries;
};

// Union of archives, deduplicated by (run id, group id).
EvalSet eval_set_from_archives(std::span<const Archive> archives);
// Same, reading archive.json from each run directory.
EvalSet build_eval_set(const std::vector<std::filesystem::path>& run_dirs);

struct EntryResult {
  std::string label;
  ReturnStats stats;
};

struct OverallResult {
  std::vector<EntryResult> entries;
  double grand_mean = 0.0;
  std::string to_csv() const;
};

// Pairs the ego with every entry: head picked by meta-selection (or at
// random), then `episodes_per_pair` greedy episodes.
OverallResult evaluate_overall(const GridEnv& env, const EgoPolicy& ego,
                               const EvalSet& eval_set, int episodes_per_pair,
                               int episodes_per_head, bool random_head,
                               Rng& rng, int frame_stack = 1);

struct AlphaMatrix {
  // alpha[k][j]: after training on group k, return with group j.
  std::vector<std::vector<double>> alpha;
  // alpha_tilde[j]: fresh ego trained on group j alone. May be empty.
  std::vector<double> alpha_tilde;
  std::size_t size() const { return alpha.size(); }
};

struct TransferMetrics {
  double bwt = 0.0;
  double fwt = 0.0;
};

// BWT = 1/(K-1) sum_{k=2..K} 1/(k-1) sum_{j=1..k-1} (a_k^j - a_j^j)
// FWT = 1/(K-1) sum_{k=2..K} 1/(k-1) sum_{j=2..k}   (a_j^j - a~_j)
// FWT is NaN when alpha_tilde is empty.
TransferMetrics continual_metrics(const AlphaMatrix& m);

// Trains one ego through `sequence` and records the full alpha matrix;
// optionally also the single-group reference returns.
AlphaMatrix continual_sequence(const GridEnv& env,
                               std::span<const TeammateGroup> sequence,
                               const MacopConfig& config, EgoMethod method,
                               bool with_alpha_tilde, Rng& rng);

struct CrossPlayMatrix {
  std::vector<std::string> labels;
  // values[i][j]: teammates of group i with the complementary partner of j.
  std::vector<std::vector<double>> values;
  double diagonal_mean() const;
  double off_diagonal_mean() const;
  std::string to_csv() const;
};

CrossPlayMatrix crossplay_matrix(const GridEnv& env,
                                 std::span<const TeammateGroup> groups,
                                 const std::vector<std::string>& labels,
                                 int n_eval, Rng& rng, int frame_stack = 1);

struct RankSumResult {
  double rank_sum = 0.0;   // rank sum of sample a
  double statistic = 0.0;  // normal-approximation z
  double p_value = 1.0;
  std::string verdict;     // "+", "-" or "≈" at the given level
};

// Two-sided Wilcoxon rank-sum test, normal approximation with tie
// correction. Both samples need at least 3 values.
RankSumResult wilcoxon_rank_sum(std::span<const double> a,
                                std::span<const double> b,
                                double level = 0.05);

struct TheoryConfig {
  int similar_pairs = 1000;
  int divergence_pairs = 10000;
  int premise_pairs = 1000;
};

struct TheoryReport {
  int sandwich_checked = 0;
  std::vector<std::string> sandwich_violations;
  double sandwich_worst_slack = 0.0;  // most negative margin seen
  int contrapositive_checked = 0;
  std::vector<std::string> contrapositive_violations;
  int divergence_checked = 0;
  std::vector<std::string> divergence_violations;
  int premise_checked = 0;
  std::vector<std::string> premise_violations;
  std::string text() const;
};

// Exact checks on an enumerable two-state, two-action, horizon-two game.
TheoryReport verify_theory(Rng& rng, const TheoryConfig& config = {});

// Natural-log Jensen-Shannon divergence of two distributions and their
// total variation distance.
double js_divergence(std::span<const double> p, std::span<const double> q);
double tv_distance(std::span<const double> p, std::span<const double> q);

}  // namespace macop

#endif  // MACOP_ANALYSIS_HPP_
