// Copyright 2026 The LEASGD Simulator Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef LEASGD_HARNESS_HPP_
#define LEASGD_HARNESS_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "leasgd/optimizer.hpp"
#include "leasgd/problem.hpp"
#include "leasgd/theory.hpp"
#include "leasgd/trace.hpp"

namespace leasgd {

enum class RunMode { kTheory, kExplore };
RunMode parse_run_mode(const std::string& name);
std::string to_string(RunMode mode);

struct ProblemSpec {
  ProblemKind kind = ProblemKind::kQuadratic;
  std::uint64_t seed = 1;  // problem and data generation, shared by all runs
  // quadratic
  long dimension = 10;
  double mu = 1.0;
  double lipschitz = 3.0;
  double offset_scale = 1.0;  // scales b; 0 puts w* exactly at the origin
  long samples_per_worker = 64;
  double noise_scale = 1.0;
  // logistic / mlp
  std::string csv_path;  // empty = synthetic blobs
  long samples = 1000;
  long features = 5;
  double separation = 2.0;
  long classes = 2;
  double reg_lambda = 0.01;
  double heldout = 0.2;
};

struct PrivacySpec {
  double clip_C = 1.0;
  double sigma2 = 4.0;
  double delta = 1e-5;
};

struct RunConfig {
  std::string algorithm = "leasgd_sync";  // leasgd_sync|leasgd_async|dpsgd|local_sgd
  RunMode mode = RunMode::kExplore;
  int workers = 5;
  int followers = 1;
  long batch_size = 0;  // 0 = full shard
  double init_scale = 1.0;
  HyperParams hp;
  ProblemSpec problem;
  std::optional<PrivacySpec> privacy;
  std::vector<double> async_rates;
  std::vector<std::uint64_t> seeds{0};
  std::uint64_t master_seed = 0;
  int sigma1_trials = 100;
  std::string output_dir;

  // Module-level checks; theory-mode preconditions are checked by
  // prepare_experiment once the problem exists.
  void validate() const;
};

// Accepts JSON or TOML (by extension; otherwise JSON is tried first).
// Unknown keys are rejected.
RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const RunConfig& config);

// Master seed of one run in the ensemble.
std::uint64_t seed_for(std::uint64_t master_seed, std::uint64_t run_seed);

struct PreparedExperiment {
  RunConfig config;
  RunSetup setup;
  std::optional<Dataset> heldout;         // classification kinds only
  std::optional<TheoryParams> theory;     // set when the preconditions hold
  std::optional<TheoryParams> theory_private;  // sigma1^2 + C^2 sigma2^2
  double sigma1_sq = 0.0;
  std::vector<std::string> warnings;
};

// Builds the problem, shards and setup. In theory mode every convergence
// precondition violation throws; in explore mode it becomes a warning.
PreparedExperiment prepare_experiment(const RunConfig& config);

// Full-vector gradient-noise bound at w* and the initial points of every
// seed, maximised over shards; 0 for full-batch runs.
double estimate_experiment_sigma1(const PreparedExperiment& prepared);

RunTrace run_one(const PreparedExperiment& prepared, std::uint64_t run_seed);

struct Experiment {
  std::vector<RunTrace> traces;
  nlohmann::json summary;
};

Experiment run_experiment(const RunConfig& config);
Experiment run_experiment(const PreparedExperiment& prepared);

struct CommStats {
  int workers = 0;
  long comm_rounds = 0;
  long vectors_total = 0;
  long scalars_total = 0;
  double vectors_per_comm_round = 0.0;
  double mean_vectors_per_iteration = 0.0;
  std::optional<double> reduction_vs_dpsgd;  // 1 - ours / baseline per round
};

CommStats comm_accounting(const RunTrace& trace);
CommStats comm_accounting(const RunTrace& trace, const RunTrace& dpsgd);

struct Stat {
  double mean = 0.0;
  double stderr_ = 0.0;
};
// Mean and sample-std / sqrt(n) (0 for n = 1).
Stat mean_stderr(std::span<const double> values);

// --- export -----------------------------------------------------------------

// Exact CSV header of per-run traces.
inline constexpr const char* kTraceCsvHeader =
    "t,mean_loss,d_t,vectors_cum,scalars_cum,epsilon";

// Row t = 0 carries the initial state; rows 1..T follow.
std::string trace_to_csv(const RunTrace& trace);
RunTrace trace_from_csv(const std::string& text);
RunTrace read_trace_csv(const std::filesystem::path& path);

// Writes run_<seed>.csv per run, summary.json, loss_vs_vectors.csv and,
// for private runs, privacy_ledger.json. An empty ensemble is an error and
// nothing is written.
void export_experiment(const Experiment& experiment,
                       const std::filesystem::path& dir);

// Seed-averaged (vectors_cum, mean_loss) pairs, one per iteration.
std::string loss_vs_vectors_csv(std::span<const RunTrace> traces);

// Traces of a directory written by export_experiment, sorted by seed.
std::vector<RunTrace> load_trace_dir(const std::filesystem::path& dir);

}  // namespace leasgd

#endif  // LEASGD_HARNESS_HPP_
