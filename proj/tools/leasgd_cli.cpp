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

// Command-line front end: run experiments, compare trace directories, audit
// privacy ledgers and check traces against the convergence bound.
//
// Exit codes: 0 success, 1 bound check failed, 2 invalid input, 3 runtime
// abort.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "leasgd/harness.hpp"
#include "leasgd/privacy.hpp"
#include "leasgd/theory.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitBoundFailed = 1;
constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 3;

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw leasgd::ValidationError("cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw leasgd::ValidationError(path.string() + ": " + e.what());
  }
}

int cmd_run(const std::string& config_path,
            const std::optional<std::uint64_t>& master_seed,
            const std::optional<std::string>& mode,
            const std::optional<std::string>& out_dir) {
  leasgd::RunConfig config = leasgd::load_config(config_path);
  if (master_seed) config.master_seed = *master_seed;
  if (mode) config.mode = leasgd::parse_run_mode(*mode);
  if (out_dir) config.output_dir = *out_dir;
  if (config.output_dir.empty()) config.output_dir = "out";

  const leasgd::Experiment ex = leasgd::run_experiment(config);
  leasgd::export_experiment(ex, config.output_dir);

  const json& s = ex.summary;
  std::cout << "algorithm " << config.algorithm << ", " << s["runs"]
            << " run(s) -> " << config.output_dir << '\n'
            << "final mean loss " << s["final_mean_loss"]["mean"] << " +/- "
            << s["final_mean_loss"]["stderr"] << '\n'
            << "vectors transmitted " << s["communication"]["vectors_total"]
            << ", scalars " << s["communication"]["scalars_total"] << '\n';
  if (!s["accuracy"].is_null())
    std::cout << "held-out accuracy mean " << s["accuracy"]["mean"]["mean"]
              << ", max " << s["accuracy"]["max"]["mean"] << '\n';
  if (!s["privacy"].is_null())
    std::cout << "epsilon " << s["privacy"]["epsilon"] << " at delta "
              << s["privacy"]["delta"] << '\n';
  return 0;
}

int cmd_compare(const fs::path& dir_a, const fs::path& dir_b) {
  const json a = read_json(dir_a / "summary.json");
  const json b = read_json(dir_b / "summary.json");
  const int m_a = a["config"]["workers"].get<int>();
  const int m_b = b["config"]["workers"].get<int>();
  if (m_a != m_b)
    throw leasgd::ValidationError("compare: worker counts differ (" +
                                  std::to_string(m_a) + " vs " +
                                  std::to_string(m_b) + ")");
  const double per_round_a =
      a["communication"]["vectors_per_comm_round"].get<double>();
  const double per_round_b =
      b["communication"]["vectors_per_comm_round"].get<double>();
  const auto traces_a = leasgd::load_trace_dir(dir_a);
  const auto traces_b = leasgd::load_trace_dir(dir_b);
  const double loss_a = a["final_mean_loss"]["mean"].get<double>();
  const double loss_b = b["final_mean_loss"]["mean"].get<double>();

  json report{
      {"a", {{"dir", dir_a.string()}, {"algorithm", a["config"]["algorithm"]}}},
      {"b", {{"dir", dir_b.string()}, {"algorithm", b["config"]["algorithm"]}}},
      {"vectors_per_comm_round", {{"a", per_round_a}, {"b", per_round_b}}},
      {"reduction",
       per_round_b > 0.0 ? json(1.0 - per_round_a / per_round_b) : json()},
      {"vectors_total",
       {{"a", traces_a.front().rows.back().vectors_cum},
        {"b", traces_b.front().rows.back().vectors_cum}}},
      {"final_mean_loss", {{"a", loss_a}, {"b", loss_b}, {"delta", loss_a - loss_b}}}};
  std::cout << report.dump(2) << '\n';
  return 0;
}

int cmd_audit(const fs::path& ledger_path, double delta) {
  const leasgd::PrivacyLedger ledger =
      leasgd::ledger_from_json(read_json(ledger_path));
  if (ledger.steps() < 1)
    throw leasgd::ValidationError("audit-privacy: ledger has no steps");
  if (!ledger.config())
    throw leasgd::ValidationError("audit-privacy: ledger has no configuration");
  const leasgd::PrivacyConfig& cfg = *ledger.config();
  std::printf("steps %ld  sigma2 %g  C %g  q %g\n", ledger.steps(), cfg.sigma2,
              cfg.clip_C, cfg.sampling_ratio);
  std::printf("%-10s %-18s %-18s\n", "delta", "eps_moments", "eps_strong_comp");
  const double deltas[] = {1e-3, 1e-4, 1e-5, 1e-6, 1e-7};
  bool listed = false;
  auto line = [&](double d) {
    const double moments = leasgd::spent_epsilon(ledger, d);
    const double strong =
        ledger.is_private()
            ? leasgd::strong_composition_for_gaussian(cfg.sigma2, ledger.steps(), d)
            : std::numeric_limits<double>::infinity();
    std::printf("%-10.3g %-18.10g %-18.10g\n", d, moments, strong);
  };
  for (double d : deltas) {
    line(d);
    listed = listed || d == delta;
  }
  if (!listed) line(delta);
  return 0;
}

int cmd_bound_check(const fs::path& trace_dir, const std::string& config_path,
                    double slack, bool use_private) {
  leasgd::RunConfig config = leasgd::load_config(config_path);
  config.mode = leasgd::RunMode::kTheory;
  const leasgd::PreparedExperiment prepared = leasgd::prepare_experiment(config);
  const auto traces = leasgd::load_trace_dir(trace_dir);
  const leasgd::DistanceSeries series = leasgd::measure_dt(traces);
  const bool private_bound = use_private && prepared.theory_private.has_value();
  const leasgd::TheoryParams& tp =
      private_bound ? *prepared.theory_private : *prepared.theory;
  const leasgd::BoundReport report =
      leasgd::check_bound_dominance(series, tp, slack);

  json out = leasgd::to_json(report);
  out["theory"] = leasgd::to_json(tp);
  out["seeds"] = series.seeds_averaged;
  out["iterations"] = series.d.size() - 1;
  out["private_noise"] = private_bound;
  const std::size_t tail = series.d.size() / 5;
  double tail_sum = 0.0;
  for (std::size_t t = series.d.size() - tail; t < series.d.size(); ++t)
    tail_sum += series.d[t];
  out["tail_mean_d"] = tail > 0 ? json(tail_sum / static_cast<double>(tail)) : json();
  out["noise_floor"] = tp.noise_floor();
  std::cout << out.dump(2) << '\n';
  return report.pass ? 0 : kExitBoundFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Leader/follower elastic-averaging SGD simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> master_seed;
  std::optional<std::string> mode;
  std::optional<std::string> out_dir;
  auto* run = app.add_subcommand("run", "Run an experiment from a TOML/JSON config");
  run->add_option("config", config_path, "Config file")->required()->check(CLI::ExistingFile);
  run->add_option("--master-seed", master_seed, "Override the master seed");
  run->add_option("--mode", mode, "theory | explore")
      ->check(CLI::IsMember({"theory", "explore"}));
  run->add_option("--out", out_dir, "Output directory");

  std::string dir_a, dir_b;
  auto* compare = app.add_subcommand("compare", "Compare two trace directories");
  compare->add_option("dir_a", dir_a)->required()->check(CLI::ExistingDirectory);
  compare->add_option("dir_b", dir_b, "Baseline")->required()->check(CLI::ExistingDirectory);

  std::string ledger_path;
  double delta = 1e-5;
  auto* audit = app.add_subcommand("audit-privacy", "Epsilon table for a privacy ledger");
  audit->add_option("ledger", ledger_path)->required()->check(CLI::ExistingFile);
  audit->add_option("--delta", delta, "Extra delta to report");

  std::string trace_dir;
  double slack = 0.05;
  bool use_private = false;
  auto* bound = app.add_subcommand("bound-check", "Check traces against the d_t bound");
  bound->add_option("trace_dir", trace_dir)->required()->check(CLI::ExistingDirectory);
  bound->add_option("config", config_path)->required()->check(CLI::ExistingFile);
  bound->add_option("--slack", slack, "Relative slack on the bound");
  bound->add_flag("--private", use_private,
                  "Use sigma1^2 + C^2 sigma2^2 for private runs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    if (*run) return cmd_run(config_path, master_seed, mode, out_dir);
    if (*compare) return cmd_compare(dir_a, dir_b);
    if (*audit) return cmd_audit(ledger_path, delta);
    if (*bound) return cmd_bound_check(trace_dir, config_path, slack, use_private);
  } catch (const leasgd::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const leasgd::RuntimeAbort& e) {
    std::cerr << "aborted: " << e.what() << '\n';
    return kExitRuntime;
  } catch (const json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  return 0;
}
