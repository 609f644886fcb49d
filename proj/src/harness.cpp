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

#include "leasgd/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "leasgd/dpsgd.hpp"
#include "toml.hpp"

namespace leasgd {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::uint64_t kRunSeedLabel = 0x52554eULL;  // "RUN"
constexpr std::uint64_t kSigmaSeedLabel = 0x5349474dULL;

const std::set<std::string> kAlgorithms{"leasgd_sync", "leasgd_async",
                                        "dpsgd", "local_sgd"};

// Reads `key` from an object, rejecting unknown keys. Type mismatches are
// reported with the full key path.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object())
      throw ValidationError("config: '" + path_ + "' must be a table");
  }

  template <typename T>
  void get(const std::string& key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ValidationError("config: '" + qualified(key) +
                            "' has the wrong type (" + e.what() + ")");
    }
  }

  bool has(const std::string& key) const { return j_.contains(key); }
  Reader child(const std::string& key) {
    seen_.insert(key);
    return Reader(j_.at(key), qualified(key));
  }

  void finish() const {
    for (const auto& [key, value] : j_.items())
      if (!seen_.count(key))
        throw ValidationError("config: unknown key '" + qualified(key) + "'");
  }

 private:
  std::string qualified(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view s) {
  if (s == "nan") return kNaN;
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ValidationError("trace CSV: bad number '" + std::string(s) + "'");
  return v;
}

long parse_long(std::string_view s) {
  long v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ValidationError("trace CSV: bad integer '" + std::string(s) + "'");
  return v;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    out.push_back(line.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeAbort("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw RuntimeAbort("write failed for '" + path.string() + "'");
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json stat_json(const Stat& s) { return {{"mean", s.mean}, {"stderr", s.stderr_}}; }

// JSON cannot hold NaN; map non-finite values to null.
json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(); }

}  // namespace

RunMode parse_run_mode(const std::string& name) {
  if (name == "theory") return RunMode::kTheory;
  if (name == "explore") return RunMode::kExplore;
  throw ValidationError("mode must be 'theory' or 'explore', got '" + name + "'");
}

std::string to_string(RunMode mode) {
  return mode == RunMode::kTheory ? "theory" : "explore";
}

void RunConfig::validate() const {
  require(kAlgorithms.count(algorithm) == 1,
          "algorithm must be one of leasgd_sync, leasgd_async, dpsgd, "
          "local_sgd (got '" + algorithm + "')");
  require(workers >= 1, "workers must be >= 1");
  require(followers >= 0, "followers must be >= 0");
  if (followers > 0) check_pool_sizes(workers, followers);
  if (algorithm == "dpsgd") require(workers >= 3, "dpsgd needs workers >= 3");
  require(batch_size >= 0, "batch_size must be >= 0");
  require(init_scale >= 0.0, "init_scale must be >= 0");
  hp.validate();
  require(!seeds.empty(), "at least one seed is required");
  require(sigma1_trials >= 30, "sigma1_trials must be >= 30");
  require(async_rates.empty() ||
              async_rates.size() == static_cast<std::size_t>(workers),
          "async.rates needs one rate per worker");
  for (double r : async_rates) require(r > 0.0, "async rates must be > 0");
  if (privacy) {
    require(privacy->clip_C > 0.0, "privacy.clip must be > 0");
    require(privacy->sigma2 >= 0.0, "privacy.sigma2 must be >= 0");
    require(privacy->delta > 0.0 && privacy->delta < 1.0,
            "privacy.delta must be in (0, 1)");
  }
  const ProblemSpec& p = problem;
  if (p.kind == ProblemKind::kQuadratic) {
    require(p.dimension >= 1, "problem.dimension must be >= 1");
    require(p.mu > 0.0 && p.mu <= p.lipschitz,
            "problem: need 0 < mu <= lipschitz");
    require(p.samples_per_worker >= 1, "problem.samples_per_worker must be >= 1");
    require(p.noise_scale >= 0.0, "problem.noise_scale must be >= 0");
    require(batch_size <= p.samples_per_worker,
            "batch_size exceeds problem.samples_per_worker");
  } else {
    require(p.reg_lambda >= 0.0, "problem.reg_lambda must be >= 0");
    require(p.heldout >= 0.0 && p.heldout < 1.0,
            "problem.heldout must be in [0, 1)");
    if (p.csv_path.empty()) {
      require(p.samples >= 2, "problem.samples must be >= 2");
      require(p.features >= 1, "problem.features must be >= 1");
    }
    require(p.classes >= 2, "problem.classes must be >= 2");
    if (p.kind == ProblemKind::kLogistic)
      require(p.classes == 2, "logistic problems are binary");
  }
  if (mode == RunMode::kTheory) {
    require(p.kind != ProblemKind::kMlp,
            "theory mode needs a strongly convex problem (mlp given)");
  }
}

RunConfig parse_config(const json& j) {
  RunConfig c;
  Reader r(j, "");
  std::string mode = to_string(c.mode);
  r.get("algorithm", c.algorithm);
  r.get("mode", mode);
  c.mode = parse_run_mode(mode);
  r.get("workers", c.workers);
  r.get("followers", c.followers);
  r.get("batch_size", c.batch_size);
  r.get("init_scale", c.init_scale);
  r.get("iterations", c.hp.iterations);
  r.get("master_seed", c.master_seed);
  r.get("sigma1_trials", c.sigma1_trials);
  r.get("output_dir", c.output_dir);
  if (r.has("seeds") && r.has("num_seeds"))
    throw ValidationError("config: give either 'seeds' or 'num_seeds', not both");
  r.get("seeds", c.seeds);
  long num_seeds = 0;
  r.get("num_seeds", num_seeds);
  if (j.contains("num_seeds")) {
    require(num_seeds >= 1, "num_seeds must be >= 1");
    c.seeds.clear();
    for (long s = 0; s < num_seeds; ++s)
      c.seeds.push_back(static_cast<std::uint64_t>(s));
  }

  if (r.has("hyper")) {
    Reader h = r.child("hyper");
    h.get("eta", c.hp.eta);
    h.get("rho", c.hp.rho);
    h.get("tau", c.hp.tau);
    h.get("kappa", c.hp.kappa);
    h.get("iterations", c.hp.iterations);
    h.finish();
  }
  if (r.has("problem")) {
    Reader p = r.child("problem");
    ProblemSpec& s = c.problem;
    std::string kind = to_string(s.kind);
    p.get("kind", kind);
    s.kind = parse_problem_kind(kind);
    p.get("seed", s.seed);
    p.get("dimension", s.dimension);
    p.get("mu", s.mu);
    p.get("lipschitz", s.lipschitz);
    p.get("offset_scale", s.offset_scale);
    p.get("samples_per_worker", s.samples_per_worker);
    p.get("noise_scale", s.noise_scale);
    p.get("csv", s.csv_path);
    p.get("samples", s.samples);
    p.get("features", s.features);
    p.get("separation", s.separation);
    p.get("classes", s.classes);
    p.get("reg_lambda", s.reg_lambda);
    p.get("heldout", s.heldout);
    p.finish();
  }
  if (r.has("privacy")) {
    Reader p = r.child("privacy");
    PrivacySpec s;
    bool enabled = true;
    p.get("enabled", enabled);
    p.get("clip", s.clip_C);
    p.get("sigma2", s.sigma2);
    p.get("delta", s.delta);
    p.finish();
    if (enabled) c.privacy = s;
  }
  if (r.has("async")) {
    Reader a = r.child("async");
    a.get("rates", c.async_rates);
    a.finish();
  }
  r.finish();
  c.validate();
  return c;
}

RunConfig load_config(const fs::path& path) {
  const std::string text = read_file(path);
  const std::string ext = path.extension().string();
  auto from_toml = [&]() {
    try {
      const toml::table table = toml::parse(text, path.string());
      std::ostringstream ss;
      ss << toml::json_formatter{table};
      return json::parse(ss.str());
    } catch (const toml::parse_error& e) {
      std::ostringstream ss;
      ss << "config '" << path.string() << "': " << e.description() << " at "
         << e.source().begin;
      throw ValidationError(ss.str());
    }
  };
  json j;
  if (ext == ".toml") {
    j = from_toml();
  } else {
    try {
      j = json::parse(text);
    } catch (const json::parse_error& e) {
      if (ext == ".json")
        throw ValidationError("config '" + path.string() + "': " + e.what());
      j = from_toml();
    }
  }
  return parse_config(j);
}

json to_json(const RunConfig& c) {
  json j{{"algorithm", c.algorithm},
         {"mode", to_string(c.mode)},
         {"workers", c.workers},
         {"followers", c.followers},
         {"batch_size", c.batch_size},
         {"init_scale", c.init_scale},
         {"master_seed", c.master_seed},
         {"seeds", c.seeds},
         {"sigma1_trials", c.sigma1_trials},
         {"hyper",
          {{"eta", c.hp.eta},
           {"rho", c.hp.rho},
           {"tau", c.hp.tau},
           {"kappa", c.hp.kappa},
           {"iterations", c.hp.iterations}}}};
  const ProblemSpec& p = c.problem;
  json pj{{"kind", to_string(p.kind)}, {"seed", p.seed}};
  if (p.kind == ProblemKind::kQuadratic) {
    pj.update({{"dimension", p.dimension},
               {"mu", p.mu},
               {"lipschitz", p.lipschitz},
               {"offset_scale", p.offset_scale},
               {"samples_per_worker", p.samples_per_worker},
               {"noise_scale", p.noise_scale}});
  } else {
    if (!p.csv_path.empty()) pj["csv"] = p.csv_path;
    pj.update({{"samples", p.samples},
               {"features", p.features},
               {"separation", p.separation},
               {"classes", p.classes},
               {"reg_lambda", p.reg_lambda},
               {"heldout", p.heldout}});
  }
  j["problem"] = pj;
  if (c.privacy)
    j["privacy"] = {{"clip", c.privacy->clip_C},
                    {"sigma2", c.privacy->sigma2},
                    {"delta", c.privacy->delta}};
  if (!c.async_rates.empty()) j["async"] = {{"rates", c.async_rates}};
  if (!c.output_dir.empty()) j["output_dir"] = c.output_dir;
  return j;
}

std::uint64_t seed_for(std::uint64_t master_seed, std::uint64_t run_seed) {
  return derive_seed(master_seed, kRunSeedLabel, run_seed);
}

PreparedExperiment prepare_experiment(const RunConfig& config) {
  config.validate();
  PreparedExperiment out;
  out.config = config;
  RunSetup& setup = out.setup;
  const ProblemSpec& ps = config.problem;

  if (ps.kind == ProblemKind::kQuadratic) {
    setup.problem = make_quadratic(ps.dimension, ps.mu, ps.lipschitz, ps.seed);
    if (ps.offset_scale != 1.0) {
      setup.problem.offset *= ps.offset_scale;
      setup.problem.optimum = setup.problem.quad_matrix.ldlt().solve(setup.problem.offset);
    }
    setup.shards = make_quadratic_shards(setup.problem, config.workers,
                                         ps.samples_per_worker, ps.noise_scale,
                                         derive_seed(ps.seed, 2, 0));
  } else {
    Dataset data = ps.csv_path.empty()
                       ? make_blobs(ps.samples, ps.features, ps.separation,
                                    derive_seed(ps.seed, 1, 0))
                       : load_csv_dataset(ps.csv_path);
    require(data.labels.minCoeff() >= 0 && data.labels.maxCoeff() < ps.classes,
            "dataset labels must lie in [0, classes)");
    Dataset train = std::move(data);
    if (ps.heldout > 0.0) {
      auto [tr, te] = split_heldout(train, ps.heldout);
      train = std::move(tr);
      out.heldout = std::move(te);
    }
    require(train.size() >= config.workers,
            "training set smaller than the number of workers");
    setup.shards = shard_dataset(train, config.workers);
    setup.problem = ps.kind == ProblemKind::kLogistic
                        ? make_logistic(train, ps.reg_lambda)
                        : make_mlp(train.features.cols(), ps.classes,
                                   ps.reg_lambda);
  }

  setup.hp = config.hp;
  setup.followers = config.algorithm == "leasgd_sync" ||
                            config.algorithm == "leasgd_async"
                        ? config.followers
                        : 0;
  setup.batch_size = config.batch_size;
  setup.init_scale = config.init_scale;
  setup.async_rates = config.async_rates;
  if (config.privacy) {
    Eigen::Index smallest = setup.shards.front().sample_count();
    for (const DataShard& s : setup.shards)
      smallest = std::min(smallest, s.sample_count());
    PrivacyConfig pc;
    pc.clip_C = config.privacy->clip_C;
    pc.sigma2 = config.privacy->sigma2;
    pc.delta = config.privacy->delta;
    pc.sampling_ratio =
        config.batch_size == 0
            ? 1.0
            : std::min(1.0, static_cast<double>(config.batch_size) /
                                static_cast<double>(smallest));
    setup.privacy = pc;
  }
  setup.validate();

  // Convergence preconditions. Theory mode refuses to run without them.
  const bool theory = config.mode == RunMode::kTheory;
  const int p = setup.followers > 0
                    ? subsystem_leaders(config.workers, setup.followers)
                    : 1;
  if (setup.problem.is_convex() && setup.problem.optimum) {
    try {
      out.sigma1_sq = estimate_experiment_sigma1(out);
      std::vector<Vector> initial;
      for (std::uint64_t s : config.seeds)
        for (const WorkerState& w : init_workers(setup, seed_for(config.master_seed, s)))
          initial.push_back(w.w);
      // A local-SGD baseline has no elastic pull; the bound's p is unused.
      HyperParams hp = setup.hp;
      if (setup.followers == 0) hp.rho = 0.0;
      out.theory = derive_theory_params(setup.problem, hp, p, out.sigma1_sq,
                                        initial);
      // The step-size condition must hold for the largest possible fan-in.
      if (setup.communicates()) {
        const int p_max = config.workers - setup.followers;
        derive_theory_params(setup.problem, hp, p_max, out.sigma1_sq, initial);
      }
      if (setup.privacy)
        out.theory_private = with_privacy_noise(
            *out.theory, setup.privacy->clip_C, setup.privacy->sigma2);
    } catch (const PreconditionViolation& e) {
      if (theory) throw;
      out.warnings.push_back(std::string("precondition violated: ") + e.what());
    }
  } else if (theory) {
    throw PreconditionViolation("known_optimum",
                                "theory mode requires a problem with a known w*");
  } else {
    out.warnings.push_back("no known optimum: d_t and the bound are skipped");
  }
  // Explore mode reports no distances to w*.
  if (!theory) setup.problem.optimum.reset();
  return out;
}

double estimate_experiment_sigma1(const PreparedExperiment& prepared) {
  const RunSetup& setup = prepared.setup;
  const RunConfig& config = prepared.config;
  if (setup.batch_size == 0) return 0.0;
  bool full = true;
  for (const DataShard& s : setup.shards)
    full = full && setup.batch_size >= s.sample_count();
  if (full) return 0.0;

  std::vector<Vector> points;
  if (setup.problem.optimum) points.push_back(*setup.problem.optimum);
  for (const WorkerState& w : init_workers(
           setup, seed_for(config.master_seed, config.seeds.front())))
    points.push_back(w.w);
  RngStream rng = make_stream(derive_seed(config.master_seed, kSigmaSeedLabel, 0),
                              StreamPurpose::kAuxiliary);
  double worst = 0.0;
  for (const DataShard& shard : setup.shards) {
    const Sigma1Estimate est =
        estimate_sigma1(setup.problem, points, shard, setup.batch_size,
                        config.sigma1_trials, rng);
    worst = std::max(worst, est.bound);
  }
  return worst;
}

RunTrace run_one(const PreparedExperiment& prepared, std::uint64_t run_seed) {
  const std::uint64_t seed = seed_for(prepared.config.master_seed, run_seed);
  const std::string& algo = prepared.config.algorithm;
  RunTrace trace;
  try {
    if (algo == "leasgd_sync") {
      trace = run_sync(prepared.setup, seed);
    } else if (algo == "leasgd_async") {
      trace = run_async(prepared.setup, seed);
    } else if (algo == "dpsgd") {
      trace = run_dpsgd(prepared.setup, seed);
    } else {
      trace = run_local(prepared.setup, seed);
    }
  } catch (const RuntimeAbort& e) {
    throw RuntimeAbort(algo + " run with seed " + std::to_string(run_seed) +
                       ": " + e.what());
  }
  trace.seed = run_seed;
  return trace;
}

Experiment run_experiment(const RunConfig& config) {
  return run_experiment(prepare_experiment(config));
}

Stat mean_stderr(std::span<const double> values) {
  require(!values.empty(), "mean_stderr: no values");
  const auto n = static_cast<double>(values.size());
  double sum = 0.0;
  for (double v : values) sum += v;
  Stat s;
  s.mean = sum / n;
  if (values.size() > 1) {
    double sq = 0.0;
    for (double v : values) sq += (v - s.mean) * (v - s.mean);
    s.stderr_ = std::sqrt(sq / (n - 1.0)) / std::sqrt(n);
  }
  return s;
}

Experiment run_experiment(const PreparedExperiment& prepared) {
  const RunConfig& config = prepared.config;
  for (const std::string& w : prepared.warnings)
    std::cerr << "warning: " << w << '\n';

  Experiment ex;
  for (std::uint64_t s : config.seeds) ex.traces.push_back(run_one(prepared, s));

  std::vector<double> final_loss, final_d, acc_mean, acc_max, eps;
  for (const RunTrace& tr : ex.traces) {
    const TraceRow& last = tr.rows.back();
    final_loss.push_back(last.mean_loss);
    if (std::isfinite(last.d_t)) final_d.push_back(last.d_t);
    if (std::isfinite(last.epsilon) || std::isinf(last.epsilon))
      eps.push_back(last.epsilon);
    if (prepared.heldout) {
      double sum = 0.0;
      double best = 0.0;
      for (const Vector& w : tr.final_params) {
        const double a = accuracy(prepared.setup.problem, w, *prepared.heldout);
        sum += a;
        best = std::max(best, a);
      }
      acc_mean.push_back(sum / static_cast<double>(tr.final_params.size()));
      acc_max.push_back(best);
    }
  }

  json& s = ex.summary;
  s["config"] = to_json(config);
  s["runs"] = ex.traces.size();
  s["final_mean_loss"] = stat_json(mean_stderr(final_loss));
  s["final_d_t"] = final_d.empty() ? json() : stat_json(mean_stderr(final_d));
  if (!acc_mean.empty()) {
    s["accuracy"] = {{"mean", stat_json(mean_stderr(acc_mean))},
                     {"max", stat_json(mean_stderr(acc_max))}};
  } else {
    s["accuracy"] = json();
  }
  const CommStats comm = comm_accounting(ex.traces.front());
  s["communication"] = {{"comm_rounds", comm.comm_rounds},
                        {"vectors_total", comm.vectors_total},
                        {"scalars_total", comm.scalars_total},
                        {"vectors_per_comm_round", comm.vectors_per_comm_round},
                        {"mean_vectors_per_iteration",
                         comm.mean_vectors_per_iteration},
                        {"recat_rounds", ex.traces.front().recat_rounds}};
  if (prepared.setup.privacy) {
    const PrivacyConfig& pc = *prepared.setup.privacy;
    double worst = 0.0;
    for (double e : eps) worst = std::max(worst, e);
    s["privacy"] = {{"epsilon", number_or_null(worst)},
                    {"delta", pc.delta},
                    {"sigma2", pc.sigma2},
                    {"clip", pc.clip_C},
                    {"sampling_ratio", pc.sampling_ratio},
                    {"steps", ex.traces.front().ledger
                                  ? ex.traces.front().ledger->steps()
                                  : 0}};
  } else {
    s["privacy"] = json();
  }
  if (prepared.theory) {
    json t = to_json(*prepared.theory);
    if (prepared.theory_private)
      t["sigma1_sq_private"] = prepared.theory_private->sigma1_sq;
    s["theory"] = t;
  } else {
    s["theory"] = json();
  }
  s["warnings"] = prepared.warnings;
  return ex;
}

CommStats comm_accounting(const RunTrace& trace) {
  require(!trace.rows.empty(), "comm_accounting: empty trace");
  CommStats c;
  c.workers = trace.workers;
  c.comm_rounds = trace.comm_rounds;
  c.vectors_total = trace.rows.back().vectors_cum;
  c.scalars_total = trace.rows.back().scalars_cum;
  c.vectors_per_comm_round =
      c.comm_rounds > 0
          ? static_cast<double>(c.vectors_total) / static_cast<double>(c.comm_rounds)
          : 0.0;
  c.mean_vectors_per_iteration = static_cast<double>(c.vectors_total) /
                                 static_cast<double>(trace.rows.size());
  return c;
}

CommStats comm_accounting(const RunTrace& trace, const RunTrace& dpsgd) {
  require(trace.workers == dpsgd.workers,
          "comm_accounting: traces have different worker counts (" +
              std::to_string(trace.workers) + " vs " +
              std::to_string(dpsgd.workers) + ")");
  CommStats c = comm_accounting(trace);
  const CommStats base = comm_accounting(dpsgd);
  require(base.vectors_per_comm_round > 0.0,
          "comm_accounting: baseline transmitted nothing");
  c.reduction_vs_dpsgd =
      1.0 - c.vectors_per_comm_round / base.vectors_per_comm_round;
  return c;
}

std::string trace_to_csv(const RunTrace& trace) {
  std::string out = kTraceCsvHeader;
  out += '\n';
  auto row = [&](long t, double loss, double d, long vec, long sc, double eps) {
    out += std::to_string(t);
    out += ',';
    out += format_double(loss);
    out += ',';
    out += format_double(d);
    out += ',';
    out += std::to_string(vec);
    out += ',';
    out += std::to_string(sc);
    out += ',';
    out += format_double(eps);
    out += '\n';
  };
  const bool priv = trace.ledger || (!trace.rows.empty() &&
                                     std::isfinite(trace.rows.front().epsilon));
  row(0, trace.initial_mean_loss, trace.initial_d, 0, 0, priv ? 0.0 : kNaN);
  for (const TraceRow& r : trace.rows)
    row(r.t, r.mean_loss, r.d_t, r.vectors_cum, r.scalars_cum, r.epsilon);
  return out;
}

RunTrace trace_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kTraceCsvHeader)
    throw ValidationError(std::string("trace CSV: header must be '") +
                          kTraceCsvHeader + "'");
  RunTrace trace;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cols = split_commas(line);
    if (cols.size() != 6)
      throw ValidationError("trace CSV: expected 6 columns in '" + line + "'");
    TraceRow r;
    r.t = parse_long(cols[0]);
    r.mean_loss = parse_double(cols[1]);
    r.d_t = parse_double(cols[2]);
    r.vectors_cum = parse_long(cols[3]);
    r.scalars_cum = parse_long(cols[4]);
    r.epsilon = parse_double(cols[5]);
    if (first) {
      if (r.t != 0) throw ValidationError("trace CSV: first row must be t=0");
      trace.initial_mean_loss = r.mean_loss;
      trace.initial_d = r.d_t;
      first = false;
      continue;
    }
    if (r.t != static_cast<long>(trace.rows.size()) + 1)
      throw ValidationError("trace CSV: rows out of order at t=" +
                            std::to_string(r.t));
    r.virtual_time = static_cast<double>(r.t);
    trace.rows.push_back(r);
  }
  if (first) throw ValidationError("trace CSV: no rows");
  return trace;
}

RunTrace read_trace_csv(const fs::path& path) {
  try {
    return trace_from_csv(read_file(path));
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

std::string loss_vs_vectors_csv(std::span<const RunTrace> traces) {
  require(!traces.empty(), "loss_vs_vectors: empty ensemble");
  const std::size_t length = traces.front().rows.size();
  for (const RunTrace& tr : traces)
    require(tr.rows.size() == length, "loss_vs_vectors: traces differ in length");
  const auto n = static_cast<double>(traces.size());
  std::string out = "t,vectors_cum,mean_loss,mean_loss_stderr\n";
  std::vector<double> losses(traces.size());
  for (std::size_t i = 0; i < length; ++i) {
    double vec = 0.0;
    for (std::size_t k = 0; k < traces.size(); ++k) {
      vec += static_cast<double>(traces[k].rows[i].vectors_cum);
      losses[k] = traces[k].rows[i].mean_loss;
    }
    const Stat st = mean_stderr(losses);
    out += std::to_string(traces.front().rows[i].t) + ',' +
           format_double(vec / n) + ',' + format_double(st.mean) + ',' +
           format_double(st.stderr_) + '\n';
  }
  return out;
}

void export_experiment(const Experiment& experiment, const fs::path& dir) {
  require(!experiment.traces.empty(), "export: empty ensemble, nothing written");
  // Render everything before touching the file system.
  std::vector<std::pair<fs::path, std::string>> files;
  for (const RunTrace& tr : experiment.traces)
    files.emplace_back(dir / ("run_" + std::to_string(tr.seed) + ".csv"),
                       trace_to_csv(tr));
  files.emplace_back(dir / "summary.json", experiment.summary.dump(2) + "\n");
  files.emplace_back(dir / "loss_vs_vectors.csv",
                     loss_vs_vectors_csv(experiment.traces));
  const RunTrace& first = experiment.traces.front();
  if (first.ledger)
    files.emplace_back(dir / "privacy_ledger.json",
                       to_json(*first.ledger).dump(2) + "\n");

  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec)
    throw RuntimeAbort("cannot create '" + dir.string() + "': " + ec.message());
  for (const auto& [path, text] : files) write_file(path, text);
}

std::vector<RunTrace> load_trace_dir(const fs::path& dir) {
  if (!fs::is_directory(dir))
    throw ValidationError("'" + dir.string() + "' is not a directory");
  std::map<std::uint64_t, fs::path> found;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("run_", 0) != 0 || entry.path().extension() != ".csv")
      continue;
    const std::string id = name.substr(4, name.size() - 8);
    std::uint64_t seed = 0;
    const auto res = std::from_chars(id.data(), id.data() + id.size(), seed);
    if (res.ec != std::errc() || res.ptr != id.data() + id.size()) continue;
    found[seed] = entry.path();
  }
  if (found.empty())
    throw ValidationError("no run_<seed>.csv traces in '" + dir.string() + "'");
  std::vector<RunTrace> traces;
  for (const auto& [seed, path] : found) {
    RunTrace tr = read_trace_csv(path);
    tr.seed = seed;
    traces.push_back(std::move(tr));
  }
  return traces;
}

}  // namespace leasgd
