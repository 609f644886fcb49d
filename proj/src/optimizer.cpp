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

#include "leasgd/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <random>
#include <span>
#include <string>
#include <tuple>

#include "leasgd/updates.hpp"

namespace leasgd {
namespace {

std::vector<Vector> gather_gradients(std::vector<WorkerState>& states,
                                     const RunSetup& setup) {
  std::vector<Vector> grads;
  grads.reserve(states.size());
  for (WorkerState& s : states) {
    grads.push_back(worker_gradient(
        s, setup.problem, setup.shards[static_cast<std::size_t>(s.worker_id)],
        setup.batch_size, setup.privacy));
  }
  return grads;
}

void assign_roles(std::vector<WorkerState>& states, const Roster& roster) {
  for (WorkerState& s : states) s.role = roster.role(s.worker_id);
}

std::vector<double> current_losses(const std::vector<WorkerState>& states) {
  std::vector<double> losses;
  losses.reserve(states.size());
  for (const WorkerState& s : states) losses.push_back(s.last_loss);
  return losses;
}

RunTrace run_synchronous(const RunSetup& setup, std::uint64_t seed,
                         bool leader_follower, const std::string& name) {
  setup.validate();
  const int m = setup.workers();
  const HyperParams& hp = setup.hp;
  std::vector<WorkerState> states = init_workers(setup, seed);
  RngStream coordinator = make_stream(seed, StreamPurpose::kCoordinator);
  TraceRecorder recorder(setup, name, seed, states);

  const bool use_roster = leader_follower && setup.followers > 0;
  const bool exchange = leader_follower && setup.communicates();
  if (exchange) {
    // Every leader may pick the same follower.
    const double beta_max = (m - setup.followers) * hp.alpha();
    require(beta_max < 1.0, "beta_max = (m - L_f) * alpha = " +
                                std::to_string(beta_max) + " must be < 1");
  }
  const long recat_every = static_cast<long>(hp.kappa) * hp.tau;
  std::optional<Roster> roster;

  for (long t = 0; t < hp.iterations; ++t) {
    if (use_roster && t % recat_every == 0) {
      if (t == 0) {
        roster = initial_roster(m, setup.followers, coordinator);
      } else {
        const std::vector<double> losses = current_losses(states);
        roster = recategorize(losses, setup.followers, roster->epoch());
        const RecatMessages msg = recat_message_cost(m);
        recorder.add_scalars(msg.scalars_in + msg.roles_out);
        recorder.count_recat_round();
      }
      assign_roles(states, *roster);
    }

    std::vector<Vector> grads = gather_gradients(states, setup);
    if (exchange && t % hp.tau == 0) {
      const Pairing pairing = draw_pairing(*roster, coordinator);
      communication_round(states, *roster, pairing, grads, hp);
      recorder.add_vectors(2L * roster->leader_count());
      recorder.count_comm_round();
    } else {
      for (WorkerState& s : states) {
        s.w = gradient_step(s.w, grads[static_cast<std::size_t>(s.worker_id)],
                            hp.eta);
        ++s.local_step_count;
      }
    }
    recorder.observe(states, static_cast<double>(t + 1));
  }
  return recorder.finish(states);
}

}  // namespace

void HyperParams::validate() const {
  require(eta > 0.0, "eta must be > 0");
  require(rho >= 0.0, "rho must be >= 0");
  require(tau >= 1, "tau must be >= 1");
  require(kappa >= 1, "kappa must be >= 1");
  require(iterations >= 1, "iterations must be >= 1");
  require(alpha() < 1.0, "alpha = eta * rho must be < 1");
}

void RunSetup::validate() const {
  hp.validate();
  require(!shards.empty(), "run needs at least one worker");
  for (const DataShard& s : shards)
    require(s.sample_count() >= 1, "every shard must be non-empty");
  if (followers > 0) check_pool_sizes(workers(), followers);
  require(followers >= 0, "followers must be >= 0");
  require(batch_size >= 0, "batch_size must be >= 0");
  for (const DataShard& s : shards)
    require(batch_size <= s.sample_count(),
            "batch_size exceeds the size of shard " +
                std::to_string(s.worker_id));
  if (privacy) privacy->validate();
  require(async_rates.empty() ||
              static_cast<int>(async_rates.size()) == workers(),
          "async rates must list one rate per worker");
  for (double r : async_rates) require(r > 0.0, "async rates must be > 0");
}

std::vector<WorkerState> init_workers(const RunSetup& setup,
                                      std::uint64_t seed) {
  SeedStreams streams = seed_streams(seed, setup.workers());
  std::vector<WorkerState> states;
  states.reserve(static_cast<std::size_t>(setup.workers()));
  for (int i = 0; i < setup.workers(); ++i) {
    WorkerState s;
    s.worker_id = i;
    s.streams = std::move(streams.workers[static_cast<std::size_t>(i)]);
    s.w = initial_parameters(setup.problem, setup.init_scale, s.streams.data);
    states.push_back(std::move(s));
  }
  return states;
}

Vector worker_gradient(WorkerState& state, const Problem& problem,
                       const DataShard& shard, Eigen::Index batch_size,
                       const std::optional<PrivacyConfig>& privacy) {
  const Eigen::Index batch = batch_size == 0 ? shard.sample_count() : batch_size;
  Vector g = stochastic_gradient(problem, state.w, shard, batch,
                                 state.streams.data)
                 .gradient;
  if (!privacy) return g;
  state.ledger.account_step(*privacy);
  return privatize_gradient(g, *privacy, state.streams.noise);
}

void local_sgd_step(WorkerState& state, const Problem& problem,
                    const DataShard& shard, Eigen::Index batch_size,
                    const std::optional<PrivacyConfig>& privacy,
                    const HyperParams& hp) {
  const Vector g = worker_gradient(state, problem, shard, batch_size, privacy);
  state.w = gradient_step(state.w, g, hp.eta);
  if (!state.w.allFinite())
    throw RuntimeAbort("worker " + std::to_string(state.worker_id) +
                       " diverged to a non-finite parameter vector");
  ++state.local_step_count;
}

void communication_round(std::vector<WorkerState>& states,
                         const Roster& roster, const Pairing& pairing,
                         const std::vector<Vector>& gradients,
                         const HyperParams& hp) {
  require(gradients.size() == states.size(),
          "communication_round: one gradient per worker required");
  const double alpha = hp.alpha();
  std::vector<Vector> next(states.size());

  for (const auto& [leader, follower] : pairing.assignments) {
    const auto li = static_cast<std::size_t>(leader);
    next[li] = leader_elastic_step(states[li].w,
                                   states[static_cast<std::size_t>(follower)].w,
                                   gradients[li], hp.eta, alpha);
  }
  for (int follower : roster.followers()) {
    const auto fi = static_cast<std::size_t>(follower);
    const std::vector<int> leaders = pairing.leaders_of(follower);
    if (leaders.empty()) {
      next[fi] = gradient_step(states[fi].w, gradients[fi], hp.eta);
      continue;
    }
    std::vector<Vector> pulled;
    pulled.reserve(leaders.size());
    for (int l : leaders) pulled.push_back(states[static_cast<std::size_t>(l)].w);
    next[fi] = follower_multi_pull(states[fi].w, std::span<const Vector>(pulled),
                                   gradients[fi], hp.eta, alpha);
  }
  for (std::size_t i = 0; i < states.size(); ++i) {
    require(next[i].size() > 0, "communication_round: worker " +
                                    std::to_string(i) +
                                    " missing from roster/pairing");
    states[i].w = std::move(next[i]);
    if (!states[i].w.allFinite())
      throw RuntimeAbort("worker " + std::to_string(i) +
                         " diverged to a non-finite parameter vector");
    ++states[i].local_step_count;
  }
}

void private_update(std::vector<WorkerState>& states, const Roster& roster,
                    const Pairing& pairing,
                    const std::vector<Vector>& raw_gradients,
                    const HyperParams& hp, const PrivacyConfig& cfg) {
  require(raw_gradients.size() == states.size(),
          "private_update: one gradient per worker required");
  std::vector<Vector> noisy;
  noisy.reserve(states.size());
  for (std::size_t i = 0; i < states.size(); ++i) {
    states[i].ledger.account_step(cfg);
    noisy.push_back(
        privatize_gradient(raw_gradients[i], cfg, states[i].streams.noise));
  }
  communication_round(states, roster, pairing, noisy, hp);
}

TraceRecorder::TraceRecorder(const RunSetup& setup, std::string algorithm,
                             std::uint64_t seed,
                             std::vector<WorkerState>& states)
    : setup_(setup) {
  trace_.algorithm = std::move(algorithm);
  trace_.workers = setup.workers();
  trace_.followers = setup.followers;
  trace_.tau = setup.hp.tau;
  trace_.seed = seed;

  double total = 0.0;
  for (WorkerState& s : states) {
    s.last_loss = full_loss(setup.problem, s.w,
                            setup.shards[static_cast<std::size_t>(s.worker_id)]);
    total += s.last_loss;
  }
  trace_.initial_mean_loss = total / static_cast<double>(states.size());
  if (setup.problem.optimum) {
    double sum = 0.0;
    double worst = 0.0;
    for (const WorkerState& s : states) {
      const double gap = squared_gap(s.w);
      sum += gap;
      worst = std::max(worst, gap);
    }
    trace_.initial_d = sum / static_cast<double>(states.size());
    trace_.initial_c = worst;
  }
}

double TraceRecorder::squared_gap(const Vector& w) const {
  return (w - *setup_.problem.optimum).squaredNorm();
}

void TraceRecorder::observe(std::vector<WorkerState>& states,
                            double virtual_time,
                            const std::vector<int>& changed) {
  auto refresh = [&](WorkerState& s) {
    s.last_loss = full_loss(setup_.problem, s.w,
                            setup_.shards[static_cast<std::size_t>(s.worker_id)]);
  };
  if (changed.empty()) {
    for (WorkerState& s : states) refresh(s);
  } else {
    for (int id : changed) refresh(states[static_cast<std::size_t>(id)]);
  }

  TraceRow row;
  row.t = static_cast<long>(trace_.rows.size()) + 1;
  row.virtual_time = virtual_time;
  std::vector<double> losses;
  losses.reserve(states.size());
  double total = 0.0;
  for (const WorkerState& s : states) {
    losses.push_back(s.last_loss);
    total += s.last_loss;
  }
  row.mean_loss = total / static_cast<double>(states.size());
  if (!std::isfinite(row.mean_loss))
    throw RuntimeAbort("non-finite mean loss at t=" + std::to_string(row.t));
  if (setup_.problem.optimum) {
    double sum = 0.0;
    for (const WorkerState& s : states) sum += squared_gap(s.w);
    row.d_t = sum / static_cast<double>(states.size());
  }
  row.vectors_cum = vectors_;
  row.scalars_cum = scalars_;
  if (setup_.privacy) {
    double eps = 0.0;
    for (const WorkerState& s : states)
      if (s.ledger.steps() > 0)
        eps = std::max(eps, spent_epsilon(s.ledger, setup_.privacy->delta));
    row.epsilon = eps;
  }
  trace_.rows.push_back(row);
  loss_rows_.push_back(std::move(losses));
}

RunTrace TraceRecorder::finish(const std::vector<WorkerState>& states) {
  trace_.worker_losses.resize(static_cast<Eigen::Index>(loss_rows_.size()),
                              static_cast<Eigen::Index>(states.size()));
  for (std::size_t r = 0; r < loss_rows_.size(); ++r)
    for (std::size_t c = 0; c < states.size(); ++c)
      trace_.worker_losses(static_cast<Eigen::Index>(r),
                           static_cast<Eigen::Index>(c)) = loss_rows_[r][c];
  const WorkerState* busiest = nullptr;
  for (const WorkerState& s : states) {
    trace_.step_counts.push_back(s.local_step_count);
    trace_.final_params.push_back(s.w);
    if (busiest == nullptr || s.ledger.steps() > busiest->ledger.steps())
      busiest = &s;
  }
  if (setup_.privacy && busiest != nullptr) trace_.ledger = busiest->ledger;
  return std::move(trace_);
}

RunTrace run_sync(const RunSetup& setup, std::uint64_t seed) {
  return run_synchronous(setup, seed, /*leader_follower=*/true, "leasgd_sync");
}

RunTrace run_local(const RunSetup& setup, std::uint64_t seed) {
  return run_synchronous(setup, seed, /*leader_follower=*/false, "local_sgd");
}

RunTrace run_async(const RunSetup& setup, std::uint64_t seed) {
  setup.validate();
  const int m = setup.workers();
  const HyperParams& hp = setup.hp;
  std::vector<WorkerState> states = init_workers(setup, seed);
  RngStream coordinator = make_stream(seed, StreamPurpose::kCoordinator);
  TraceRecorder recorder(setup, "leasgd_async", seed, states);

  std::vector<double> rates = setup.async_rates;
  if (rates.empty()) rates.assign(static_cast<std::size_t>(m), 1.0);

  using Wake = std::tuple<double, int>;
  std::priority_queue<Wake, std::vector<Wake>, std::greater<>> clock;
  auto schedule = [&](int id, double now) {
    std::exponential_distribution<double> gap(rates[static_cast<std::size_t>(id)]);
    clock.emplace(now + gap(states[static_cast<std::size_t>(id)].streams.clock), id);
  };
  for (int i = 0; i < m; ++i) schedule(i, 0.0);

  const bool use_roster = setup.followers > 0;
  const bool exchange = setup.communicates();
  const long recat_every = static_cast<long>(hp.kappa) * hp.tau * m;
  std::optional<Roster> roster;
  if (use_roster) {
    roster = initial_roster(m, setup.followers, coordinator);
    assign_roles(states, *roster);
  }
  std::vector<long> wakes(static_cast<std::size_t>(m), 0);

  for (long event = 0; event < hp.iterations; ++event) {
    if (use_roster && event > 0 && event % recat_every == 0) {
      for (WorkerState& s : states)
        s.last_loss = full_loss(setup.problem, s.w,
                                setup.shards[static_cast<std::size_t>(s.worker_id)]);
      const std::vector<double> losses = current_losses(states);
      roster = recategorize(losses, setup.followers, roster->epoch());
      assign_roles(states, *roster);
      const RecatMessages msg = recat_message_cost(m);
      recorder.add_scalars(msg.scalars_in + msg.roles_out);
      recorder.count_recat_round();
    }

    const auto [now, id] = clock.top();
    clock.pop();
    WorkerState& me = states[static_cast<std::size_t>(id)];
    const long wake = ++wakes[static_cast<std::size_t>(id)];
    std::vector<int> changed{id};

    if (exchange && me.role == Role::kLeader && wake % hp.tau == 0) {
      std::uniform_int_distribution<std::size_t> pick(
          0, roster->followers().size() - 1);
      const int f = roster->followers()[pick(coordinator)];
      WorkerState& partner = states[static_cast<std::size_t>(f)];
      const Vector g = worker_gradient(
          me, setup.problem, setup.shards[static_cast<std::size_t>(id)],
          setup.batch_size, setup.privacy);
      // The follower did not wake, so it contributes no gradient.
      auto [leader_next, follower_next] = elastic_pair_update(
          me.w, partner.w, g, Vector::Zero(g.size()), hp.eta, hp.alpha());
      me.w = std::move(leader_next);
      partner.w = std::move(follower_next);
      ++me.local_step_count;
      recorder.add_vectors(2);
      recorder.count_comm_round();
      changed.push_back(f);
    } else {
      local_sgd_step(me, setup.problem,
                     setup.shards[static_cast<std::size_t>(id)],
                     setup.batch_size, setup.privacy, hp);
    }
    if (!me.w.allFinite())
      throw RuntimeAbort("worker " + std::to_string(id) +
                         " diverged to a non-finite parameter vector");
    recorder.observe(states, now, changed);
    schedule(id, now);
  }
  return recorder.finish(states);
}

}  // namespace leasgd
