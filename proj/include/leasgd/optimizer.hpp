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

#ifndef LEASGD_OPTIMIZER_HPP_
#define LEASGD_OPTIMIZER_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "leasgd/privacy.hpp"
#include "leasgd/problem.hpp"
#include "leasgd/rng.hpp"
#include "leasgd/topology.hpp"
#include "leasgd/trace.hpp"
#include "leasgd/types.hpp"

namespace leasgd {

struct HyperParams {
  double eta = 0.1;
  double rho = 0.0;     // elastic factor
  int tau = 1;          // communication interval
  int kappa = 1;        // recategorise every kappa * tau iterations
  long iterations = 1;  // T (events, for the async scheduler)

  double alpha() const { return eta * rho; }
  void validate() const;
};

struct WorkerState {
  int worker_id = 0;
  Vector w;
  Role role = Role::kLeader;
  double last_loss = 0.0;
  WorkerStreams streams;
  long local_step_count = 0;
  PrivacyLedger ledger;
};

// Everything a run needs apart from its seed.
struct RunSetup {
  Problem problem;
  std::vector<DataShard> shards;  // one per worker
  HyperParams hp;
  int followers = 0;              // 0 = no roster, pure local training
  Eigen::Index batch_size = 0;    // 0 = full shard
  std::optional<PrivacyConfig> privacy;
  double init_scale = 1.0;
  std::vector<double> async_rates;  // empty = all 1.0

  int workers() const { return static_cast<int>(shards.size()); }
  // Pairing happens only with a roster and a non-zero elastic factor.
  bool communicates() const { return followers > 0 && hp.rho > 0.0; }
  void validate() const;
};

// Workers initialised from their own data streams.
std::vector<WorkerState> init_workers(const RunSetup& setup,
                                      std::uint64_t seed);

// Stochastic gradient for one worker, privatised (and accounted) when a
// privacy config is given.
Vector worker_gradient(WorkerState& state, const Problem& problem,
                       const DataShard& shard, Eigen::Index batch_size,
                       const std::optional<PrivacyConfig>& privacy);

void local_sgd_step(WorkerState& state, const Problem& problem,
                    const DataShard& shard, Eigen::Index batch_size,
                    const std::optional<PrivacyConfig>& privacy,
                    const HyperParams& hp);

// One synchronous communication round from time-t vectors: every leader
// takes the leader half of the elastic rule towards its assigned follower,
// every follower with fan-in p applies the aggregate pull of its p leaders,
// and a follower nobody picked takes a plain gradient step. `gradients` is
// indexed by worker id.
void communication_round(std::vector<WorkerState>& states,
                         const Roster& roster, const Pairing& pairing,
                         const std::vector<Vector>& gradients,
                         const HyperParams& hp);

// communication_round on privatised gradients. Each worker's noise comes
// from its own noise stream and is accounted in its ledger.
void private_update(std::vector<WorkerState>& states, const Roster& roster,
                    const Pairing& pairing,
                    const std::vector<Vector>& raw_gradients,
                    const HyperParams& hp, const PrivacyConfig& cfg);

// Collects trace rows. `observe` re-evaluates the full-shard loss of the
// listed workers (all when empty), refreshes their last_loss and appends a
// row.
class TraceRecorder {
 public:
  TraceRecorder(const RunSetup& setup, std::string algorithm,
                std::uint64_t seed, std::vector<WorkerState>& states);

  void add_vectors(long count) { vectors_ += count; }
  void add_scalars(long count) { scalars_ += count; }
  void count_comm_round() { ++trace_.comm_rounds; }
  void count_recat_round() { ++trace_.recat_rounds; }

  void observe(std::vector<WorkerState>& states, double virtual_time,
               const std::vector<int>& changed = {});
  RunTrace finish(const std::vector<WorkerState>& states);

 private:
  double squared_gap(const Vector& w) const;

  const RunSetup& setup_;
  RunTrace trace_;
  std::vector<std::vector<double>> loss_rows_;
  long vectors_ = 0;
  long scalars_ = 0;
};

// Synchronous leader/follower schedule. With setup.followers == 0 every
// worker trains alone.
RunTrace run_sync(const RunSetup& setup, std::uint64_t seed);

// Independent SGD on every worker, no communication.
RunTrace run_local(const RunSetup& setup, std::uint64_t seed);

// Event-driven variant: each worker wakes on its own Poisson clock and takes
// a local step; every tau-th wake of a leader exchanges with a random
// follower. Recategorisation fires every kappa * tau * m events.
RunTrace run_async(const RunSetup& setup, std::uint64_t seed);

}  // namespace leasgd

#endif  // LEASGD_OPTIMIZER_HPP_
