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

#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "leasgd/dpsgd.hpp"
#include "leasgd/harness.hpp"
#include "leasgd/optimizer.hpp"
#include "test_support.hpp"

namespace leasgd {
namespace {

using testing::random_vector;

// Power iteration on W - 11^T/m: converges to the second-largest modulus.
double deflated_power_iteration(const Matrix& w, int iterations) {
  const Eigen::Index m = w.rows();
  const Matrix deflated = w - Matrix::Constant(m, m, 1.0 / static_cast<double>(m));
  Vector v = Vector::LinSpaced(m, 1.0, static_cast<double>(m));
  double estimate = 0.0;
  for (int k = 0; k < iterations; ++k) {
    Vector next = deflated * v;
    estimate = next.norm() / v.norm();
    v = next / next.norm();
  }
  return estimate;
}

std::vector<WorkerState> states_with(const std::vector<Vector>& ws, std::uint64_t seed) {
  const SeedStreams streams = seed_streams(seed, static_cast<int>(ws.size()));
  std::vector<WorkerState> states(ws.size());
  for (std::size_t i = 0; i < ws.size(); ++i) {
    states[i].worker_id = static_cast<int>(i);
    states[i].w = ws[i];
    states[i].streams = streams.workers[i];
  }
  return states;
}

RunSetup quadratic_setup(int m, int followers, long iterations) {
  RunSetup s;
  s.problem = make_quadratic(6, 1.0, 3.0, 21);
  s.shards = make_quadratic_shards(s.problem, m, 32, 1.0, 22);
  s.hp.eta = 0.1;
  s.hp.rho = 0.5;
  s.hp.iterations = iterations;
  s.followers = followers;
  s.batch_size = 4;
  return s;
}

TEST(RingMatrix, ThreeWorkersAverageUniformly) {
  const MixingMatrix w = ring_mixing_matrix(3);
  EXPECT_TRUE(w.weights().isApprox(Matrix::Constant(3, 3, 1.0 / 3.0), 1e-15));
  const Vector mixed = w.weights() * Eigen::Vector3d{0.0, 3.0, 6.0};
  EXPECT_NEAR((mixed - Vector::Constant(3, 3.0)).cwiseAbs().maxCoeff(), 0.0, 1e-14);
}

TEST(RingMatrix, InvariantsForEverySize) {
  for (int m = 3; m <= 40; ++m) {
    const MixingMatrix ring = ring_mixing_matrix(m);
    const Matrix& w = ring.weights();
    EXPECT_LE((w.rowwise().sum().array() - 1.0).abs().maxCoeff(), 1e-12) << m;
    EXPECT_LE((w.colwise().sum().array() - 1.0).abs().maxCoeff(), 1e-12) << m;
    EXPECT_EQ(w, w.transpose());
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) {
        const int gap = std::abs(i - j);
        const bool neighbour = gap <= 1 || gap == m - 1;
        if (!neighbour) EXPECT_EQ(w(i, j), 0.0) << m << " " << i << " " << j;
        else EXPECT_GT(w(i, j), 0.0);
      }
    EXPECT_LT(ring.second_largest_modulus(), 1.0);
  }
}

TEST(RingMatrix, SpectralGapMatchesCirculantFormula) {
  const MixingMatrix w = ring_mixing_matrix(15);
  const double closed = 1.0 / 3.0 + 2.0 / 3.0 * std::cos(2.0 * std::numbers::pi / 15.0);
  EXPECT_NEAR(w.second_largest_modulus(), closed, 1e-9);
  EXPECT_NEAR(deflated_power_iteration(w.weights(), 2000), closed, 1e-9);
}

TEST(RingMatrix, RejectsSmallRingsAndBadMatrices) {
  EXPECT_THROW(ring_mixing_matrix(2), ValidationError);
  EXPECT_THROW(dpsgd_comm_cost(2), ValidationError);
  Matrix lopsided(2, 2);
  lopsided << 0.7, 0.3, 0.2, 0.8;
  EXPECT_THROW(MixingMatrix{lopsided}, ValidationError);
  EXPECT_THROW(MixingMatrix{Matrix::Constant(2, 2, 0.6)}, ValidationError);
}

TEST(DpsgdStep, IdentityMixingIsIndependentSgd) {
  const RunSetup s = quadratic_setup(4, 0, 1);
  RngStream rng(3);
  std::vector<Vector> ws;
  for (int i = 0; i < 4; ++i) ws.push_back(random_vector(6, rng));
  std::vector<WorkerState> mixed = states_with(ws, 8), alone = states_with(ws, 8);
  const MixingMatrix identity(Matrix::Identity(4, 4));
  for (int k = 0; k < 20; ++k) {
    dpsgd_step(mixed, identity, s.problem, s.shards, s.batch_size, 0.1, std::nullopt);
    for (WorkerState& w : alone)
      local_sgd_step(w, s.problem, s.shards[static_cast<std::size_t>(w.worker_id)],
                     s.batch_size, std::nullopt, s.hp);
  }
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(mixed[i].w, alone[i].w);
}

// Mixing uses the pre-step vectors; the gradient is taken at the old point.
TEST(DpsgdStep, MixesThenSteps) {
  const RunSetup s = quadratic_setup(3, 0, 1);
  RngStream rng(4);
  std::vector<Vector> ws;
  for (int i = 0; i < 3; ++i) ws.push_back(random_vector(6, rng));
  std::vector<WorkerState> states = states_with(ws, 5), probe = states_with(ws, 5);
  std::vector<Vector> grads;
  for (WorkerState& w : probe)
    grads.push_back(worker_gradient(w, s.problem, s.shards[static_cast<std::size_t>(w.worker_id)],
                                    s.batch_size, std::nullopt));
  dpsgd_step(states, ring_mixing_matrix(3), s.problem, s.shards, s.batch_size, 0.1,
             std::nullopt);
  const Vector average = (ws[0] + ws[1] + ws[2]) / 3.0;
  for (std::size_t i = 0; i < 3; ++i)
    EXPECT_LT((states[i].w - (average - 0.1 * grads[i])).norm(), 1e-14);
}

TEST(DpsgdStep, PureMixingReachesConsensusOnTheInitialAverage) {
  const RunSetup s = quadratic_setup(5, 0, 1);
  RngStream rng(6);
  std::vector<Vector> ws;
  for (int i = 0; i < 5; ++i) ws.push_back(random_vector(6, rng, 3.0));
  std::vector<WorkerState> states = states_with(ws, 1);
  Vector average = Vector::Zero(6);
  for (const Vector& w : ws) average += w / 5.0;

  // Oracle: hand-rolled ring averaging with the same weights.
  std::vector<Vector> oracle = ws;
  const MixingMatrix ring = ring_mixing_matrix(5);
  for (int k = 0; k < 200; ++k) {
    dpsgd_step(states, ring, s.problem, s.shards, s.batch_size, 0.0, std::nullopt);
    std::vector<Vector> next(5);
    for (int i = 0; i < 5; ++i)
      next[static_cast<std::size_t>(i)] =
          (oracle[static_cast<std::size_t>((i + 4) % 5)] + oracle[static_cast<std::size_t>(i)] +
           oracle[static_cast<std::size_t>((i + 1) % 5)]) / 3.0;
    oracle = next;
  }
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_LT((states[i].w - average).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_LT((states[i].w - oracle[i]).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(DpsgdProperty, ZeroStepConservesTheGlobalAverage) {
  RngStream rng(7);
  for (int m : {3, 4, 7, 15}) {
    const RunSetup s = quadratic_setup(m, 0, 1);
    std::vector<Vector> ws;
    for (int i = 0; i < m; ++i) ws.push_back(random_vector(6, rng, 10.0));
    std::vector<WorkerState> states = states_with(ws, 2);
    Vector before = Vector::Zero(6);
    for (const Vector& w : ws) before += w;
    for (int k = 0; k < 50; ++k) {
      dpsgd_step(states, ring_mixing_matrix(m), s.problem, s.shards, s.batch_size, 0.0,
                 std::nullopt);
      Vector after = Vector::Zero(6);
      for (const WorkerState& w : states) after += w.w;
      EXPECT_LT((after - before).cwiseAbs().maxCoeff(), 64 * 1e-16 * before.cwiseAbs().sum() + 1e-13);
    }
  }
}

TEST(DpsgdStep, RejectsMismatchedMatrix) {
  const RunSetup s = quadratic_setup(4, 0, 1);
  std::vector<WorkerState> states = states_with(std::vector<Vector>(4, Vector::Zero(6)), 1);
  EXPECT_THROW(dpsgd_step(states, ring_mixing_matrix(5), s.problem, s.shards, 0, 0.1,
                          std::nullopt),
               ValidationError);
}

TEST(DpsgdComm, VectorCounts) {
  EXPECT_EQ(dpsgd_comm_cost(3), 6);
  EXPECT_EQ(dpsgd_comm_cost(15), 30);
  EXPECT_NEAR(20.0 / dpsgd_comm_cost(15), 0.667, 1e-3);
}

TEST(DpsgdComm, TraceAccumulatesTwoMPerIteration) {
  const RunSetup s = quadratic_setup(15, 0, 10);
  const RunTrace tr = run_dpsgd(s, 3);
  EXPECT_EQ(tr.algorithm, "dpsgd");
  ASSERT_EQ(tr.rows.size(), 10u);
  for (std::size_t i = 0; i < tr.rows.size(); ++i)
    EXPECT_EQ(tr.rows[i].vectors_cum, 30L * static_cast<long>(i + 1));
}

TEST(DpsgdComm, LongerIntervalHalvesLeasgdTraffic) {
  RunSetup s = quadratic_setup(15, 5, 10);
  const RunTrace every = run_sync(s, 3);
  s.hp.tau = 2;
  const RunTrace halved = run_sync(s, 3);
  EXPECT_EQ(every.rows.back().vectors_cum, 200);
  EXPECT_EQ(halved.rows.back().vectors_cum, 100);
  EXPECT_EQ(run_dpsgd(s, 3).rows.back().vectors_cum, 300);
}

TEST(DpsgdRun, PrivacyAccountsEveryStep) {
  RunSetup s = quadratic_setup(5, 0, 20);
  PrivacyConfig cfg;
  cfg.sigma2 = 4.0;
  cfg.sampling_ratio = 4.0 / 32.0;
  s.privacy = cfg;
  const RunTrace tr = run_dpsgd(s, 9);
  ASSERT_TRUE(tr.ledger);
  EXPECT_EQ(tr.ledger->steps(), 20);
  EXPECT_TRUE(std::isfinite(tr.rows.back().epsilon));
}

TEST(DpsgdRun, DeterministicPerSeed) {
  const RunSetup s = quadratic_setup(6, 0, 30);
  const RunTrace a = run_dpsgd(s, 12), b = run_dpsgd(s, 12), c = run_dpsgd(s, 13);
  EXPECT_EQ(a.final_params, b.final_params);
  EXPECT_NE(a.final_params, c.final_params);
}

// Matched eta and batch on the L2-regularised logistic benchmark: the
// leader/follower run ends at or below the ring baseline.
TEST(DpsgdProperty, LeasgdEndsNoWorseOnConvexBenchmark) {
  const nlohmann::json j = {
      {"algorithm", "leasgd_sync"}, {"workers", 15}, {"followers", 5},
      {"batch_size", 8}, {"init_scale", 0.0}, {"num_seeds", 8}, {"master_seed", 11},
      {"hyper", {{"eta", 0.1}, {"rho", 0.5}, {"iterations", 200}}},
      {"problem", {{"kind", "logistic"}, {"seed", 3}, {"samples", 1500}, {"features", 10},
                   {"separation", 1.0}, {"reg_lambda", 0.01}}}};
  RunConfig leasgd_cfg = parse_config(j);
  RunConfig dpsgd_cfg = leasgd_cfg;
  dpsgd_cfg.algorithm = "dpsgd";
  const PreparedExperiment lf = prepare_experiment(leasgd_cfg);
  const PreparedExperiment ring = prepare_experiment(dpsgd_cfg);
  double leasgd = 0.0, dpsgd = 0.0;
  for (std::uint64_t seed : leasgd_cfg.seeds) {
    leasgd += run_one(lf, seed).rows.back().mean_loss;
    dpsgd += run_one(ring, seed).rows.back().mean_loss;
  }
  EXPECT_LE(leasgd, dpsgd);
}

}  // namespace
}  // namespace leasgd
