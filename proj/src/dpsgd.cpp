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

#include "leasgd/dpsgd.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace leasgd {

MixingMatrix::MixingMatrix(Matrix weights) : weights_(std::move(weights)) {
  const Eigen::Index m = weights_.rows();
  require(m >= 1 && weights_.cols() == m, "mixing matrix must be square");
  constexpr double kTol = 1e-12;
  require((weights_ - weights_.transpose()).cwiseAbs().maxCoeff() <= kTol,
          "mixing matrix must be symmetric");
  require((weights_.array() >= 0.0).all(),
          "mixing matrix must be non-negative");
  require(((weights_.rowwise().sum().array() - 1.0).abs() <= kTol).all(),
          "mixing matrix rows must sum to 1");
  require(((weights_.colwise().sum().array() - 1.0).abs() <= kTol).all(),
          "mixing matrix columns must sum to 1");
}

double MixingMatrix::second_largest_modulus() const {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(weights_, Eigen::EigenvaluesOnly);
  Vector moduli = eig.eigenvalues().cwiseAbs();
  std::sort(moduli.data(), moduli.data() + moduli.size(), std::greater<>());
  return moduli.size() > 1 ? moduli(1) : 0.0;
}

MixingMatrix ring_mixing_matrix(int m) {
  require(m >= 3, "ring mixing matrix needs m >= 3 workers");
  Matrix w = Matrix::Zero(m, m);
  const double third = 1.0 / 3.0;
  for (int i = 0; i < m; ++i) {
    w(i, i) += third;
    w(i, (i + 1) % m) += third;
    w(i, (i + m - 1) % m) += third;
  }
  return MixingMatrix(std::move(w));
}

void dpsgd_step(std::vector<WorkerState>& states, const MixingMatrix& mixing,
                const Problem& problem, const std::vector<DataShard>& shards,
                Eigen::Index batch_size, double eta,
                const std::optional<PrivacyConfig>& privacy) {
  const auto m = static_cast<Eigen::Index>(states.size());
  require(mixing.size() == m, "dpsgd_step: mixing matrix size " +
                                  std::to_string(mixing.size()) +
                                  " does not match " + std::to_string(m) +
                                  " workers");
  require(shards.size() == states.size(), "dpsgd_step: one shard per worker");

  std::vector<Vector> grads;
  grads.reserve(states.size());
  for (WorkerState& s : states)
    grads.push_back(worker_gradient(
        s, problem, shards[static_cast<std::size_t>(s.worker_id)], batch_size,
        privacy));

  const Matrix& w = mixing.weights();
  std::vector<Vector> next(states.size());
  for (Eigen::Index i = 0; i < m; ++i) {
    Vector mixed = Vector::Zero(states[0].w.size());
    for (Eigen::Index j = 0; j < m; ++j)
      if (w(i, j) != 0.0) mixed += w(i, j) * states[static_cast<std::size_t>(j)].w;
    next[static_cast<std::size_t>(i)] =
        mixed - eta * grads[static_cast<std::size_t>(i)];
  }
  for (std::size_t i = 0; i < states.size(); ++i) {
    if (!next[i].allFinite())
      throw RuntimeAbort("dpsgd: worker " + std::to_string(i) +
                         " diverged to a non-finite parameter vector");
    states[i].w = std::move(next[i]);
    ++states[i].local_step_count;
  }
}

long dpsgd_comm_cost(int m) {
  require(m >= 3, "dpsgd_comm_cost: ring needs m >= 3");
  return 2L * m;
}

RunTrace run_dpsgd(const RunSetup& setup, std::uint64_t seed) {
  setup.validate();
  const MixingMatrix mixing = ring_mixing_matrix(setup.workers());
  std::vector<WorkerState> states = init_workers(setup, seed);
  TraceRecorder recorder(setup, "dpsgd", seed, states);
  for (long t = 0; t < setup.hp.iterations; ++t) {
    dpsgd_step(states, mixing, setup.problem, setup.shards, setup.batch_size,
               setup.hp.eta, setup.privacy);
    recorder.add_vectors(dpsgd_comm_cost(setup.workers()));
    recorder.count_comm_round();
    recorder.observe(states, static_cast<double>(t + 1));
  }
  return recorder.finish(states);
}

}  // namespace leasgd
