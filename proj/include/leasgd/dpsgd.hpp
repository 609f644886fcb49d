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

#ifndef LEASGD_DPSGD_HPP_
#define LEASGD_DPSGD_HPP_

#include <cstdint>
#include <optional>
#include <vector>

#include "leasgd/optimizer.hpp"
#include "leasgd/trace.hpp"
#include "leasgd/types.hpp"

namespace leasgd {

// Symmetric doubly-stochastic gossip matrix on a ring.
class MixingMatrix {
 public:
  explicit MixingMatrix(Matrix weights);

  const Matrix& weights() const { return weights_; }
  int size() const { return static_cast<int>(weights_.rows()); }

  // Largest |eigenvalue| other than the leading 1.
  double second_largest_modulus() const;

 private:
  Matrix weights_;
};

// 1/3 on self and on each ring neighbour. Requires m >= 3.
MixingMatrix ring_mixing_matrix(int m);

// w_i <- sum_j W_ij w_j - eta g_i for every worker at once, gradients taken
// at the pre-mixing vectors.
void dpsgd_step(std::vector<WorkerState>& states, const MixingMatrix& mixing,
                const Problem& problem, const std::vector<DataShard>& shards,
                Eigen::Index batch_size, double eta,
                const std::optional<PrivacyConfig>& privacy);

// Vectors sent per round: every worker to both ring neighbours.
long dpsgd_comm_cost(int m);

// Same trace schema as the LEASGD runs, algorithm "dpsgd".
RunTrace run_dpsgd(const RunSetup& setup, std::uint64_t seed);

}  // namespace leasgd

#endif  // LEASGD_DPSGD_HPP_
