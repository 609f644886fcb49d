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

#ifndef LEASGD_UPDATES_HPP_
#define LEASGD_UPDATES_HPP_

#include <span>
#include <string>
#include <utility>

#include "leasgd/types.hpp"

namespace leasgd {

namespace detail {
template <typename A, typename B>
void check_same_size(const Eigen::MatrixBase<A>& a,
                     const Eigen::MatrixBase<B>& b, const char* what) {
  require(a.size() == b.size(),
          std::string(what) + ": dimension mismatch (" +
              std::to_string(a.size()) + " vs " + std::to_string(b.size()) +
              ")");
}
}  // namespace detail

// w - eta * g.
template <typename W, typename G>
VectorX<typename W::Scalar> gradient_step(const Eigen::MatrixBase<W>& w,
                                          const Eigen::MatrixBase<G>& g,
                                          typename W::Scalar eta) {
  detail::check_same_size(w, g, "gradient_step");
  return w - eta * g;
}

// Leader half of the elastic rule: w_i - eta g_i + alpha (w_f - w_i), with
// the follower's pre-update vector.
template <typename W, typename F, typename G>
VectorX<typename W::Scalar> leader_elastic_step(
    const Eigen::MatrixBase<W>& leader, const Eigen::MatrixBase<F>& follower,
    const Eigen::MatrixBase<G>& g_leader, typename W::Scalar eta,
    typename W::Scalar alpha) {
  detail::check_same_size(leader, follower, "elastic update");
  detail::check_same_size(leader, g_leader, "elastic update");
  return leader - eta * g_leader + alpha * (follower - leader);
}

// Simultaneous pairwise elastic update; both right-hand sides use the
// pre-update vectors. Returns (leader', follower').
template <typename L, typename F, typename GL, typename GF>
std::pair<VectorX<typename L::Scalar>, VectorX<typename L::Scalar>>
elastic_pair_update(const Eigen::MatrixBase<L>& leader,
                    const Eigen::MatrixBase<F>& follower,
                    const Eigen::MatrixBase<GL>& g_leader,
                    const Eigen::MatrixBase<GF>& g_follower,
                    typename L::Scalar eta, typename L::Scalar alpha) {
  detail::check_same_size(follower, g_follower, "elastic update");
  VectorX<typename L::Scalar> next_leader =
      leader_elastic_step(leader, follower, g_leader, eta, alpha);
  VectorX<typename L::Scalar> next_follower =
      follower - eta * g_follower + alpha * (leader - follower);
  return {std::move(next_leader), std::move(next_follower)};
}

// Aggregate pull of p leaders on one follower:
//   w_f - eta g_f - beta (w_f - mean(leaders)),  beta = p * alpha < 1.
template <typename F, typename G, typename Scalar = typename F::Scalar>
VectorX<Scalar> follower_multi_pull(
    const Eigen::MatrixBase<F>& follower,
    std::span<const VectorX<typename F::Scalar>> leaders,
    const Eigen::MatrixBase<G>& g_follower, typename F::Scalar eta,
    typename F::Scalar alpha) {
  require(!leaders.empty(), "follower_multi_pull: no leaders");
  detail::check_same_size(follower, g_follower, "follower_multi_pull");
  const Scalar beta = static_cast<Scalar>(leaders.size()) * alpha;
  require(beta < Scalar(1), "follower_multi_pull: beta = p * alpha = " +
                                std::to_string(static_cast<double>(beta)) +
                                " must be < 1");
  VectorX<Scalar> mean = VectorX<Scalar>::Zero(follower.size());
  for (const auto& w : leaders) {
    detail::check_same_size(follower, w, "follower_multi_pull");
    mean += w;
  }
  mean /= static_cast<Scalar>(leaders.size());
  return follower - eta * g_follower - beta * (follower - mean);
}

}  // namespace leasgd

#endif  // LEASGD_UPDATES_HPP_
