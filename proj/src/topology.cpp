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

#include "leasgd/topology.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace leasgd {

Roster::Roster(std::vector<Role> roles, int epoch)
    : roles_(std::move(roles)), epoch_(epoch) {
  for (int i = 0; i < worker_count(); ++i) {
    (roles_[static_cast<std::size_t>(i)] == Role::kLeader ? leaders_
                                                           : followers_)
        .push_back(i);
  }
  check_pool_sizes(worker_count(), follower_count());
}

std::vector<int> Pairing::leaders_of(int follower) const {
  std::vector<int> out;
  for (const auto& [leader, f] : assignments)
    if (f == follower) out.push_back(leader);
  return out;
}

void check_pool_sizes(int worker_count, int follower_count) {
  require(follower_count >= 1, "follower count must be >= 1");
  require(2 * follower_count < worker_count,
          "leader pool must be strictly larger than follower pool (2 * " +
              std::to_string(follower_count) + " >= " +
              std::to_string(worker_count) + ")");
}

Roster recategorize(std::span<const double> losses, int follower_count,
                    int previous_epoch) {
  const int m = static_cast<int>(losses.size());
  check_pool_sizes(m, follower_count);
  std::vector<int> order(static_cast<std::size_t>(m));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return losses[static_cast<std::size_t>(a)] >
           losses[static_cast<std::size_t>(b)];
  });
  std::vector<Role> roles(static_cast<std::size_t>(m), Role::kLeader);
  for (int k = 0; k < follower_count; ++k)
    roles[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])] =
        Role::kFollower;
  return Roster(std::move(roles), previous_epoch + 1);
}

Roster initial_roster(int worker_count, int follower_count, RngStream& rng) {
  check_pool_sizes(worker_count, follower_count);
  std::vector<int> ids(static_cast<std::size_t>(worker_count));
  std::iota(ids.begin(), ids.end(), 0);
  // Partial Fisher-Yates over the worker ids.
  for (int k = 0; k < follower_count; ++k) {
    std::uniform_int_distribution<int> pick(k, worker_count - 1);
    std::swap(ids[static_cast<std::size_t>(k)],
              ids[static_cast<std::size_t>(pick(rng))]);
  }
  std::vector<Role> roles(static_cast<std::size_t>(worker_count),
                          Role::kLeader);
  for (int k = 0; k < follower_count; ++k)
    roles[static_cast<std::size_t>(ids[static_cast<std::size_t>(k)])] =
        Role::kFollower;
  return Roster(std::move(roles), 0);
}

Pairing draw_pairing(const Roster& roster, RngStream& rng) {
  const auto& followers = roster.followers();
  std::uniform_int_distribution<std::size_t> pick(0, followers.size() - 1);
  Pairing pairing;
  for (int f : followers) pairing.fan_in[f] = 0;
  for (int leader : roster.leaders()) {
    const int f = followers[pick(rng)];
    pairing.assignments[leader] = f;
    ++pairing.fan_in[f];
  }
  return pairing;
}

RecatMessages recat_message_cost(int worker_count) {
  require(worker_count >= 2, "recat_message_cost: need at least 2 workers");
  return RecatMessages{.scalars_in = worker_count - 1,
                       .roles_out = worker_count - 1};
}

nlohmann::json to_json(const Roster& roster) {
  nlohmann::json roles = nlohmann::json::object();
  for (int i = 0; i < roster.worker_count(); ++i)
    roles[std::to_string(i)] =
        roster.role(i) == Role::kLeader ? "leader" : "follower";
  return {{"epoch", roster.epoch()},
          {"workers", roster.worker_count()},
          {"followers", roster.followers()},
          {"roles", roles}};
}

nlohmann::json to_json(const Pairing& pairing) {
  nlohmann::json assignments = nlohmann::json::object();
  nlohmann::json fan_in = nlohmann::json::object();
  for (const auto& [leader, f] : pairing.assignments)
    assignments[std::to_string(leader)] = f;
  for (const auto& [f, count] : pairing.fan_in)
    fan_in[std::to_string(f)] = count;
  return {{"assignments", assignments}, {"fan_in", fan_in}};
}

}  // namespace leasgd
