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

#ifndef LEASGD_TOPOLOGY_HPP_
#define LEASGD_TOPOLOGY_HPP_

#include <map>
#include <span>
#include <utility>
#include <vector>

#include "json.hpp"

#include "leasgd/rng.hpp"
#include "leasgd/types.hpp"

namespace leasgd {

enum class Role { kLeader, kFollower };

// Leader/follower pools. Always |leaders| > |followers| >= 1.
class Roster {
 public:
  Roster(std::vector<Role> roles, int epoch);

  int worker_count() const { return static_cast<int>(roles_.size()); }
  int follower_count() const { return static_cast<int>(followers_.size()); }
  int leader_count() const { return static_cast<int>(leaders_.size()); }
  int epoch() const { return epoch_; }

  Role role(int worker) const { return roles_.at(static_cast<std::size_t>(worker)); }
  const std::vector<Role>& roles() const { return roles_; }
  const std::vector<int>& leaders() const { return leaders_; }
  const std::vector<int>& followers() const { return followers_; }

 private:
  std::vector<Role> roles_;
  std::vector<int> leaders_;
  std::vector<int> followers_;
  int epoch_ = 0;
};

struct Pairing {
  std::map<int, int> assignments;  // leader id -> follower id
  std::map<int, int> fan_in;       // follower id -> number of leaders

  // Leaders assigned to `follower`, in increasing id order.
  std::vector<int> leaders_of(int follower) const;
};

// Throws unless 1 <= follower_count and 2 * follower_count < worker_count.
void check_pool_sizes(int worker_count, int follower_count);

// The follower_count highest-loss workers become followers; ties go to the
// lower worker id.
Roster recategorize(std::span<const double> losses, int follower_count,
                    int previous_epoch = -1);

Roster initial_roster(int worker_count, int follower_count, RngStream& rng);

// Every leader picks a follower uniformly and independently (with
// replacement across leaders).
Pairing draw_pairing(const Roster& roster, RngStream& rng);

struct RecatMessages {
  long scalars_in = 0;  // loss values sent to the recategorizer
  long roles_out = 0;   // role labels sent back
};

RecatMessages recat_message_cost(int worker_count);

nlohmann::json to_json(const Roster& roster);
nlohmann::json to_json(const Pairing& pairing);

}  // namespace leasgd

#endif  // LEASGD_TOPOLOGY_HPP_
