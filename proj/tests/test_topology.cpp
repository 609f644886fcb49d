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

#include <algorithm>
#include <map>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "leasgd/topology.hpp"

namespace leasgd {
namespace {

std::vector<int> followers_of(const Roster& r) { return r.followers(); }

TEST(Recategorize, HighestLossesBecomeFollowers) {
  const std::vector<double> losses{0.5, 0.9, 0.2, 0.7, 0.4};
  const Roster r = recategorize(losses, 2);
  EXPECT_EQ(followers_of(r), (std::vector<int>{1, 3}));
  EXPECT_EQ(r.leaders(), (std::vector<int>{0, 2, 4}));
}

TEST(Recategorize, TiesGoToLowerIds) {
  const std::vector<double> losses(5, 1.0);
  EXPECT_EQ(followers_of(recategorize(losses, 2)), (std::vector<int>{0, 1}));
}

TEST(Recategorize, MatchesFullSortOracle) {
  RngStream rng(31);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> losses(15);
    for (double& l : losses) l = u(rng);
    // Oracle: sort (loss desc, id asc) pairs and take the first five.
    std::vector<std::pair<double, int>> keyed;
    for (int i = 0; i < 15; ++i) keyed.emplace_back(-losses[static_cast<std::size_t>(i)], i);
    std::sort(keyed.begin(), keyed.end());
    std::vector<int> expected;
    for (int k = 0; k < 5; ++k) expected.push_back(keyed[static_cast<std::size_t>(k)].second);
    std::sort(expected.begin(), expected.end());
    EXPECT_EQ(followers_of(recategorize(losses, 5)), expected);
  }
}

TEST(Recategorize, IncrementsEpoch) {
  const std::vector<double> losses{0.1, 0.2, 0.3};
  EXPECT_EQ(recategorize(losses, 1).epoch(), 0);
  EXPECT_EQ(recategorize(losses, 1, 4).epoch(), 5);
}

TEST(Recategorize, RejectsBadPoolSizes) {
  const std::vector<double> losses{0.1, 0.2, 0.3, 0.4};
  EXPECT_THROW(recategorize(losses, 0), ValidationError);
  EXPECT_THROW(recategorize(losses, 2), ValidationError);
  const std::vector<double> two{0.1, 0.2};
  EXPECT_THROW(recategorize(two, 1), ValidationError);
}

TEST(InitialRoster, FollowerIsUniform) {
  RngStream rng(5);
  std::vector<int> counts(3, 0);
  const int draws = 10000;
  for (int k = 0; k < draws; ++k) {
    const Roster r = initial_roster(3, 1, rng);
    ++counts[static_cast<std::size_t>(r.followers().front())];
    EXPECT_EQ(r.epoch(), 0);
  }
  for (int c : counts) EXPECT_NEAR(c / static_cast<double>(draws), 1.0 / 3.0, 0.02);
}

TEST(InitialRoster, DeterministicForFixedSeed) {
  RngStream a(99), b(99);
  EXPECT_EQ(initial_roster(15, 5, a).roles(), initial_roster(15, 5, b).roles());
}

TEST(InitialRoster, EqualPoolsAreRejected) {
  RngStream rng(1);
  EXPECT_THROW(initial_roster(2, 1, rng), ValidationError);
  EXPECT_THROW(initial_roster(10, 5, rng), ValidationError);
}

TEST(Roster, ConstructorChecksInvariant) {
  EXPECT_THROW(Roster({Role::kFollower, Role::kLeader}, 0), ValidationError);
  EXPECT_THROW(Roster({Role::kLeader, Role::kLeader, Role::kLeader}, 0), ValidationError);
  const Roster r({Role::kLeader, Role::kFollower, Role::kLeader}, 2);
  EXPECT_EQ(r.leader_count(), 2);
  EXPECT_EQ(r.follower_count(), 1);
  EXPECT_EQ(r.role(1), Role::kFollower);
}

TEST(Pairing, SingleFollowerIsForced) {
  RngStream rng(3);
  const Roster r({Role::kLeader, Role::kFollower, Role::kLeader}, 0);
  const Pairing p = draw_pairing(r, rng);
  EXPECT_EQ(p.assignments.at(0), 1);
  EXPECT_EQ(p.assignments.at(2), 1);
  EXPECT_EQ(p.fan_in.at(1), 2);
  EXPECT_EQ(p.leaders_of(1), (std::vector<int>{0, 2}));
}

TEST(Pairing, FanInSumsToLeaderCount) {
  RngStream rng(8);
  const std::vector<double> losses{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15};
  const Roster r = recategorize(losses, 5);
  for (int k = 0; k < 1000; ++k) {
    const Pairing p = draw_pairing(r, rng);
    int total = 0;
    for (const auto& [f, n] : p.fan_in) {
      EXPECT_EQ(r.role(f), Role::kFollower);
      total += n;
    }
    EXPECT_EQ(total, 10);
    EXPECT_EQ(p.assignments.size(), 10u);
    for (const auto& [l, f] : p.assignments) {
      EXPECT_EQ(r.role(l), Role::kLeader);
      EXPECT_EQ(r.role(f), Role::kFollower);
    }
  }
}

// Three leaders each choose one of two followers: all 8 assignments are
// equally likely.
TEST(Pairing, AssignmentsAreUniformOverAllCombinations) {
  RngStream rng(21);
  const Roster r({Role::kLeader, Role::kLeader, Role::kLeader, Role::kFollower,
                  Role::kFollower},
                 0);
  std::map<std::vector<int>, int> counts;
  const int draws = 100000;
  for (int k = 0; k < draws; ++k) {
    const Pairing p = draw_pairing(r, rng);
    ++counts[{p.assignments.at(0), p.assignments.at(1), p.assignments.at(2)}];
  }
  ASSERT_EQ(counts.size(), 8u);
  for (const auto& [combo, c] : counts)
    EXPECT_NEAR(c / static_cast<double>(draws), 0.125, 0.02);
}

TEST(PairingProperty, MeanFanInIsLeadersPerFollower) {
  RngStream rng(44);
  const std::vector<double> losses{3, 1, 4, 1, 5, 9, 2, 6, 5, 3, 5, 8, 9, 7, 9};
  const Roster r = recategorize(losses, 5);
  const int draws = 20000;
  // Each fan-in is Binomial(10, 1/5): mean 2, variance 1.6.
  const double sigma = std::sqrt(1.6 / draws);
  std::map<int, double> sum;
  for (int k = 0; k < draws; ++k)
    for (const auto& [f, n] : draw_pairing(r, rng).fan_in) sum[f] += n;
  for (const auto& [f, s] : sum) EXPECT_NEAR(s / draws, 2.0, 3.0 * sigma);
}

TEST(RosterProperty, LeadersOutnumberFollowersAfterEveryOperation) {
  RngStream rng(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int m = 3; m <= 20; ++m) {
    for (int lf = 1; 2 * lf < m; ++lf) {
      const Roster init = initial_roster(m, lf, rng);
      EXPECT_GT(init.leader_count(), init.follower_count());
      std::vector<double> losses(static_cast<std::size_t>(m));
      for (double& l : losses) l = u(rng);
      const Roster next = recategorize(losses, lf, init.epoch());
      EXPECT_GT(next.leader_count(), next.follower_count());
      EXPECT_EQ(next.follower_count(), lf);
    }
  }
}

TEST(RecatCost, EveryOtherWorkerSendsAndReceivesOnce) {
  const RecatMessages msg = recat_message_cost(15);
  EXPECT_EQ(msg.scalars_in, 14);
  EXPECT_EQ(msg.roles_out, 14);
  EXPECT_THROW(recat_message_cost(1), ValidationError);
}

TEST(Json, RosterAndPairingSerialise) {
  RngStream rng(2);
  const Roster r({Role::kLeader, Role::kFollower, Role::kLeader}, 3);
  const nlohmann::json jr = to_json(r);
  EXPECT_EQ(jr["epoch"], 3);
  const nlohmann::json jp = to_json(draw_pairing(r, rng));
  EXPECT_EQ(jp["assignments"]["0"], 1);
  EXPECT_EQ(jp["fan_in"]["1"], 2);
}

}  // namespace
}  // namespace leasgd
