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

#ifndef LEASGD_TRACE_HPP_
#define LEASGD_TRACE_HPP_

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "leasgd/privacy.hpp"
#include "leasgd/types.hpp"

namespace leasgd {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// One row per iteration (sync) or per wake-up event (async), recorded after
// the update. `t` counts completed iterations/events, starting at 1.
struct TraceRow {
  long t = 0;
  double virtual_time = 0.0;
  double mean_loss = 0.0;
  double d_t = kNaN;  // mean squared distance to w*, NaN when unknown
  long vectors_cum = 0;
  long scalars_cum = 0;
  double epsilon = kNaN;  // NaN for non-private runs
};

struct RunTrace {
  std::string algorithm;
  int workers = 0;
  int followers = 0;
  int tau = 1;
  std::uint64_t seed = 0;

  std::vector<TraceRow> rows;
  Matrix worker_losses;  // rows.size() x workers

  double initial_mean_loss = 0.0;
  double initial_d = kNaN;  // mean |w_0 - w*|^2 over workers
  double initial_c = kNaN;  // max |w_0 - w*|^2 over workers

  long comm_rounds = 0;
  long recat_rounds = 0;
  std::vector<long> step_counts;
  std::vector<Vector> final_params;
  std::optional<PrivacyLedger> ledger;  // worker with the most steps
};

}  // namespace leasgd

#endif  // LEASGD_TRACE_HPP_
