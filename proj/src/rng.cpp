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

#include "leasgd/rng.hpp"

#include "leasgd/types.hpp"

namespace leasgd {

RngStream make_stream(std::uint64_t master_seed, StreamPurpose purpose,
                      std::uint64_t index) {
  return RngStream(
      derive_seed(master_seed, static_cast<std::uint64_t>(purpose), index));
}

SeedStreams seed_streams(std::uint64_t master_seed, int worker_count) {
  require(worker_count >= 1, "seed_streams: worker count must be >= 1");
  SeedStreams streams{
      .workers = {},
      .coordinator = make_stream(master_seed, StreamPurpose::kCoordinator)};
  streams.workers.reserve(static_cast<std::size_t>(worker_count));
  for (int i = 0; i < worker_count; ++i) {
    const auto idx = static_cast<std::uint64_t>(i);
    streams.workers.push_back(WorkerStreams{
        .data = make_stream(master_seed, StreamPurpose::kData, idx),
        .noise = make_stream(master_seed, StreamPurpose::kNoise, idx),
        .clock = make_stream(master_seed, StreamPurpose::kClock, idx)});
  }
  return streams;
}

}  // namespace leasgd
