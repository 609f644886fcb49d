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

#ifndef LEASGD_RNG_HPP_
#define LEASGD_RNG_HPP_

#include <cstdint>
#include <random>
#include <vector>

namespace leasgd {

using RngStream = std::mt19937_64;

// SplitMix64 finalizer; used to derive statistically unrelated sub-seeds.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Deterministic child seed of `parent` along a (label, index) path.
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t label,
                                    std::uint64_t index = 0) {
  return mix64(mix64(mix64(parent) ^ label) ^ mix64(index + 0x5bd1e995ULL));
}

enum class StreamPurpose : std::uint64_t {
  kData = 1,
  kNoise = 2,
  kClock = 3,
  kCoordinator = 4,
  kAuxiliary = 5,
};

struct WorkerStreams {
  RngStream data;   // minibatch sampling and initialisation
  RngStream noise;  // differential-privacy noise
  RngStream clock;  // Poisson wake-ups
};

struct SeedStreams {
  std::vector<WorkerStreams> workers;
  RngStream coordinator;  // pairing and initial roster
};

// Three streams per worker plus one coordinator stream, all derived from
// `master_seed` through the SplitMix64 tree. Period of each stream is
// 2^19937 - 1.
SeedStreams seed_streams(std::uint64_t master_seed, int worker_count);

RngStream make_stream(std::uint64_t master_seed, StreamPurpose purpose,
                      std::uint64_t index = 0);

}  // namespace leasgd

#endif  // LEASGD_RNG_HPP_
