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

#ifndef LEASGD_PRIVACY_HPP_
#define LEASGD_PRIVACY_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <random>
#include <utility>
#include <vector>

#include "json.hpp"
#include "leasgd/rng.hpp"
#include "leasgd/types.hpp"

namespace leasgd {

struct PrivacyConfig {
  double clip_C = 1.0;
  double sigma2 = 0.0;  // noise multiplier; per-coordinate std is sigma2 * C
  double delta = 1e-5;
  double sampling_ratio = 1.0;  // batch size / shard size

  void validate() const;
};

// g / max(1, |g|_2 / C).
template <typename Derived>
VectorX<typename Derived::Scalar> clip_gradient(
    const Eigen::MatrixBase<Derived>& g, typename Derived::Scalar clip_C) {
  using Scalar = typename Derived::Scalar;
  require(clip_C > Scalar(0), "clip_gradient: C must be > 0");
  const Scalar scale = std::max(Scalar(1), g.norm() / clip_C);
  return g / scale;
}

// Clipped gradient plus i.i.d. N(0, (sigma2 * C)^2) per coordinate. With
// sigma2 == 0 the stream is left untouched.
template <typename Derived>
VectorX<typename Derived::Scalar> privatize_gradient(
    const Eigen::MatrixBase<Derived>& g, const PrivacyConfig& cfg,
    RngStream& rng) {
  using Scalar = typename Derived::Scalar;
  VectorX<Scalar> out = clip_gradient(g, Scalar(cfg.clip_C));
  if (cfg.sigma2 == 0.0) return out;
  std::normal_distribution<Scalar> normal(Scalar(0),
                                          Scalar(cfg.sigma2 * cfg.clip_C));
  for (Eigen::Index i = 0; i < out.size(); ++i) out(i) += normal(rng);
  return out;
}

// sqrt(2 ln(1.25 / delta)) / epsilon.
double calibrate_sigma(double epsilon, double delta);

inline constexpr int kMaxMomentOrder = 64;
using MomentTable = std::array<double, kMaxMomentOrder>;  // index = order - 1

// One invocation of the (subsampled) Gaussian mechanism: log-moment
// alpha(lambda) for lambda = 1..64. q == 1 uses lambda(lambda+1)/(2 sigma^2);
// q < 1 integrates both privacy-loss directions numerically and keeps the
// larger one.
MomentTable gaussian_log_moments(double sigma2, double sampling_ratio);

enum class AccountingMethod { kMoments, kStrongComposition };

class PrivacyLedger {
 public:
  PrivacyLedger() = default;
  explicit PrivacyLedger(AccountingMethod method) : method_(method) {}

  long steps() const { return steps_; }
  bool is_private() const { return !non_private_; }
  AccountingMethod method() const { return method_; }
  const MomentTable& log_moments() const { return log_moments_; }
  const std::optional<PrivacyConfig>& config() const { return config_; }

  void account_step(const PrivacyConfig& cfg) { account_steps(cfg, 1); }
  // Same as `count` calls to account_step.
  void account_steps(const PrivacyConfig& cfg, long count);

 private:
  AccountingMethod method_ = AccountingMethod::kMoments;
  long steps_ = 0;
  bool non_private_ = false;
  std::optional<PrivacyConfig> config_;
  // Homogeneous runs of steps; log-moments are count * per-step table.
  struct Segment {
    PrivacyConfig config;
    MomentTable per_step;
    long count;
  };
  std::vector<Segment> segments_;
  MomentTable log_moments_{};
};

// min over lambda of (alpha_total(lambda) + ln(1/delta)) / lambda; +inf for a
// ledger that saw sigma2 == 0.
double spent_epsilon(const PrivacyLedger& ledger, double delta);

struct EpsilonDelta {
  double epsilon = 0.0;
  double delta = 0.0;
};

EpsilonDelta strong_composition_epsilon(double eps0, double delta0, long steps,
                                        double delta_slack);

// Strong composition applied to `steps` Gaussian invocations with noise
// multiplier sigma2, with the total delta split evenly between the per-step
// deltas and the slack.
double strong_composition_for_gaussian(double sigma2, long steps,
                                       double delta);

nlohmann::json to_json(const PrivacyLedger& ledger);
PrivacyLedger ledger_from_json(const nlohmann::json& j);

}  // namespace leasgd

#endif  // LEASGD_PRIVACY_HPP_
