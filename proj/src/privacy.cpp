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

#include "leasgd/privacy.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace leasgd {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool same_config(const PrivacyConfig& a, const PrivacyConfig& b) {
  return a.clip_C == b.clip_C && a.sigma2 == b.sigma2 &&
         a.sampling_ratio == b.sampling_ratio;
}

double log_add_exp(double a, double b) {
  if (a == -kInf) return b;
  if (b == -kInf) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(-std::abs(a - b)));
}

// log of  E_{z ~ N(0, s^2)} [ r(z)^power ]  with
// r(z) = (1 - q) + q exp((2z - 1) / (2 s^2)), the density ratio between the
// subsampled mixture and the base Gaussian.
double log_mixture_moment(double sigma, double q, double power) {
  const double var = sigma * sigma;
  const double log_norm = -std::log(sigma * std::sqrt(2.0 * std::numbers::pi));
  const double log_keep = std::log1p(-q);
  const double log_q = std::log(q);
  auto log_integrand = [&](double z) {
    const double log_ratio =
        log_add_exp(log_keep, log_q + (2.0 * z - 1.0) / (2.0 * var));
    return log_norm - z * z / (2.0 * var) + power * log_ratio;
  };

  // The integrand is a Gaussian bump shifted right by at most `power`.
  const double lo = -50.0 * sigma - 1.0;
  const double hi = std::max(power, 0.0) + 50.0 * sigma + 1.0;
  const int grid = 4000;
  double peak = lo;
  double peak_value = -kInf;
  for (int k = 0; k <= grid; ++k) {
    const double z = lo + (hi - lo) * k / grid;
    const double v = log_integrand(z);
    if (v > peak_value) {
      peak_value = v;
      peak = z;
    }
  }
  if (!std::isfinite(peak_value)) return kInf;

  auto shifted = [&](double z) { return std::exp(log_integrand(z) - peak_value); };
  using boost::math::quadrature::gauss_kronrod;
  double err_left = 0.0;
  double err_right = 0.0;
  const double left =
      gauss_kronrod<double, 61>::integrate(shifted, lo, peak, 20, 1e-13, &err_left);
  const double right = gauss_kronrod<double, 61>::integrate(shifted, peak, hi,
                                                            20, 1e-13, &err_right);
  const double mass = left + right;
  if (!(mass > 0.0) || !std::isfinite(mass)) return kInf;
  return peak_value + std::log(mass);
}

}  // namespace

void PrivacyConfig::validate() const {
  require(clip_C > 0.0, "privacy: clip bound C must be > 0");
  require(sigma2 >= 0.0, "privacy: sigma2 must be >= 0");
  require(delta > 0.0 && delta < 1.0, "privacy: delta must be in (0, 1)");
  require(sampling_ratio > 0.0 && sampling_ratio <= 1.0,
          "privacy: sampling ratio must be in (0, 1]");
}

double calibrate_sigma(double epsilon, double delta) {
  require(epsilon > 0.0, "calibrate_sigma: epsilon must be > 0");
  require(delta > 0.0 && delta < 1.0, "calibrate_sigma: delta must be in (0, 1)");
  return std::sqrt(2.0 * std::log(1.25 / delta)) / epsilon;
}

MomentTable gaussian_log_moments(double sigma2, double sampling_ratio) {
  require(sigma2 > 0.0, "gaussian_log_moments: sigma2 must be > 0");
  require(sampling_ratio > 0.0 && sampling_ratio <= 1.0,
          "gaussian_log_moments: sampling ratio must be in (0, 1]");
  MomentTable table{};
  for (int order = 1; order <= kMaxMomentOrder; ++order) {
    const double lam = order;
    double value = 0.0;
    if (sampling_ratio == 1.0) {
      value = lam * (lam + 1.0) / (2.0 * sigma2 * sigma2);
    } else {
      // E_{mu}[(mu/mu0)^lam] = E_{mu0}[(mu/mu0)^(lam+1)], and the reverse
      // direction E_{mu0}[(mu0/mu)^lam].
      const double forward =
          log_mixture_moment(sigma2, sampling_ratio, lam + 1.0);
      const double reverse = log_mixture_moment(sigma2, sampling_ratio, -lam);
      value = std::max(forward, reverse);
    }
    table[static_cast<std::size_t>(order - 1)] = value;
  }
  return table;
}

void PrivacyLedger::account_steps(const PrivacyConfig& cfg, long count) {
  cfg.validate();
  require(count >= 0, "account_steps: negative step count");
  if (count == 0) return;
  steps_ += count;
  config_ = cfg;
  if (cfg.sigma2 == 0.0) {
    non_private_ = true;
    return;
  }
  if (segments_.empty() || !same_config(segments_.back().config, cfg)) {
    segments_.push_back(Segment{
        cfg, gaussian_log_moments(cfg.sigma2, cfg.sampling_ratio), 0});
  }
  segments_.back().count += count;
  log_moments_.fill(0.0);
  for (const Segment& s : segments_)
    for (std::size_t k = 0; k < log_moments_.size(); ++k)
      log_moments_[k] += static_cast<double>(s.count) * s.per_step[k];
}

double spent_epsilon(const PrivacyLedger& ledger, double delta) {
  require(ledger.steps() >= 1, "spent_epsilon: ledger has no steps");
  require(delta > 0.0 && delta < 1.0, "spent_epsilon: delta must be in (0, 1)");
  if (!ledger.is_private()) return kInf;
  double best = kInf;
  const double log_inv_delta = std::log(1.0 / delta);
  for (int order = 1; order <= kMaxMomentOrder; ++order) {
    const double moment = ledger.log_moments()[static_cast<std::size_t>(order - 1)];
    best = std::min(best, (moment + log_inv_delta) / order);
  }
  return best;
}

EpsilonDelta strong_composition_epsilon(double eps0, double delta0, long steps,
                                        double delta_slack) {
  require(eps0 >= 0.0, "strong composition: eps0 must be >= 0");
  require(delta0 >= 0.0 && delta0 < 1.0,
          "strong composition: delta0 must be in [0, 1)");
  require(steps >= 1, "strong composition: T must be >= 1");
  require(delta_slack > 0.0 && delta_slack < 1.0,
          "strong composition: slack delta must be in (0, 1)");
  const double t = static_cast<double>(steps);
  return EpsilonDelta{
      .epsilon = eps0 * std::sqrt(2.0 * t * std::log(1.0 / delta_slack)) +
                 t * eps0 * std::expm1(eps0),
      .delta = t * delta0 + delta_slack};
}

double strong_composition_for_gaussian(double sigma2, long steps,
                                       double delta) {
  require(sigma2 > 0.0, "strong composition: sigma2 must be > 0");
  require(steps >= 1, "strong composition: T must be >= 1");
  const double slack = delta / 2.0;
  const double delta0 = delta / (2.0 * static_cast<double>(steps));
  const double eps0 = std::sqrt(2.0 * std::log(1.25 / delta0)) / sigma2;
  return strong_composition_epsilon(eps0, delta0, steps, slack).epsilon;
}

nlohmann::json to_json(const PrivacyLedger& ledger) {
  nlohmann::json j;
  const PrivacyConfig cfg = ledger.config().value_or(PrivacyConfig{});
  j["steps"] = ledger.steps();
  j["sigma2"] = cfg.sigma2;
  j["clip_C"] = cfg.clip_C;
  j["q"] = cfg.sampling_ratio;
  j["delta"] = cfg.delta;
  j["method"] = ledger.method() == AccountingMethod::kMoments
                    ? "moments"
                    : "strong_composition";
  const bool finite = ledger.steps() > 0 && ledger.is_private();
  // JSON has no infinity; a non-private ledger reports null.
  j["epsilon_moments"] =
      finite ? nlohmann::json(spent_epsilon(ledger, cfg.delta)) : nlohmann::json();
  j["epsilon_strong_composition"] =
      finite ? nlohmann::json(strong_composition_for_gaussian(
                   cfg.sigma2, ledger.steps(), cfg.delta))
             : nlohmann::json();
  return j;
}

PrivacyLedger ledger_from_json(const nlohmann::json& j) {
  try {
    PrivacyConfig cfg;
    cfg.sigma2 = j.at("sigma2").get<double>();
    cfg.sampling_ratio = j.at("q").get<double>();
    cfg.delta = j.at("delta").get<double>();
    cfg.clip_C = j.value("clip_C", 1.0);
    const std::string method = j.value("method", std::string("moments"));
    require(method == "moments" || method == "strong_composition",
            "ledger: unknown method '" + method + "'");
    PrivacyLedger ledger(method == "moments"
                             ? AccountingMethod::kMoments
                             : AccountingMethod::kStrongComposition);
    ledger.account_steps(cfg, j.at("steps").get<long>());
    return ledger;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("ledger JSON: ") + e.what());
  }
}

}  // namespace leasgd
