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

#ifndef LEASGD_THEORY_HPP_
#define LEASGD_THEORY_HPP_

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "leasgd/optimizer.hpp"
#include "leasgd/problem.hpp"
#include "leasgd/trace.hpp"

namespace leasgd {

// A violated convergence precondition; `constraint` names it.
class PreconditionViolation : public ValidationError {
 public:
  PreconditionViolation(std::string constraint, const std::string& detail)
      : ValidationError(constraint + ": " + detail),
        constraint_(std::move(constraint)) {}
  const std::string& constraint() const { return constraint_; }

 private:
  std::string constraint_;
};

// Constants of the d_t bound for one subsystem of p leaders and 1 follower.
//   gamma = 2 eta mu L / (mu + L),  h = p (1 - gamma) / (p + 1),
//   k_const = (1 - gamma) / (p + 1),  so k_const + h = 1 - gamma.
struct TheoryParams {
  double eta = 0.0;
  double rho = 0.0;
  double alpha = 0.0;
  int p = 1;
  double beta = 0.0;
  double mu = 0.0;
  double lipschitz = 0.0;
  double gamma = 0.0;
  double h = 0.0;
  double k_const = 0.0;
  double sigma1_sq = 0.0;
  double d0 = 0.0;
  double c0 = 0.0;

  double noise_floor() const { return eta * eta * sigma1_sq / gamma; }
};

// Largest eta admitted by the convergence bound for a given beta: 2 (1 - beta) / (mu + L).
double max_theory_eta(double beta, double mu, double lipschitz);

// Throws PreconditionViolation on eta > 2(1-beta)/(mu+L), alpha or beta
// outside [0, 1), an MLP problem, or a missing optimum.
TheoryParams derive_theory_params(const Problem& problem, const HyperParams& hp,
                                  int p, double sigma1_sq, double d0,
                                  double c0);
TheoryParams derive_theory_params(const Problem& problem, const HyperParams& hp,
                                  int p, double sigma1_sq,
                                  const std::vector<Vector>& initial_ws);

// Private runs: sigma1^2 -> sigma1^2 + C^2 sigma2^2.
TheoryParams with_privacy_noise(TheoryParams tp, double clip_C, double sigma2);

// p for a whole system of independent subsystems: round((m - L_f) / L_f).
int subsystem_leaders(int workers, int followers);

// The three summands of the bound at iteration t:
//   h^t d0,
//   (c0 - eta^2 sigma1^2 / gamma) (1 - gamma)^t (1 - (p / (p + 1))^t),
//   eta^2 sigma1^2 (1 - h^t) / gamma.
std::array<double, 3> bound_terms(const TheoryParams& tp, long t);
double distance_bound(const TheoryParams& tp, long t);

// Average gap of a subsystem's workers to w* (leaders and the follower).
double subsystem_gap(std::span<const Vector> workers, const Vector& w_star);

struct DistanceSeries {
  std::vector<double> d;       // index t = 0..T
  std::vector<double> stderr_;  // Monte Carlo standard error per t
  int seeds_averaged = 0;
};

// Seed-average of the recorded d_t (index 0 is the initial gap). Requires
// traces of equal length recorded against a known optimum.
DistanceSeries measure_dt(std::span<const RunTrace> traces);

struct BoundReport {
  bool pass = true;
  std::optional<long> first_violation_t;
  double worst_ratio_to_bound = 0.0;  // max_t d_t / bound(t)
  double empirical_ratio = 0.0;       // tail mean of d_{t+1} / d_t
  double max_ratio_after_warmup = 0.0;  // max over t >= 10 of d_{t+1} / d_t
  double h = 0.0;
  double slack = 0.0;
  std::vector<double> bound;
};

// d_t <= (1 + slack) bound(t) for every t. The empirical ratio averages
// d_{t+1} / d_t over the second half of the series.
BoundReport check_bound_dominance(const DistanceSeries& series,
                                  const TheoryParams& tp, double slack);

// Asymptotic penalty eta^2 C^2 sigma2^2 / gamma added by the privacy noise.
double privacy_tradeoff_floor(const TheoryParams& tp, double clip_C,
                              double sigma2);

struct RateRow {
  long t = 0;
  double leasgd = 0.0;   // h^t
  double dpsgd = 0.0;    // 1 / ((p + 1) t)
  double product = 0.0;  // h^t (p + 1) t = leasgd / dpsgd
};

struct RateReport {
  std::vector<RateRow> rows;
  // Smallest grid t from which h^t < 1/((p+1)t) holds for the rest of the
  // grid and, the product being decreasing there, for every larger t.
  std::optional<long> crossover_t;
  // Smallest grid t from which the product is monotone decreasing.
  std::optional<long> decreasing_from_t;
};

RateReport rate_comparison(double h, int p, std::span<const long> t_grid);

nlohmann::json to_json(const TheoryParams& tp);
nlohmann::json to_json(const BoundReport& report);

}  // namespace leasgd

#endif  // LEASGD_THEORY_HPP_
