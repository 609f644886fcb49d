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

#include "leasgd/theory.hpp"

#include <algorithm>
#include <cmath>

namespace leasgd {

double max_theory_eta(double beta, double mu, double lipschitz) {
  return 2.0 * (1.0 - beta) / (mu + lipschitz);
}

TheoryParams derive_theory_params(const Problem& problem, const HyperParams& hp,
                                  int p, double sigma1_sq, double d0,
                                  double c0) {
  if (!problem.is_convex())
    throw PreconditionViolation("strong_convexity",
                                "MLP problems carry no (mu, L)");
  if (!problem.optimum)
    throw PreconditionViolation("known_optimum",
                                "the problem has no closed-form optimum");
  if (!(problem.mu > 0.0))
    throw PreconditionViolation("strong_convexity", "mu must be > 0");
  require(p >= 1, "theory: p must be >= 1");
  require(sigma1_sq >= 0.0, "theory: sigma1^2 must be >= 0");

  TheoryParams tp;
  tp.eta = hp.eta;
  tp.rho = hp.rho;
  tp.alpha = hp.eta * hp.rho;
  tp.p = p;
  tp.beta = p * tp.alpha;
  tp.mu = problem.mu;
  tp.lipschitz = problem.lipschitz;
  tp.sigma1_sq = sigma1_sq;
  tp.d0 = d0;
  tp.c0 = c0;

  if (!(tp.alpha >= 0.0 && tp.alpha < 1.0))
    throw PreconditionViolation("alpha_range",
                                "alpha = " + std::to_string(tp.alpha) +
                                    " outside [0, 1)");
  if (!(tp.beta >= 0.0 && tp.beta < 1.0))
    throw PreconditionViolation("beta_range",
                                "beta = p * alpha = " + std::to_string(tp.beta) +
                                    " outside [0, 1)");
  const double eta_max = max_theory_eta(tp.beta, tp.mu, tp.lipschitz);
  if (!(hp.eta > 0.0 && hp.eta <= eta_max))
    throw PreconditionViolation("eta_bound",
                                "eta = " + std::to_string(hp.eta) +
                                    " exceeds 2(1-beta)/(mu+L) = " +
                                    std::to_string(eta_max));

  tp.gamma = 2.0 * hp.eta * tp.mu * tp.lipschitz / (tp.mu + tp.lipschitz);
  tp.h = p * (1.0 - tp.gamma) / (p + 1.0);
  tp.k_const = (1.0 - tp.gamma) / (p + 1.0);
  return tp;
}

TheoryParams derive_theory_params(const Problem& problem, const HyperParams& hp,
                                  int p, double sigma1_sq,
                                  const std::vector<Vector>& initial_ws) {
  require(!initial_ws.empty(), "theory: no initial parameter vectors");
  if (!problem.optimum)
    throw PreconditionViolation("known_optimum",
                                "the problem has no closed-form optimum");
  double sum = 0.0;
  double worst = 0.0;
  for (const Vector& w : initial_ws) {
    const double gap = (w - *problem.optimum).squaredNorm();
    sum += gap;
    worst = std::max(worst, gap);
  }
  return derive_theory_params(problem, hp, p, sigma1_sq,
                              sum / static_cast<double>(initial_ws.size()),
                              worst);
}

TheoryParams with_privacy_noise(TheoryParams tp, double clip_C, double sigma2) {
  tp.sigma1_sq += clip_C * clip_C * sigma2 * sigma2;
  return tp;
}

int subsystem_leaders(int workers, int followers) {
  require(followers >= 1 && workers > 2 * followers,
          "subsystem_leaders: need 1 <= L_f and 2 L_f < m");
  return static_cast<int>(std::lround(static_cast<double>(workers - followers) /
                                      followers));
}

std::array<double, 3> bound_terms(const TheoryParams& tp, long t) {
  require(t >= 0, "bound: t must be >= 0");
  const double td = static_cast<double>(t);
  const double floor = tp.noise_floor();
  const double ht = std::pow(tp.h, td);
  const double fresh = 1.0 - std::pow(tp.p / (tp.p + 1.0), td);
  return {ht * tp.d0, (tp.c0 - floor) * std::pow(1.0 - tp.gamma, td) * fresh,
          floor * (1.0 - ht)};
}

double distance_bound(const TheoryParams& tp, long t) {
  const auto terms = bound_terms(tp, t);
  return terms[0] + terms[1] + terms[2];
}

double subsystem_gap(std::span<const Vector> workers, const Vector& w_star) {
  require(!workers.empty(), "subsystem_gap: no workers");
  double sum = 0.0;
  for (const Vector& w : workers) {
    require(w.size() == w_star.size(), "subsystem_gap: dimension mismatch");
    sum += (w - w_star).squaredNorm();
  }
  return sum / static_cast<double>(workers.size());
}

DistanceSeries measure_dt(std::span<const RunTrace> traces) {
  require(!traces.empty(), "measure_dt: need at least one trace");
  const std::size_t length = traces.front().rows.size();
  for (const RunTrace& tr : traces) {
    require(tr.rows.size() == length, "measure_dt: traces differ in length");
    require(std::isfinite(tr.initial_d),
            "measure_dt: trace has no known optimum (d_t undefined)");
  }
  const auto n = static_cast<double>(traces.size());
  DistanceSeries out;
  out.seeds_averaged = static_cast<int>(traces.size());
  out.d.resize(length + 1);
  out.stderr_.resize(length + 1);
  for (std::size_t t = 0; t <= length; ++t) {
    double sum = 0.0;
    double sq = 0.0;
    for (const RunTrace& tr : traces) {
      const double v = t == 0 ? tr.initial_d : tr.rows[t - 1].d_t;
      sum += v;
      sq += v * v;
    }
    const double mean = sum / n;
    out.d[t] = mean;
    out.stderr_[t] =
        n > 1 ? std::sqrt(std::max(0.0, (sq - n * mean * mean) / (n - 1)) / n)
              : 0.0;
  }
  return out;
}

BoundReport check_bound_dominance(const DistanceSeries& series,
                                  const TheoryParams& tp, double slack) {
  BoundReport report;
  report.h = tp.h;
  report.slack = slack;
  const std::size_t n = series.d.size();
  report.bound.resize(n);
  for (std::size_t t = 0; t < n; ++t) {
    const double b = distance_bound(tp, static_cast<long>(t));
    report.bound[t] = b;
    if (b > 0.0)
      report.worst_ratio_to_bound =
          std::max(report.worst_ratio_to_bound, series.d[t] / b);
    if (series.d[t] > (1.0 + slack) * b && !report.first_violation_t) {
      report.pass = false;
      report.first_violation_t = static_cast<long>(t);
    }
  }
  if (n >= 3) {
    const std::size_t start = std::max<std::size_t>(1, (n - 1) / 2);
    double sum = 0.0;
    int count = 0;
    for (std::size_t t = start; t + 1 < n; ++t) {
      if (series.d[t] <= 0.0) continue;
      sum += series.d[t + 1] / series.d[t];
      ++count;
    }
    report.empirical_ratio = count > 0 ? sum / count : 0.0;
    for (std::size_t t = 10; t + 1 < n; ++t)
      if (series.d[t] > 0.0)
        report.max_ratio_after_warmup = std::max(
            report.max_ratio_after_warmup, series.d[t + 1] / series.d[t]);
  }
  return report;
}

double privacy_tradeoff_floor(const TheoryParams& tp, double clip_C,
                              double sigma2) {
  return tp.eta * tp.eta * clip_C * clip_C * sigma2 * sigma2 / tp.gamma;
}

RateReport rate_comparison(double h, int p, std::span<const long> t_grid) {
  require(h > 0.0 && h < 1.0, "rate_comparison: h must be in (0, 1)");
  require(p >= 1, "rate_comparison: p must be >= 1");
  require(!t_grid.empty(), "rate_comparison: empty grid");
  RateReport report;
  for (long t : t_grid) {
    require(t >= 1, "rate_comparison: grid must start at t >= 1");
    require(report.rows.empty() || t > report.rows.back().t,
            "rate_comparison: grid must be strictly increasing");
    const double td = static_cast<double>(t);
    const double lea = std::pow(h, td);
    const double dp = 1.0 / ((p + 1.0) * td);
    report.rows.push_back(RateRow{t, lea, dp, lea * (p + 1.0) * td});
  }
  // h^t t decreases for every t > 1 / ln(1/h), so once the grid is past that
  // turning point a product below 1 stays below 1 for all larger t. The
  // turning point is used directly: scanning the products is unreliable
  // once h^t becomes subnormal.
  const auto& rows = report.rows;
  const double turning = 1.0 / std::log(1.0 / h);
  std::size_t dec = 0;
  while (dec < rows.size() && static_cast<double>(rows[dec].t) < turning) ++dec;
  if (dec < rows.size()) report.decreasing_from_t = rows[dec].t;

  std::size_t below = rows.size();
  while (below > 0 && rows[below - 1].product < 1.0) --below;
  const std::size_t first = std::max(below, dec);
  if (first < rows.size()) report.crossover_t = rows[first].t;
  return report;
}

nlohmann::json to_json(const TheoryParams& tp) {
  return {{"eta", tp.eta},       {"rho", tp.rho},
          {"alpha", tp.alpha},   {"p", tp.p},
          {"beta", tp.beta},     {"mu", tp.mu},
          {"lipschitz", tp.lipschitz}, {"gamma", tp.gamma},
          {"h", tp.h},           {"k_const", tp.k_const},
          {"sigma1_sq", tp.sigma1_sq}, {"d0", tp.d0},
          {"c0", tp.c0},         {"noise_floor", tp.noise_floor()}};
}

nlohmann::json to_json(const BoundReport& report) {
  nlohmann::json j{{"pass", report.pass},
                   {"slack", report.slack},
                   {"h", report.h},
                   {"empirical_ratio", report.empirical_ratio},
                   {"max_ratio_after_warmup", report.max_ratio_after_warmup},
                   {"worst_ratio_to_bound", report.worst_ratio_to_bound}};
  j["first_violation_t"] = report.first_violation_t
                               ? nlohmann::json(*report.first_violation_t)
                               : nlohmann::json();
  return j;
}

}  // namespace leasgd
