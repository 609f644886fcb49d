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

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "leasgd/harness.hpp"
#include "leasgd/theory.hpp"
#include "test_support.hpp"

namespace leasgd {
namespace {

using testing::exact_quadratic_shard;

Problem reference_quadratic() {
  Problem p = make_quadratic(3, 1.0, 3.0, 5);
  return p;
}

HyperParams hyper(double eta, double rho) {
  HyperParams hp;
  hp.eta = eta;
  hp.rho = rho;
  return hp;
}

TheoryParams reference_params(double sigma1_sq = 0.0) {
  return derive_theory_params(reference_quadratic(), hyper(0.1, 0.5), 4, sigma1_sq, 2.0, 3.0);
}

// Independent evaluation of the three summands.
double bound_oracle(double h, double gamma, int p, double eta, double s1, double d0,
                    double c0, long t) {
  const double floor = eta * eta * s1 / gamma;
  const double pt = static_cast<double>(p);
  return std::pow(h, t) * d0 +
         (c0 - floor) * std::pow(1.0 - gamma, t) * (1.0 - std::pow(pt / (pt + 1.0), t)) +
         floor * (1.0 - std::pow(h, t));
}

std::string constraint_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const PreconditionViolation& e) {
    return e.constraint();
  }
  return "";
}

// --- constants -------------------------------------------------------------

TEST(TheoryParams, ReferenceSubstitution) {
  const TheoryParams tp = reference_params();
  EXPECT_NEAR(tp.gamma, 0.15, 1e-15);
  EXPECT_NEAR(tp.alpha, 0.05, 1e-15);
  EXPECT_NEAR(tp.beta, 0.2, 1e-15);
  EXPECT_NEAR(tp.h, 0.68, 1e-15);
  EXPECT_NEAR(tp.k_const, 0.17, 1e-15);
  EXPECT_NEAR(tp.k_const + tp.h, 0.85, 1e-15);
}

TEST(TheoryParams, ZeroElasticFactor) {
  const TheoryParams tp = derive_theory_params(reference_quadratic(), hyper(0.1, 0.0), 4,
                                               0.0, 1.0, 1.0);
  EXPECT_EQ(tp.alpha, 0.0);
  EXPECT_EQ(tp.beta, 0.0);
  EXPECT_NEAR(tp.h, 4.0 * 0.85 / 5.0, 1e-15);
  EXPECT_LT(tp.h, 1.0);
}

TEST(TheoryParams, StepSizeJustAboveTheLimitIsRejected) {
  const Problem q = reference_quadratic();
  const double limit = max_theory_eta(0.2, 1.0, 3.0);
  EXPECT_NEAR(limit, 0.4, 1e-15);
  // beta = p eta rho is held at 0.2 by scaling rho with eta.
  const double inside = std::nextafter(limit, 0.0);
  EXPECT_NO_THROW(derive_theory_params(q, hyper(inside, 0.05 / inside), 4, 0.0, 1.0, 1.0));
  const double outside = limit * (1.0 + 1e-9);
  EXPECT_EQ(constraint_of([&] {
              derive_theory_params(q, hyper(outside, 0.05 / outside), 4, 0.0, 1.0, 1.0);
            }),
            "eta_bound");
}

TEST(TheoryParams, PreconditionsAreStructuredErrors) {
  const Problem q = reference_quadratic();
  EXPECT_EQ(constraint_of([&] { derive_theory_params(q, hyper(0.1, 3.0), 4, 0, 1, 1); }),
            "beta_range");
  EXPECT_EQ(constraint_of([&] { derive_theory_params(q, hyper(0.1, 10.0), 1, 0, 1, 1); }),
            "alpha_range");
  const Problem mlp = make_mlp(4, 2, 0.01);
  EXPECT_EQ(constraint_of([&] { derive_theory_params(mlp, hyper(0.1, 0.5), 1, 0, 1, 1); }),
            "strong_convexity");
  Problem unknown = q;
  unknown.optimum.reset();
  EXPECT_EQ(constraint_of([&] { derive_theory_params(unknown, hyper(0.1, 0.5), 1, 0, 1, 1); }),
            "known_optimum");
}

TEST(TheoryParams, GapsFromInitialVectors) {
  Problem q = make_quadratic(Matrix::Identity(2, 2), Vector::Zero(2));
  const std::vector<Vector> ws = {Eigen::Vector2d{1.0, 0.0}, Eigen::Vector2d{0.0, 3.0}};
  const TheoryParams tp = derive_theory_params(q, hyper(0.1, 0.5), 1, 0.0, ws);
  EXPECT_DOUBLE_EQ(tp.d0, 5.0);
  EXPECT_DOUBLE_EQ(tp.c0, 9.0);
}

TEST(TheoryProperty, ConstantIdentityAndMonotoneH) {
  RngStream rng(31);
  std::uniform_real_distribution<double> unit(0.05, 0.95);
  const Problem base = reference_quadratic();
  for (int k = 0; k < 2000; ++k) {
    Problem q = base;
    q.mu = 0.1 + 2.0 * unit(rng);
    q.lipschitz = q.mu * (1.0 + 10.0 * unit(rng));
    const int p = 1 + k % 12;
    const double beta = 0.9 * unit(rng);
    const double eta = unit(rng) * max_theory_eta(beta, q.mu, q.lipschitz);
    const TheoryParams tp =
        derive_theory_params(q, hyper(eta, beta / (p * eta)), p, unit(rng), 1.0, 1.0);
    EXPECT_NEAR(tp.k_const + tp.h, 1.0 - tp.gamma, 1e-15);
    EXPECT_GT(tp.gamma, 0.0);
    EXPECT_LT(tp.gamma, 1.0);
    EXPECT_GT(tp.h, 0.0);
    EXPECT_LT(tp.h, 1.0);

    TheoryParams next = tp;
    next.p = p + 1;
    next.h = next.p * (1.0 - tp.gamma) / (next.p + 1.0);
    EXPECT_LT(tp.h, next.h);
    EXPECT_LT(next.h, 1.0 - tp.gamma);
    EXPECT_EQ(tp.noise_floor(), next.noise_floor());
  }
}

TEST(TheoryParams, SubsystemLeaders) {
  EXPECT_EQ(subsystem_leaders(5, 1), 4);
  EXPECT_EQ(subsystem_leaders(15, 5), 2);
  EXPECT_EQ(subsystem_leaders(8, 3), 2);  // 5/3 rounds to 2
  EXPECT_THROW(subsystem_leaders(5, 0), ValidationError);
}

// --- bound -----------------------------------------------------------------

TEST(Bound, StartsAtD0) {
  const TheoryParams tp = reference_params(4.0);
  EXPECT_EQ(distance_bound(tp, 0), tp.d0);
}

TEST(Bound, MatchesTermByTermEvaluation) {
  const TheoryParams tp = reference_params(4.0);
  for (long t : {0L, 1L, 2L, 7L, 50L, 400L}) {
    EXPECT_NEAR(distance_bound(tp, t),
                bound_oracle(0.68, 0.15, 4, 0.1, 4.0, 2.0, 3.0, t), 1e-13);
    const auto terms = bound_terms(tp, t);
    EXPECT_DOUBLE_EQ(terms[0] + terms[1] + terms[2], distance_bound(tp, t));
  }
}

TEST(Bound, NoiselessBoundVanishes) {
  const TheoryParams tp = reference_params(0.0);
  for (long t = 0; t <= 400; t += 20)
    EXPECT_LE(distance_bound(tp, t),
              tp.d0 * std::pow(tp.h, t) + tp.c0 * std::pow(1.0 - tp.gamma, t) + 1e-15);
  EXPECT_LT(distance_bound(tp, 400), 1e-25);
}

TEST(Bound, NoisyBoundApproachesTheFloor) {
  const TheoryParams tp = reference_params(4.0);
  EXPECT_NEAR(tp.noise_floor(), 0.01 * 4.0 / 0.15, 1e-15);
  EXPECT_NEAR(distance_bound(tp, 2000), tp.noise_floor(), 1e-12);
}

// Each summand is non-negative once c0 covers the noise floor; the first
// decays monotonically and the second decays from its single peak onward.
TEST(BoundProperty, TermwiseSignAndDecay) {
  RngStream rng(8);
  std::uniform_real_distribution<double> unit(0.01, 0.99);
  for (int k = 0; k < 500; ++k) {
    TheoryParams tp = reference_params(0.0);
    tp.gamma = unit(rng);
    tp.p = 1 + k % 10;
    tp.h = tp.p * (1.0 - tp.gamma) / (tp.p + 1.0);
    tp.k_const = (1.0 - tp.gamma) / (tp.p + 1.0);
    tp.sigma1_sq = 10.0 * unit(rng);
    tp.c0 = tp.noise_floor() + 5.0 * unit(rng);
    tp.d0 = tp.c0 * unit(rng);
    std::array<double, 3> prev = bound_terms(tp, 0);
    bool second_falling = false;
    for (long t = 1; t <= 300; ++t) {
      const auto terms = bound_terms(tp, t);
      for (double term : terms) EXPECT_GE(term, 0.0);
      EXPECT_LE(terms[0], prev[0]);
      if (terms[1] < prev[1]) second_falling = true;
      if (second_falling) EXPECT_LE(terms[1], prev[1] * (1.0 + 1e-12)) << t;
      prev = terms;
    }
  }
}

// The second summand starts at zero, so it cannot be non-increasing from t = 0.
TEST(BoundProperty, SecondTermRisesBeforeItDecays) {
  const TheoryParams tp = reference_params(0.0);
  EXPECT_EQ(bound_terms(tp, 0)[1], 0.0);
  EXPECT_GT(bound_terms(tp, 1)[1], 0.0);
  EXPECT_GT(bound_terms(tp, 2)[1], bound_terms(tp, 1)[1]);
}

// --- d_t ---------------------------------------------------------------------

TEST(DistanceSeries, SubsystemGapExamples) {
  const std::vector<Vector> pair = {Eigen::Vector2d{1.0, 0.0}, Eigen::Vector2d{0.0, 1.0}};
  EXPECT_DOUBLE_EQ(subsystem_gap(pair, Vector::Zero(2)), 1.0);
  const std::vector<Vector> home(3, Vector::Ones(2));
  EXPECT_EQ(subsystem_gap(home, Vector::Ones(2)), 0.0);
}

TEST(DistanceSeries, SingleWorkerContractsByTheSquaredFactor) {
  RunSetup s;
  s.problem = make_quadratic(Matrix::Identity(1, 1), Vector::Zero(1));
  s.shards = {exact_quadratic_shard(s.problem)};
  s.hp.eta = 0.1;
  s.hp.iterations = 60;
  s.batch_size = 0;
  const RunTrace tr = run_local(s, 4);
  const DistanceSeries ds = measure_dt(std::span<const RunTrace>(&tr, 1));
  ASSERT_EQ(ds.d.size(), 61u);
  EXPECT_GT(ds.d[0], 0.0);
  for (std::size_t t = 0; t < ds.d.size(); ++t)
    EXPECT_NEAR(ds.d[t], std::pow(0.81, static_cast<double>(t)) * ds.d[0],
                1e-13 * ds.d[0]);
}

TEST(DistanceSeries, AveragesSeedsWithStandardError) {
  RunTrace a, b;
  a.initial_d = 1.0;
  b.initial_d = 3.0;
  a.rows = {TraceRow{.t = 1, .d_t = 0.5}};
  b.rows = {TraceRow{.t = 1, .d_t = 1.5}};
  const std::vector<RunTrace> both = {a, b};
  const DistanceSeries ds = measure_dt(both);
  EXPECT_EQ(ds.seeds_averaged, 2);
  EXPECT_DOUBLE_EQ(ds.d[0], 2.0);
  EXPECT_DOUBLE_EQ(ds.d[1], 1.0);
  EXPECT_DOUBLE_EQ(ds.stderr_[0], std::sqrt(2.0) / std::sqrt(2.0));
  RunTrace unknown;
  unknown.rows = {TraceRow{.t = 1}};
  EXPECT_THROW(measure_dt(std::vector<RunTrace>{unknown}), ValidationError);
  EXPECT_THROW(measure_dt(std::vector<RunTrace>{}), ValidationError);
}

// --- dominance -------------------------------------------------------------

TEST(Dominance, ImpossibleSlackFails) {
  const TheoryParams tp = reference_params(0.0);
  DistanceSeries ds;
  for (long t = 0; t <= 20; ++t) ds.d.push_back(distance_bound(tp, t));
  EXPECT_TRUE(check_bound_dominance(ds, tp, 0.0).pass);
  const BoundReport r = check_bound_dominance(ds, tp, -0.5);
  EXPECT_FALSE(r.pass);
  ASSERT_TRUE(r.first_violation_t);
  EXPECT_EQ(*r.first_violation_t, 0);
}

nlohmann::json small_theory_config(bool with_privacy) {
  nlohmann::json j = {
      {"algorithm", "leasgd_sync"}, {"mode", "theory"}, {"workers", 5}, {"followers", 1},
      {"batch_size", 0}, {"num_seeds", 100}, {"master_seed", 2026}, {"sigma1_trials", 30},
      {"hyper", {{"eta", 0.1}, {"rho", 0.5}, {"iterations", 200}}},
      {"problem", {{"kind", "quadratic"}, {"seed", 7}, {"dimension", 10}, {"mu", 1.0},
                   {"lipschitz", 3.0}, {"noise_scale", 0.0}, {"offset_scale", 0.0}}}};
  if (with_privacy) {
    j["batch_size"] = 1;
    j["problem"]["dimension"] = 1;
    j["problem"]["lipschitz"] = 1.0;
    j["problem"]["noise_scale"] = 1.0;
    j["privacy"] = {{"clip", 1.0}, {"sigma2", 4.0}, {"delta", 1e-5}};
  }
  return j;
}

TEST(Dominance, FullBatchQuadraticStaysUnderTheBound) {
  const PreparedExperiment prep = prepare_experiment(parse_config(small_theory_config(false)));
  const Experiment e = run_experiment(prep);
  ASSERT_TRUE(prep.theory);
  const DistanceSeries ds = measure_dt(e.traces);
  EXPECT_EQ(ds.seeds_averaged, 100);
  const BoundReport r = check_bound_dominance(ds, *prep.theory, 0.05);
  EXPECT_TRUE(r.pass) << "first violation at t = " << r.first_violation_t.value_or(-1);
}

TEST(Dominance, PrivateScalarQuadraticStaysUnderTheNoisyBound) {
  const PreparedExperiment prep = prepare_experiment(parse_config(small_theory_config(true)));
  const Experiment e = run_experiment(prep);
  ASSERT_TRUE(prep.theory_private);
  const BoundReport r =
      check_bound_dominance(measure_dt(e.traces), *prep.theory_private, 0.10);
  EXPECT_TRUE(r.pass) << "first violation at t = " << r.first_violation_t.value_or(-1);
}

// --- privacy trade-off ---------------------------------------------------------

TEST(PrivacyFloor, Examples) {
  const TheoryParams tp = reference_params();
  EXPECT_EQ(privacy_tradeoff_floor(tp, 1.0, 0.0), 0.0);
  EXPECT_NEAR(privacy_tradeoff_floor(tp, 1.0, 4.0), 0.16 / 0.15, 1e-14);
  EXPECT_NEAR(privacy_tradeoff_floor(tp, 2.0, 2.0), privacy_tradeoff_floor(tp, 1.0, 4.0),
              1e-14);
  TheoryParams more = tp;
  more.p = 9;
  EXPECT_EQ(privacy_tradeoff_floor(more, 1.0, 4.0), privacy_tradeoff_floor(tp, 1.0, 4.0));
  const TheoryParams priv = with_privacy_noise(reference_params(2.0), 1.0, 4.0);
  EXPECT_DOUBLE_EQ(priv.sigma1_sq, 18.0);
  EXPECT_NEAR(priv.noise_floor() - reference_params(2.0).noise_floor(),
              privacy_tradeoff_floor(tp, 1.0, 4.0), 1e-14);
}

// --- rate comparison ----------------------------------------------------------

std::vector<long> grid_to(long last) {
  std::vector<long> g;
  for (long t = 1; t <= last; ++t) g.push_back(t);
  return g;
}

TEST(RateComparison, ReferenceCrossoverIsFinite) {
  const std::vector<long> grid = grid_to(1000);
  const RateReport r = rate_comparison(0.68, 4, grid);
  ASSERT_TRUE(r.crossover_t);
  // Oracle: last grid t where h^t (p+1) t >= 1, plus one.
  long last_above = 0;
  for (long t : grid)
    if (std::pow(0.68, t) * 5.0 * t >= 1.0) last_above = t;
  EXPECT_EQ(*r.crossover_t, last_above + 1);
  EXPECT_LT(r.rows.back().product, 1e-150);
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    EXPECT_NEAR(r.rows[i].product, r.rows[i].leasgd / r.rows[i].dpsgd,
                1e-12 * r.rows[i].product + 1e-300);
  }
}

TEST(RateComparison, CrossoverGrowsAsHApproachesOne) {
  const std::vector<long> grid = grid_to(100000);
  long previous = 0;
  for (double h : {0.9, 0.99, 0.999}) {
    const RateReport r = rate_comparison(h, 4, grid);
    ASSERT_TRUE(r.crossover_t) << h;
    EXPECT_GT(*r.crossover_t, previous);
    previous = *r.crossover_t;
  }
}

TEST(RateComparison, DomainChecks) {
  const std::vector<long> with_zero = {0, 1, 2};
  EXPECT_THROW(rate_comparison(0.68, 4, with_zero), ValidationError);
  const std::vector<long> grid = {1, 2, 3};
  EXPECT_THROW(rate_comparison(1.0, 4, grid), ValidationError);
  EXPECT_THROW(rate_comparison(0.5, 0, grid), ValidationError);
  EXPECT_THROW(rate_comparison(0.5, 4, std::vector<long>{}), ValidationError);
  EXPECT_THROW(rate_comparison(0.5, 4, std::vector<long>{3, 2}), ValidationError);
}

TEST(TheoryJson, CarriesConstantsAndVerdict) {
  const TheoryParams tp = reference_params(1.0);
  const nlohmann::json j = to_json(tp);
  EXPECT_DOUBLE_EQ(j["h"].get<double>(), tp.h);
  EXPECT_DOUBLE_EQ(j["gamma"].get<double>(), tp.gamma);
  DistanceSeries ds;
  ds.d = {tp.d0};
  const nlohmann::json r = to_json(check_bound_dominance(ds, tp, 0.05));
  EXPECT_TRUE(r["pass"].get<bool>());
  EXPECT_TRUE(r["first_violation_t"].is_null());
}

}  // namespace
}  // namespace leasgd
