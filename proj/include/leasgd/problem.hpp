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

#ifndef LEASGD_PROBLEM_HPP_
#define LEASGD_PROBLEM_HPP_

#include <optional>
#include <string>
#include <vector>

#include "leasgd/rng.hpp"
#include "leasgd/types.hpp"

namespace leasgd {

enum class ProblemKind { kQuadratic, kLogistic, kMlp };

std::string to_string(ProblemKind kind);
ProblemKind parse_problem_kind(const std::string& name);

// Fixed one-hidden-layer network: input -> 16 tanh units -> softmax.
// Flat parameter layout: W1 (hidden x input, column-major), b1, W2
// (classes x hidden, column-major), b2.
struct MlpShape {
  static constexpr Eigen::Index kHidden = 16;
  Eigen::Index inputs = 0;
  Eigen::Index classes = 2;

  Eigen::Index parameter_count() const {
    return kHidden * inputs + kHidden + classes * kHidden + classes;
  }
};

struct Problem {
  ProblemKind kind = ProblemKind::kQuadratic;
  Eigen::Index dimension = 0;
  double mu = 0.0;
  double lipschitz = 0.0;
  double reg_lambda = 0.0;
  std::optional<Vector> optimum;

  // Quadratic: f(w) = 1/2 w'Aw - b'w. Per-sample offsets live in the
  // shard features; their mean over every shard equals `offset`.
  Matrix quad_matrix;
  Vector offset;

  MlpShape mlp;

  bool is_convex() const { return kind != ProblemKind::kMlp; }
};

// Samples are rows of `features`. Labels are class indices; the quadratic
// kind ignores them.
struct Dataset {
  Matrix features;
  Eigen::VectorXi labels;

  Eigen::Index size() const { return features.rows(); }
};

struct DataShard {
  int worker_id = 0;
  Eigen::Index first_index = 0;  // position of row 0 in the parent dataset
  Matrix inputs;
  Eigen::VectorXi labels;

  Eigen::Index sample_count() const { return inputs.rows(); }
};

struct GradientSample {
  Vector gradient;
  IndexList minibatch_indices;
  double sigma1_estimate = 0.0;
};

// --- construction --------------------------------------------------------

// Randomly rotated diagonal quadratic whose spectrum spans exactly
// [mu, lipschitz]; b ~ N(0, I).
Problem make_quadratic(Eigen::Index dimension, double mu, double lipschitz,
                       std::uint64_t seed);

// Quadratic from an explicit symmetric positive-definite A and offset b.
Problem make_quadratic(const Matrix& a, const Vector& b);

// Per-worker quadratic shards. Each shard holds `samples_per_worker` offset
// vectors b + noise_scale * z, centred so every shard mean is exactly b.
std::vector<DataShard> make_quadratic_shards(const Problem& problem,
                                             int workers,
                                             Eigen::Index samples_per_worker,
                                             double noise_scale,
                                             std::uint64_t seed);

// L2-regularised logistic regression over labels {0, 1}. mu = reg_lambda,
// L = reg_lambda + max_j |x_j|^2 / 4. The optimum is solved by Newton's
// method when reg_lambda > 0.
Problem make_logistic(const Dataset& train, double reg_lambda);

Problem make_mlp(Eigen::Index inputs, Eigen::Index classes,
                 double reg_lambda);

// Two Gaussian classes, centres at +/- separation/2 along a random unit
// direction, unit covariance. Labels alternate so any contiguous block is
// roughly balanced.
Dataset make_blobs(Eigen::Index samples, Eigen::Index dimension,
                   double separation, std::uint64_t seed);

// CSV with a header row, last column an integer label.
Dataset load_csv_dataset(const std::string& path);

// Splits off the last `heldout_fraction` of rows.
std::pair<Dataset, Dataset> split_heldout(const Dataset& data,
                                          double heldout_fraction);

// Contiguous blocks by worker id; the first (size % workers) shards get one
// extra sample.
std::vector<DataShard> shard_dataset(const Dataset& data, int workers);

Vector initial_parameters(const Problem& problem, double scale,
                          RngStream& rng);

// --- evaluation ----------------------------------------------------------

double loss(const Problem& problem, const Vector& w, const DataShard& shard,
            const IndexList& batch);
double full_loss(const Problem& problem, const Vector& w,
                 const DataShard& shard);

// Exact gradient of `loss` on the given batch.
Vector batch_gradient(const Problem& problem, const Vector& w,
                      const DataShard& shard, const IndexList& batch);
Vector full_gradient(const Problem& problem, const Vector& w,
                     const DataShard& shard);

// Draws batch_size distinct indices uniformly (without replacement).
// batch_size == 0 or == sample_count means full batch and draws nothing
// from the stream.
IndexList sample_batch(const DataShard& shard, Eigen::Index batch_size,
                       RngStream& rng);

GradientSample stochastic_gradient(const Problem& problem, const Vector& w,
                                   const DataShard& shard,
                                   Eigen::Index batch_size, RngStream& rng);

struct MlpEvaluation {
  double loss = 0.0;
  GradientSample sample;
};

MlpEvaluation mlp_forward_backward(const Problem& problem, const Vector& w,
                                   const DataShard& shard,
                                   const IndexList& batch);
MlpEvaluation mlp_forward_backward(const Problem& problem, const Vector& w,
                                   const DataShard& shard,
                                   Eigen::Index batch_size, RngStream& rng);

// Class scores for each row of `inputs` (logistic: one column, the logit).
Matrix predict_scores(const Problem& problem, const Vector& w,
                      const Matrix& inputs);
double accuracy(const Problem& problem, const Vector& w, const Dataset& data);

// --- gradient-noise estimation --------------------------------------------

struct Sigma1Estimate {
  double empirical = 0.0;  // max over points of mean |g - grad f|^2
  double bound = 0.0;      // empirical * safety factor
};

inline constexpr double kSigma1SafetyFactor = 1.2;

Sigma1Estimate estimate_sigma1(const Problem& problem,
                               const std::vector<Vector>& points,
                               const DataShard& shard,
                               Eigen::Index batch_size, int trials,
                               RngStream& rng);

// --- assumption checks ------------------------------------------------------

struct ConvexityWitness {
  int pairs = 0;
  int violations = 0;
  double min_ratio = 0.0;  // <g_i - g_j, w_i - w_j> / |w_i - w_j|^2
  double max_ratio = 0.0;
};

// Samples random pairs and checks mu|dw|^2 <= <dg, dw> <= L|dw|^2 on the
// full-shard gradient.
ConvexityWitness check_strong_convexity(const Problem& problem,
                                        const DataShard& shard, int pairs,
                                        double scale, RngStream& rng);

}  // namespace leasgd

#endif  // LEASGD_PROBLEM_HPP_
