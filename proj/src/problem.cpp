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

#include "leasgd/problem.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

namespace leasgd {
namespace {

double softplus(double u) {
  return std::max(u, 0.0) + std::log1p(std::exp(-std::abs(u)));
}

double sigmoid(double u) {
  if (u >= 0) return 1.0 / (1.0 + std::exp(-u));
  const double e = std::exp(u);
  return e / (1.0 + e);
}

Vector gaussian_vector(Eigen::Index n, RngStream& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = normal(rng);
  return v;
}

void check_batch(const DataShard& shard, const IndexList& batch) {
  require(!batch.empty(), "loss: empty batch");
  for (Eigen::Index j : batch) {
    require(j >= 0 && j < shard.sample_count(),
            "loss: batch index " + std::to_string(j) + " outside shard of " +
                std::to_string(shard.sample_count()) + " samples");
  }
}

void check_dimension(const Problem& problem, const Vector& w) {
  require(w.size() == problem.dimension,
          "parameter vector has dimension " + std::to_string(w.size()) +
              ", problem expects " + std::to_string(problem.dimension));
}

Vector batch_offset_mean(const DataShard& shard, const IndexList& batch) {
  Vector mean = Vector::Zero(shard.inputs.cols());
  for (Eigen::Index j : batch) mean += shard.inputs.row(j).transpose();
  return mean / static_cast<double>(batch.size());
}

// Logits (rows = batch samples) plus the hidden activations needed by
// backprop.
struct MlpForward {
  Matrix hidden;  // B x H, tanh activations
  Matrix logits;  // B x K
};

struct MlpViews {
  Eigen::Map<const Matrix> w1;
  Eigen::Map<const Vector> b1;
  Eigen::Map<const Matrix> w2;
  Eigen::Map<const Vector> b2;
};

MlpViews mlp_views(const MlpShape& shape, const Vector& w) {
  const Eigen::Index h = MlpShape::kHidden;
  const double* p = w.data();
  const Eigen::Index n1 = h * shape.inputs;
  const Eigen::Index n2 = shape.classes * h;
  return MlpViews{Eigen::Map<const Matrix>(p, h, shape.inputs),
                  Eigen::Map<const Vector>(p + n1, h),
                  Eigen::Map<const Matrix>(p + n1 + h, shape.classes, h),
                  Eigen::Map<const Vector>(p + n1 + h + n2, shape.classes)};
}

MlpForward mlp_forward(const MlpShape& shape, const Vector& w,
                       const Matrix& x) {
  const MlpViews v = mlp_views(shape, w);
  MlpForward out;
  out.hidden = ((x * v.w1.transpose()).rowwise() + v.b1.transpose())
                   .array()
                   .tanh()
                   .matrix();
  out.logits = (out.hidden * v.w2.transpose()).rowwise() + v.b2.transpose();
  return out;
}

Matrix gather_rows(const Matrix& m, const IndexList& rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t r = 0; r < rows.size(); ++r)
    out.row(static_cast<Eigen::Index>(r)) = m.row(rows[r]);
  return out;
}

IndexList all_indices(const DataShard& shard) {
  IndexList idx(static_cast<std::size_t>(shard.sample_count()));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  return idx;
}

}  // namespace

std::string to_string(ProblemKind kind) {
  switch (kind) {
    case ProblemKind::kQuadratic:
      return "quadratic";
    case ProblemKind::kLogistic:
      return "logistic";
    case ProblemKind::kMlp:
      return "mlp";
  }
  return "unknown";
}

ProblemKind parse_problem_kind(const std::string& name) {
  if (name == "quadratic") return ProblemKind::kQuadratic;
  if (name == "logistic") return ProblemKind::kLogistic;
  if (name == "mlp") return ProblemKind::kMlp;
  throw ValidationError("unknown problem kind '" + name + "'");
}

Problem make_quadratic(Eigen::Index dimension, double mu, double lipschitz,
                       std::uint64_t seed) {
  require(dimension >= 1, "make_quadratic: dimension must be >= 1");
  require(mu > 0.0, "make_quadratic: mu must be > 0");
  require(mu <= lipschitz, "make_quadratic: mu must be <= lipschitz");
  require(dimension > 1 || mu == lipschitz,
          "make_quadratic: a 1-D spectrum cannot span mu < lipschitz");

  RngStream rng(derive_seed(seed, 0x51ad));
  Vector spectrum(dimension);
  if (dimension == 1) {
    spectrum(0) = mu;
  } else {
    spectrum = Vector::LinSpaced(dimension, mu, lipschitz);
  }

  Matrix gaussian(dimension, dimension);
  for (Eigen::Index j = 0; j < dimension; ++j)
    gaussian.col(j) = gaussian_vector(dimension, rng);
  const Matrix rotation = Eigen::HouseholderQR<Matrix>(gaussian).householderQ();

  Matrix a = rotation * spectrum.asDiagonal() * rotation.transpose();
  a = 0.5 * (a + a.transpose()).eval();

  Problem p;
  p.kind = ProblemKind::kQuadratic;
  p.dimension = dimension;
  p.mu = mu;
  p.lipschitz = lipschitz;
  p.quad_matrix = std::move(a);
  p.offset = gaussian_vector(dimension, rng);
  p.optimum = p.quad_matrix.ldlt().solve(p.offset);
  return p;
}

Problem make_quadratic(const Matrix& a, const Vector& b) {
  require(a.rows() == a.cols() && a.rows() == b.size(),
          "make_quadratic: A must be square and match b");
  require((a - a.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + a.norm()),
          "make_quadratic: A must be symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(a, Eigen::EigenvaluesOnly);
  const double mu = eig.eigenvalues().minCoeff();
  require(mu > 0.0, "make_quadratic: A must be positive definite");

  Problem p;
  p.kind = ProblemKind::kQuadratic;
  p.dimension = a.rows();
  p.mu = mu;
  p.lipschitz = eig.eigenvalues().maxCoeff();
  p.quad_matrix = a;
  p.offset = b;
  p.optimum = a.ldlt().solve(b);
  return p;
}

std::vector<DataShard> make_quadratic_shards(const Problem& problem,
                                             int workers,
                                             Eigen::Index samples_per_worker,
                                             double noise_scale,
                                             std::uint64_t seed) {
  require(problem.kind == ProblemKind::kQuadratic,
          "make_quadratic_shards: problem is not quadratic");
  require(workers >= 1, "make_quadratic_shards: workers must be >= 1");
  require(samples_per_worker >= 1,
          "make_quadratic_shards: samples_per_worker must be >= 1");
  require(noise_scale >= 0.0, "make_quadratic_shards: noise_scale < 0");

  const Eigen::Index n = problem.dimension;
  std::vector<DataShard> shards;
  shards.reserve(static_cast<std::size_t>(workers));
  for (int i = 0; i < workers; ++i) {
    RngStream rng(derive_seed(seed, 0x5a4d, static_cast<std::uint64_t>(i)));
    Matrix noise(samples_per_worker, n);
    for (Eigen::Index j = 0; j < samples_per_worker; ++j)
      noise.row(j) = gaussian_vector(n, rng).transpose();
    noise.rowwise() -= noise.colwise().mean();

    DataShard shard;
    shard.worker_id = i;
    shard.first_index = i * samples_per_worker;
    shard.inputs = (noise_scale * noise).rowwise() + problem.offset.transpose();
    shard.labels = Eigen::VectorXi::Zero(samples_per_worker);
    shards.push_back(std::move(shard));
  }
  return shards;
}

Problem make_logistic(const Dataset& train, double reg_lambda) {
  require(train.size() >= 1, "make_logistic: empty dataset");
  require(reg_lambda >= 0.0, "make_logistic: reg_lambda must be >= 0");
  require((train.labels.array() == 0 || train.labels.array() == 1).all(),
          "make_logistic: labels must be 0 or 1");

  Problem p;
  p.kind = ProblemKind::kLogistic;
  p.dimension = train.features.cols();
  p.reg_lambda = reg_lambda;
  p.mu = reg_lambda;
  p.lipschitz =
      reg_lambda + 0.25 * train.features.rowwise().squaredNorm().maxCoeff();

  if (reg_lambda > 0.0) {
    const Matrix& x = train.features;
    const double count = static_cast<double>(train.size());
    const Vector y = train.labels.cast<double>();
    Vector w = Vector::Zero(p.dimension);
    for (int iter = 0; iter < 100; ++iter) {
      const Vector z = x * w;
      Vector s(z.size());
      Vector curvature(z.size());
      for (Eigen::Index j = 0; j < z.size(); ++j) {
        s(j) = sigmoid(z(j));
        curvature(j) = s(j) * (1.0 - s(j));
      }
      const Vector grad = x.transpose() * (s - y) / count + reg_lambda * w;
      if (grad.norm() < 1e-14) break;
      Matrix hess = x.transpose() * curvature.asDiagonal() * x / count;
      hess.diagonal().array() += reg_lambda;
      w -= hess.ldlt().solve(grad);
    }
    p.optimum = std::move(w);
  }
  return p;
}

Problem make_mlp(Eigen::Index inputs, Eigen::Index classes,
                 double reg_lambda) {
  require(inputs >= 1, "make_mlp: inputs must be >= 1");
  require(classes >= 2, "make_mlp: classes must be >= 2");
  require(reg_lambda >= 0.0, "make_mlp: reg_lambda must be >= 0");
  Problem p;
  p.kind = ProblemKind::kMlp;
  p.mlp = MlpShape{.inputs = inputs, .classes = classes};
  p.dimension = p.mlp.parameter_count();
  p.reg_lambda = reg_lambda;
  return p;
}

Dataset make_blobs(Eigen::Index samples, Eigen::Index dimension,
                   double separation, std::uint64_t seed) {
  require(samples >= 2, "make_blobs: need at least 2 samples");
  require(dimension >= 1, "make_blobs: dimension must be >= 1");
  RngStream rng(derive_seed(seed, 0xb10b));
  Vector direction = gaussian_vector(dimension, rng);
  direction.normalize();

  Dataset data;
  data.features.resize(samples, dimension);
  data.labels.resize(samples);
  for (Eigen::Index j = 0; j < samples; ++j) {
    const int label = static_cast<int>(j % 2);
    const double sign = label == 1 ? 0.5 : -0.5;
    data.features.row(j) =
        (sign * separation * direction + gaussian_vector(dimension, rng))
            .transpose();
    data.labels(j) = label;
  }
  return data;
}

Dataset load_csv_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw RuntimeAbort("cannot open dataset '" + path + "'");

  std::string line;
  if (!std::getline(in, line))
    throw ValidationError("dataset '" + path + "' has no header row");

  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  std::size_t width = 0;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    std::vector<double> values;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        values.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw ValidationError(path + ":" + std::to_string(line_no) +
                              ": non-numeric cell '" + cell + "'");
      }
    }
    require(values.size() >= 2, path + ":" + std::to_string(line_no) +
                                    ": need at least one feature and a label");
    if (width == 0) width = values.size();
    require(values.size() == width,
            path + ":" + std::to_string(line_no) + ": ragged row");
    const double label = values.back();
    require(label == std::floor(label) && label >= 0,
            path + ":" + std::to_string(line_no) +
                ": label must be a non-negative integer");
    labels.push_back(static_cast<int>(label));
    values.pop_back();
    rows.push_back(std::move(values));
  }
  require(!rows.empty(), "dataset '" + path + "' has no samples");

  Dataset data;
  data.features.resize(static_cast<Eigen::Index>(rows.size()),
                       static_cast<Eigen::Index>(width - 1));
  data.labels.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c + 1 < width; ++c)
      data.features(static_cast<Eigen::Index>(r),
                    static_cast<Eigen::Index>(c)) = rows[r][c];
    data.labels(static_cast<Eigen::Index>(r)) = labels[r];
  }
  return data;
}

std::pair<Dataset, Dataset> split_heldout(const Dataset& data,
                                          double heldout_fraction) {
  require(heldout_fraction >= 0.0 && heldout_fraction < 1.0,
          "heldout_fraction must be in [0, 1)");
  const auto held = static_cast<Eigen::Index>(
      std::llround(heldout_fraction * static_cast<double>(data.size())));
  const Eigen::Index train = data.size() - held;
  require(train >= 1, "split_heldout: no training samples left");
  Dataset a{data.features.topRows(train), data.labels.head(train)};
  Dataset b{data.features.bottomRows(held), data.labels.tail(held)};
  return {std::move(a), std::move(b)};
}

std::vector<DataShard> shard_dataset(const Dataset& data, int workers) {
  require(workers >= 1, "shard_dataset: workers must be >= 1");
  require(data.size() >= workers,
          "shard_dataset: fewer samples than workers (every shard must be "
          "non-empty)");
  const Eigen::Index base = data.size() / workers;
  const Eigen::Index extra = data.size() % workers;
  std::vector<DataShard> shards;
  Eigen::Index start = 0;
  for (int i = 0; i < workers; ++i) {
    const Eigen::Index count = base + (i < extra ? 1 : 0);
    DataShard s;
    s.worker_id = i;
    s.first_index = start;
    s.inputs = data.features.middleRows(start, count);
    s.labels = data.labels.segment(start, count);
    shards.push_back(std::move(s));
    start += count;
  }
  return shards;
}

Vector initial_parameters(const Problem& problem, double scale,
                          RngStream& rng) {
  require(scale >= 0.0, "initial_parameters: scale must be >= 0");
  Vector w = scale * gaussian_vector(problem.dimension, rng);
  if (problem.kind == ProblemKind::kMlp) {
    const MlpShape& s = problem.mlp;
    const Eigen::Index h = MlpShape::kHidden;
    const Eigen::Index n1 = h * s.inputs;
    const Eigen::Index n2 = s.classes * h;
    w.head(n1) /= std::sqrt(static_cast<double>(s.inputs));
    w.segment(n1, h).setZero();
    w.segment(n1 + h, n2) /= std::sqrt(static_cast<double>(h));
    w.tail(s.classes).setZero();
  }
  return w;
}

double loss(const Problem& problem, const Vector& w, const DataShard& shard,
            const IndexList& batch) {
  check_dimension(problem, w);
  check_batch(shard, batch);
  const double reg = 0.5 * problem.reg_lambda * w.squaredNorm();
  switch (problem.kind) {
    case ProblemKind::kQuadratic: {
      const Vector b = batch_offset_mean(shard, batch);
      return 0.5 * w.dot(problem.quad_matrix * w) - b.dot(w) + reg;
    }
    case ProblemKind::kLogistic: {
      double total = 0.0;
      for (Eigen::Index j : batch) {
        const double sign = shard.labels(j) == 1 ? 1.0 : -1.0;
        total += softplus(-sign * shard.inputs.row(j).dot(w));
      }
      return total / static_cast<double>(batch.size()) + reg;
    }
    case ProblemKind::kMlp:
      return mlp_forward_backward(problem, w, shard, batch).loss;
  }
  return 0.0;
}

double full_loss(const Problem& problem, const Vector& w,
                 const DataShard& shard) {
  return loss(problem, w, shard, all_indices(shard));
}

Vector batch_gradient(const Problem& problem, const Vector& w,
                      const DataShard& shard, const IndexList& batch) {
  check_dimension(problem, w);
  check_batch(shard, batch);
  switch (problem.kind) {
    case ProblemKind::kQuadratic:
      return problem.quad_matrix * w - batch_offset_mean(shard, batch) +
             problem.reg_lambda * w;
    case ProblemKind::kLogistic: {
      Vector g = Vector::Zero(problem.dimension);
      for (Eigen::Index j : batch) {
        const double sign = shard.labels(j) == 1 ? 1.0 : -1.0;
        const double z = shard.inputs.row(j).dot(w);
        g -= sign * sigmoid(-sign * z) * shard.inputs.row(j).transpose();
      }
      return g / static_cast<double>(batch.size()) + problem.reg_lambda * w;
    }
    case ProblemKind::kMlp:
      return mlp_forward_backward(problem, w, shard, batch).sample.gradient;
  }
  return {};
}

Vector full_gradient(const Problem& problem, const Vector& w,
                     const DataShard& shard) {
  return batch_gradient(problem, w, shard, all_indices(shard));
}

IndexList sample_batch(const DataShard& shard, Eigen::Index batch_size,
                       RngStream& rng) {
  const Eigen::Index n = shard.sample_count();
  require(batch_size >= 0, "batch_size must be >= 0");
  require(batch_size <= n, "batch_size " + std::to_string(batch_size) +
                               " exceeds shard size " + std::to_string(n));
  IndexList idx = all_indices(shard);
  if (batch_size == 0 || batch_size == n) return idx;
  // Partial Fisher-Yates: the first batch_size slots end up a uniform
  // sample without replacement.
  for (Eigen::Index k = 0; k < batch_size; ++k) {
    std::uniform_int_distribution<Eigen::Index> pick(k, n - 1);
    std::swap(idx[static_cast<std::size_t>(k)],
              idx[static_cast<std::size_t>(pick(rng))]);
  }
  idx.resize(static_cast<std::size_t>(batch_size));
  return idx;
}

GradientSample stochastic_gradient(const Problem& problem, const Vector& w,
                                   const DataShard& shard,
                                   Eigen::Index batch_size, RngStream& rng) {
  require(batch_size >= 1, "stochastic_gradient: batch_size must be >= 1");
  GradientSample out;
  out.minibatch_indices = sample_batch(shard, batch_size, rng);
  out.gradient = batch_gradient(problem, w, shard, out.minibatch_indices);
  if (!out.gradient.allFinite())
    throw RuntimeAbort("non-finite gradient on worker " +
                       std::to_string(shard.worker_id));
  return out;
}

MlpEvaluation mlp_forward_backward(const Problem& problem, const Vector& w,
                                   const DataShard& shard,
                                   const IndexList& batch) {
  require(problem.kind == ProblemKind::kMlp,
          "mlp_forward_backward: problem is not an MLP");
  require(w.size() == problem.mlp.parameter_count(),
          "mlp_forward_backward: parameter vector has " +
              std::to_string(w.size()) + " entries, architecture needs " +
              std::to_string(problem.mlp.parameter_count()));
  require(shard.inputs.cols() == problem.mlp.inputs,
          "mlp_forward_backward: shard feature width does not match network");
  check_batch(shard, batch);

  const MlpShape& shape = problem.mlp;
  const Eigen::Index h = MlpShape::kHidden;
  const auto count = static_cast<double>(batch.size());
  const Matrix x = gather_rows(shard.inputs, batch);
  const MlpForward fwd = mlp_forward(shape, w, x);

  // Row-wise softmax with max-shift.
  Matrix probs = fwd.logits;
  double nll = 0.0;
  for (Eigen::Index r = 0; r < probs.rows(); ++r) {
    const double shift = probs.row(r).maxCoeff();
    probs.row(r) = (probs.row(r).array() - shift).exp().matrix();
    const double z = probs.row(r).sum();
    probs.row(r) /= z;
    const int y = shard.labels(batch[static_cast<std::size_t>(r)]);
    require(y >= 0 && y < shape.classes, "mlp: label out of range");
    nll += -(fwd.logits(r, y) - shift - std::log(z));
  }

  Matrix d_logits = probs;
  for (Eigen::Index r = 0; r < d_logits.rows(); ++r)
    d_logits(r, shard.labels(batch[static_cast<std::size_t>(r)])) -= 1.0;
  d_logits /= count;

  const MlpViews v = mlp_views(shape, w);
  const Matrix d_hidden =
      ((d_logits * v.w2).array() * (1.0 - fwd.hidden.array().square()))
          .matrix();

  Vector grad(w.size());
  const Eigen::Index n1 = h * shape.inputs;
  Eigen::Map<Matrix>(grad.data(), h, shape.inputs) = d_hidden.transpose() * x;
  grad.segment(n1, h) = d_hidden.colwise().sum().transpose();
  Eigen::Map<Matrix>(grad.data() + n1 + h, shape.classes, h) =
      d_logits.transpose() * fwd.hidden;
  grad.tail(shape.classes) = d_logits.colwise().sum().transpose();
  grad += problem.reg_lambda * w;

  MlpEvaluation out;
  out.loss = nll / count + 0.5 * problem.reg_lambda * w.squaredNorm();
  out.sample.gradient = std::move(grad);
  out.sample.minibatch_indices = batch;
  return out;
}

MlpEvaluation mlp_forward_backward(const Problem& problem, const Vector& w,
                                   const DataShard& shard,
                                   Eigen::Index batch_size, RngStream& rng) {
  return mlp_forward_backward(problem, w, shard,
                              sample_batch(shard, batch_size, rng));
}

Matrix predict_scores(const Problem& problem, const Vector& w,
                      const Matrix& inputs) {
  check_dimension(problem, w);
  switch (problem.kind) {
    case ProblemKind::kLogistic:
      return inputs * w;
    case ProblemKind::kMlp:
      return mlp_forward(problem.mlp, w, inputs).logits;
    case ProblemKind::kQuadratic:
      break;
  }
  throw ValidationError("predict_scores: quadratic problems do not classify");
}

double accuracy(const Problem& problem, const Vector& w, const Dataset& data) {
  require(data.size() >= 1, "accuracy: empty dataset");
  const Matrix scores = predict_scores(problem, w, data.features);
  Eigen::Index correct = 0;
  for (Eigen::Index r = 0; r < scores.rows(); ++r) {
    int predicted = 0;
    if (problem.kind == ProblemKind::kLogistic) {
      predicted = scores(r, 0) > 0.0 ? 1 : 0;
    } else {
      Eigen::Index arg = 0;
      scores.row(r).maxCoeff(&arg);
      predicted = static_cast<int>(arg);
    }
    if (predicted == data.labels(r)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

Sigma1Estimate estimate_sigma1(const Problem& problem,
                               const std::vector<Vector>& points,
                               const DataShard& shard,
                               Eigen::Index batch_size, int trials,
                               RngStream& rng) {
  require(trials >= 30, "estimate_sigma1: trials must be >= 30");
  require(!points.empty(), "estimate_sigma1: no evaluation points");
  double worst = 0.0;
  for (const Vector& w : points) {
    const Vector exact = full_gradient(problem, w, shard);
    double total = 0.0;
    for (int k = 0; k < trials; ++k) {
      const GradientSample g =
          stochastic_gradient(problem, w, shard, batch_size, rng);
      total += (g.gradient - exact).squaredNorm();
    }
    worst = std::max(worst, total / trials);
  }
  return Sigma1Estimate{.empirical = worst,
                        .bound = kSigma1SafetyFactor * worst};
}

ConvexityWitness check_strong_convexity(const Problem& problem,
                                        const DataShard& shard, int pairs,
                                        double scale, RngStream& rng) {
  require(problem.is_convex(),
          "check_strong_convexity: MLP problems carry no (mu, L)");
  ConvexityWitness out;
  out.min_ratio = std::numeric_limits<double>::infinity();
  out.max_ratio = -std::numeric_limits<double>::infinity();
  const double tol = 1e-9;
  for (int k = 0; k < pairs; ++k) {
    const Vector a = scale * gaussian_vector(problem.dimension, rng);
    const Vector b = scale * gaussian_vector(problem.dimension, rng);
    const Vector dw = a - b;
    const double dist = dw.squaredNorm();
    if (dist == 0.0) continue;
    const Vector dg =
        full_gradient(problem, a, shard) - full_gradient(problem, b, shard);
    const double ratio = dg.dot(dw) / dist;
    out.min_ratio = std::min(out.min_ratio, ratio);
    out.max_ratio = std::max(out.max_ratio, ratio);
    if (ratio < problem.mu * (1.0 - tol) ||
        ratio > problem.lipschitz * (1.0 + tol))
      ++out.violations;
    ++out.pairs;
  }
  return out;
}

}  // namespace leasgd
