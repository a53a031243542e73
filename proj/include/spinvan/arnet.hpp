// Copyright 2026 The spinvan Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SPINVAN_ARNET_HPP
#define SPINVAN_ARNET_HPP

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "spinvan/lattice.hpp"
#include "spinvan/priors.hpp"
#include "spinvan/rng.hpp"

namespace spinvan {

/// Masked two-layer network h = W2 leaky(W1 s + b1) + b2.
///
/// Hidden unit k has degree d(k) in 1..N-1 (cycling). Input j feeds hidden k
/// iff j < d(k) and hidden k feeds output i iff d(k) <= i, so output i only
/// sees inputs j < i. Output 0 reduces to its bias.
struct ModelParameters {
  int inputs = 0;
  int hidden = 0;
  double leaky_slope = 0.01;
  Eigen::MatrixXd w1;  // hidden x inputs
  Eigen::VectorXd b1;
  Eigen::MatrixXd w2;  // inputs x hidden
  Eigen::VectorXd b2;
  Eigen::MatrixXd mask1;
  Eigen::MatrixXd mask2;

  int degree(int k) const { return inputs > 1 ? (k % (inputs - 1)) + 1 : 1; }

  void apply_masks() {
    w1.array() *= mask1.array();
    w2.array() *= mask2.array();
  }

  std::size_t parameter_count() const {
    return static_cast<std::size_t>(w1.size() + b1.size() + w2.size() + b2.size());
  }
};

/// All-zero parameters with masks in place.
inline ModelParameters make_zero_model(int inputs, int hidden, double leaky_slope = 0.01) {
  if (hidden < 1) throw std::invalid_argument("hidden size must be at least 1");
  if (inputs < 2) throw std::invalid_argument("network needs at least 2 inputs");
  ModelParameters p;
  p.inputs = inputs;
  p.hidden = hidden;
  p.leaky_slope = leaky_slope;
  p.w1 = Eigen::MatrixXd::Zero(hidden, inputs);
  p.b1 = Eigen::VectorXd::Zero(hidden);
  p.w2 = Eigen::MatrixXd::Zero(inputs, hidden);
  p.b2 = Eigen::VectorXd::Zero(inputs);
  p.mask1 = Eigen::MatrixXd::Zero(hidden, inputs);
  p.mask2 = Eigen::MatrixXd::Zero(inputs, hidden);
  for (int k = 0; k < hidden; ++k) {
    const int d = p.degree(k);
    for (int j = 0; j < d; ++j) p.mask1(k, j) = 1.0;
    for (int i = d; i < inputs; ++i) p.mask2(i, k) = 1.0;
  }
  return p;
}

/// Unmasked weights uniform in +-1/sqrt(fan_in); biases zero.
inline ModelParameters init_model(const LatticeGeometry& geometry, int hidden, std::uint64_t seed,
                                  double leaky_slope = 0.01) {
  auto p = make_zero_model(geometry.site_count(), hidden, leaky_slope);
  Rng rng(seed);
  const double bound1 = 1.0 / std::sqrt(static_cast<double>(p.inputs));
  const double bound2 = 1.0 / std::sqrt(static_cast<double>(p.hidden));
  // Column-major fill keeps the draw order independent of Eigen internals.
  for (Eigen::Index j = 0; j < p.w1.cols(); ++j)
    for (Eigen::Index k = 0; k < p.w1.rows(); ++k)
      p.w1(k, j) = (2.0 * uniform01(rng) - 1.0) * bound1;
  for (Eigen::Index k = 0; k < p.w2.cols(); ++k)
    for (Eigen::Index i = 0; i < p.w2.rows(); ++i)
      p.w2(i, k) = (2.0 * uniform01(rng) - 1.0) * bound2;
  p.apply_masks();
  return p;
}

inline double leaky_relu(double x, double slope) { return x > 0.0 ? x : slope * x; }

/// log(sigmoid(x)) without overflow for large |x|.
inline double log_sigmoid(double x) {
  return x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double logit(double p) { return std::log(p / (1.0 - p)); }

/// Spins as an N x B matrix of +-1 doubles.
inline Eigen::MatrixXd to_matrix(const SpinBatch& batch) {
  Eigen::MatrixXd s(static_cast<Eigen::Index>(batch.sites()),
                    static_cast<Eigen::Index>(batch.size()));
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const auto row = batch[b];
    for (std::size_t i = 0; i < row.size(); ++i) {
      s(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(b)) = row[i];
    }
  }
  return s;
}

/// Intermediate values of a full forward pass, kept for backpropagation.
struct ForwardPass {
  Eigen::MatrixXd pre;     // H x B
  Eigen::MatrixXd hidden;  // H x B, after activation
  Eigen::MatrixXd out;     // N x B
};

inline ForwardPass forward_pass(const ModelParameters& p, const Eigen::MatrixXd& spins) {
  if (spins.rows() != p.inputs) {
    throw std::invalid_argument("input size does not match the network");
  }
  ForwardPass f;
  f.pre.noalias() = p.w1 * spins;
  f.pre.colwise() += p.b1;
  const double a = p.leaky_slope;
  f.hidden = f.pre.unaryExpr([a](double x) { return leaky_relu(x, a); });
  f.out.noalias() = p.w2 * f.hidden;
  f.out.colwise() += p.b2;
  return f;
}

/// Network outputs h for every configuration, N x B.
inline Eigen::MatrixXd forward(const ModelParameters& p, const SpinBatch& batch) {
  if (batch.sites() != static_cast<std::size_t>(p.inputs)) {
    throw std::invalid_argument("input size does not match the network");
  }
  return forward_pass(p, to_matrix(batch)).out;
}

/// q_i = sigmoid(h_i + prior logit_i), element-wise.
inline Eigen::MatrixXd conditional_probs(const Eigen::MatrixXd& h, const Eigen::MatrixXd& prior) {
  if (h.rows() != prior.rows() || h.cols() != prior.cols()) {
    throw std::invalid_argument("network output and prior logits differ in shape");
  }
  return (h + prior).unaryExpr([](double x) { return sigmoid(x); });
}

/// log q(s) = sum_i log sigmoid(s_i z_i) with z = h + prior logit.
inline std::vector<double> log_prob_from_logits(const Eigen::MatrixXd& z,
                                                const Eigen::MatrixXd& spins) {
  std::vector<double> out(static_cast<std::size_t>(z.cols()));
  for (Eigen::Index b = 0; b < z.cols(); ++b) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < z.rows(); ++i) acc += log_sigmoid(spins(i, b) * z(i, b));
    out[static_cast<std::size_t>(b)] = acc;
  }
  return out;
}

inline std::vector<double> log_prob(const ModelParameters& p, const PriorSpec& spec,
                                    const SpinBatch& batch) {
  const Eigen::MatrixXd s = to_matrix(batch);
  const Eigen::MatrixXd z = forward_pass(p, s).out + prior_logits_batched(spec, batch);
  return log_prob_from_logits(z, s);
}

/// Prior-only model (network output identically zero).
inline std::vector<double> log_prob(const PriorSpec& spec, const SpinBatch& batch) {
  return log_prob_from_logits(prior_logits_batched(spec, batch), to_matrix(batch));
}

}  // namespace spinvan

#endif  // SPINVAN_ARNET_HPP
