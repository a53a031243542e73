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

#ifndef SPINVAN_TRAINER_HPP
#define SPINVAN_TRAINER_HPP

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spinvan/arnet.hpp"
#include "spinvan/estimators.hpp"
#include "spinvan/lattice.hpp"
#include "spinvan/priors.hpp"
#include "spinvan/rng.hpp"
#include "spinvan/sampler.hpp"

namespace spinvan {

/// Parameter-shaped gradient.
struct Gradient {
  Eigen::MatrixXd w1;
  Eigen::VectorXd b1;
  Eigen::MatrixXd w2;
  Eigen::VectorXd b2;

  double norm() const {
    return std::sqrt(w1.squaredNorm() + b1.squaredNorm() + w2.squaredNorm() + b2.squaredNorm());
  }
};

/// sum_k coefficient_k * grad log q(s_k), by backpropagation through both
/// masked layers. Prior logits are constants.
inline Gradient score_function_gradient(const ModelParameters& p, const PriorSpec& spec,
                                        const SpinBatch& batch,
                                        std::span<const double> coefficients) {
  if (coefficients.size() != batch.size()) {
    throw std::invalid_argument("one coefficient per sample required");
  }
  const Eigen::MatrixXd s = to_matrix(batch);
  const auto fp = forward_pass(p, s);
  const Eigen::MatrixXd z = fp.out + prior_logits_batched(spec, batch);

  // d log sigmoid(s z) / dz = (s + 1)/2 - sigmoid(z)
  const Eigen::Map<const Eigen::RowVectorXd> c(coefficients.data(),
                                               static_cast<Eigen::Index>(coefficients.size()));
  Eigen::MatrixXd g = 0.5 * (s.array() + 1.0).matrix() - z.unaryExpr([](double x) {
    return sigmoid(x);
  });
  g.array().rowwise() *= c.array();

  Gradient grad;
  grad.w2.noalias() = g * fp.hidden.transpose();
  grad.w2.array() *= p.mask2.array();
  grad.b2 = g.rowwise().sum();

  const double a = p.leaky_slope;
  Eigen::MatrixXd dpre = p.w2.transpose() * g;
  dpre.array() *= fp.pre.unaryExpr([a](double x) { return x > 0.0 ? 1.0 : a; }).array();
  grad.w1.noalias() = dpre * s.transpose();
  grad.w1.array() *= p.mask1.array();
  grad.b1 = dpre.rowwise().sum();
  return grad;
}

struct LossAndGradient {
  double f_q = 0.0;
  Gradient gradient;
};

/// REINFORCE: F_q ~ mean(log q + beta E) and
/// grad F_q ~ (1/M) sum (log q + beta E - b) grad log q with b the batch mean.
inline LossAndGradient loss_and_gradient(const ModelParameters& p, const PriorSpec& spec,
                                         const SampleBatch& batch, double beta) {
  const std::size_t m = batch.configs.size();
  if (m < 2) throw std::invalid_argument("REINFORCE needs a batch of at least 2");
  std::vector<double> signal(m);
  double baseline = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    signal[k] = batch.log_q[k] + beta * batch.energy[k];
    baseline += signal[k];
  }
  baseline /= static_cast<double>(m);
  for (auto& x : signal) x = (x - baseline) / static_cast<double>(m);
  return {baseline, score_function_gradient(p, spec, batch.configs, signal)};
}

/// Adaptive-moment gradient descent; masked entries stay exactly zero.
class AdamOptimizer {
 public:
  AdamOptimizer(const ModelParameters& p, double learning_rate, double beta1 = 0.9,
                double beta2 = 0.999, double eps = 1e-8)
      : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(eps) {
    m_ = {Eigen::MatrixXd::Zero(p.w1.rows(), p.w1.cols()), Eigen::VectorXd::Zero(p.b1.size()),
          Eigen::MatrixXd::Zero(p.w2.rows(), p.w2.cols()), Eigen::VectorXd::Zero(p.b2.size())};
    v_ = m_;
  }

  void step(ModelParameters& p, const Gradient& g) {
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, t_);
    const double c2 = 1.0 - std::pow(beta2_, t_);
    auto update = [&](auto& param, const auto& grad, auto& m, auto& v) {
      m = beta1_ * m + (1.0 - beta1_) * grad;
      v = beta2_ * v + (1.0 - beta2_) * grad.cwiseProduct(grad);
      param.array() -= lr_ * (m.array() / c1) / ((v.array() / c2).sqrt() + eps_);
    };
    update(p.w1, g.w1, m_.w1, v_.w1);
    update(p.b1, g.b1, m_.b1, v_.b1);
    update(p.w2, g.w2, m_.w2, v_.w2);
    update(p.b2, g.b2, m_.b2, v_.b2);
    p.apply_masks();
  }

  long steps() const { return t_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  Gradient m_, v_;
  long t_ = 0;
};

struct TrainConfig {
  double beta = 0.44;
  std::size_t batch_size = 4096;
  int era_length = 100;
  int era_count = 1;
  double learning_rate = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 1;
  PriorKind prior_kind = PriorKind::ising;
  int prior_order = 0;
  int side_length = 8;
  int hidden = 0;  // 0 means N
  int threads = 1;

  void validate() const {
    if (batch_size < 2) throw std::invalid_argument("batch size must be at least 2");
    if (era_length < 1) throw std::invalid_argument("era length must be at least 1");
    if (era_count < 0) throw std::invalid_argument("era count must be non-negative");
    if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
    if (!(beta >= 0.0)) throw std::invalid_argument("beta must be non-negative");
    detail::check_order(prior_order, 0);
  }
};

/// Statistics of one weight update, computed on the batch it was trained on.
struct RunMetrics {
  long update = 0;
  int era = 0;
  double f_q = 0.0;
  double ess = 0.0;
  double m_mean = 0.0;      // mean of m = M / N
  double m_abs_mean = 0.0;  // mean of |m|
  double grad_norm = 0.0;
};

struct TrainingDiverged : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TrainCallbacks {
  std::function<void(const RunMetrics&)> on_update;
  /// Called with era 0 before the first update and after every era, with
  /// the sampling generator in the state the next era will start from.
  std::function<void(int era, const ModelParameters&, const Rng&)> on_era;
};

struct TrainResult {
  ModelParameters params;
  std::vector<RunMetrics> metrics;
};

/// Network initialisation seed and sampling seed derived from config.seed.
inline TrainResult train(const TrainConfig& config, const CouplingField& couplings,
                         const TrainCallbacks& callbacks = {}) {
  config.validate();
  const LatticeGeometry geometry(config.side_length);
  const auto prior =
      make_prior(config.prior_kind, geometry, couplings, config.beta, config.prior_order);
  const int hidden = config.hidden > 0 ? config.hidden : geometry.site_count();

  TrainResult result{init_model(geometry, hidden, derive_seed(config.seed, "init")), {}};
  auto& params = result.params;
  AdamOptimizer optimizer(params, config.learning_rate, config.adam_beta1, config.adam_beta2,
                          config.adam_eps);
  Rng rng(derive_seed(config.seed, "train"));
  const double n = geometry.site_count();

  if (callbacks.on_era) callbacks.on_era(0, params, rng);
  long update = 0;
  for (int era = 1; era <= config.era_count; ++era) {
    for (int k = 0; k < config.era_length; ++k, ++update) {
      const auto batch = ancestral_sample(params, prior, geometry, couplings, config.batch_size,
                                          rng, config.threads);
      auto lg = loss_and_gradient(params, prior, batch, config.beta);
      if (!std::isfinite(lg.f_q)) {
        throw TrainingDiverged("F_q estimate became non-finite at update " +
                               std::to_string(update) + " (era " + std::to_string(era) + ")");
      }
      RunMetrics rm;
      rm.update = update;
      rm.era = era;
      rm.f_q = lg.f_q;
      rm.ess = ess(log_weights(batch.log_q, batch.energy, config.beta));
      for (std::size_t b = 0; b < batch.configs.size(); ++b) {
        const double m = magnetization(batch.configs[b]) / n;
        rm.m_mean += m;
        rm.m_abs_mean += std::abs(m);
      }
      rm.m_mean /= static_cast<double>(batch.configs.size());
      rm.m_abs_mean /= static_cast<double>(batch.configs.size());
      rm.grad_norm = lg.gradient.norm();
      optimizer.step(params, lg.gradient);
      result.metrics.push_back(rm);
      if (callbacks.on_update) callbacks.on_update(rm);
    }
    if (callbacks.on_era) callbacks.on_era(era, params, rng);
  }
  return result;
}

/// Trailing moving average used for reporting curves; raw metrics are kept.
inline std::vector<double> moving_average(std::span<const double> x, std::size_t window = 100) {
  std::vector<double> out(x.size());
  double acc = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    acc += x[k];
    if (k >= window) acc -= x[k - window];
    out[k] = acc / static_cast<double>(std::min(k + 1, window));
  }
  return out;
}

}  // namespace spinvan

#endif  // SPINVAN_TRAINER_HPP
