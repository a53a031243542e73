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

#ifndef SPINVAN_ESTIMATORS_HPP
#define SPINVAN_ESTIMATORS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "spinvan/arnet.hpp"
#include "spinvan/lattice.hpp"
#include "spinvan/priors.hpp"
#include "spinvan/rng.hpp"

/**
 * \file
 * Importance-sampling estimators on log-weights.
 *
 * With samples s ~ q the unnormalised weight is w(s) = exp(-beta E(s)) / q(s)
 * and everything here works on log w with a max shift, since beta E is of
 * order 10^3 on realistic lattices.
 */

namespace spinvan {

namespace detail {

inline void require_nonempty(std::span<const double> x, const char* what) {
  if (x.empty()) throw std::invalid_argument(std::string(what) + ": empty input");
}

}  // namespace detail

/// log((1/M) sum exp(x_k)).
inline double log_mean_exp(std::span<const double> x) {
  detail::require_nonempty(x, "log_mean_exp");
  const double shift = *std::max_element(x.begin(), x.end());
  if (!std::isfinite(shift)) return shift;
  double acc = 0.0;
  for (double v : x) acc += std::exp(v - shift);
  return shift + std::log(acc / static_cast<double>(x.size()));
}

/// Log unnormalised importance weights, -beta E - log q.
inline std::vector<double> log_weights(std::span<const double> log_q,
                                       std::span<const double> energy, double beta) {
  if (log_q.size() != energy.size()) throw std::invalid_argument("length mismatch");
  std::vector<double> out(log_q.size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = -beta * energy[k] - log_q[k];
  return out;
}

/// ESS = <w>^2 / <w^2>, in (0, 1].
inline double ess(std::span<const double> log_w) {
  detail::require_nonempty(log_w, "ess");
  const double shift = *std::max_element(log_w.begin(), log_w.end());
  double s1 = 0.0, s2 = 0.0;
  for (double v : log_w) {
    const double w = std::exp(v - shift);
    s1 += w;
    s2 += w * w;
  }
  return s1 * s1 / (s2 * static_cast<double>(log_w.size()));
}

/// F_nis = -log Z_nis with Z_nis the sample mean of w.
inline double f_nis(std::span<const double> log_w) {
  detail::require_nonempty(log_w, "f_nis");
  return -log_mean_exp(log_w);
}

/// F_mc = -log Z_mc, 1/Z_mc = <q / exp(-beta E)>_p, from samples of p given
/// as log q + beta E per sample.
inline double f_mc(std::span<const double> log_q_plus_beta_e) {
  detail::require_nonempty(log_q_plus_beta_e, "f_mc");
  return log_mean_exp(log_q_plus_beta_e);
}

/// F_mc for Monte Carlo configurations under the given model.
inline double f_mc(const ModelParameters* network, const PriorSpec& spec,
                   const LatticeGeometry& geometry, const CouplingField& couplings,
                   const SpinBatch& mc_samples, double beta) {
  if (mc_samples.empty()) throw std::invalid_argument("f_mc: empty input");
  const auto lq = network ? log_prob(*network, spec, mc_samples) : log_prob(spec, mc_samples);
  std::vector<double> x(lq.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    x[k] = lq[k] + beta * energy(mc_samples[k], couplings, geometry);
  }
  return f_mc(x);
}

/// w_bar = Z_nis / Z_mc = exp(F_mc - F_nis); well below 1 signals mode collapse.
inline double w_bar(double f_nis_value, double f_mc_value) {
  return std::exp(f_mc_value - f_nis_value);
}

/// Self-normalised importance-sampled average sum(w O) / sum(w).
inline double nis_observable(std::span<const double> log_w, std::span<const double> values) {
  if (log_w.size() != values.size()) {
    throw std::invalid_argument("nis_observable: weights and values differ in length");
  }
  detail::require_nonempty(log_w, "nis_observable");
  const double shift = *std::max_element(log_w.begin(), log_w.end());
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < log_w.size(); ++k) {
    const double w = std::exp(log_w[k] - shift);
    num += w * values[k];
    den += w;
  }
  return num / den;
}

/// Standard deviation of `statistic` over with-replacement resamples of the
/// index set {0..n-1}. The statistic receives the resampled indices.
template <class Statistic>
double bootstrap_std(std::size_t n, int resamples, Rng& rng, Statistic&& statistic) {
  if (resamples < 2) throw std::invalid_argument("bootstrap needs at least 2 resamples");
  if (n < 2) {
    std::cerr << "spinvan: warning: bootstrap on fewer than 2 samples, error reported as 0\n";
    return 0.0;
  }
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::vector<std::size_t> idx(n);
  double mean = 0.0, m2 = 0.0;
  for (int r = 0; r < resamples; ++r) {
    for (auto& i : idx) i = pick(rng);
    const double x = statistic(std::span<const std::size_t>(idx));
    const double d = x - mean;
    mean += d / (r + 1);
    m2 += d * (x - mean);
  }
  return std::sqrt(m2 / (resamples - 1));
}

/// Bootstrap error of the mean of `values`, or of the self-normalised
/// weighted mean when log-weights are supplied.
inline double bootstrap_error(std::span<const double> values,
                              std::optional<std::span<const double>> log_w, int resamples,
                              Rng& rng) {
  if (resamples < 100) throw std::invalid_argument("bootstrap needs at least 100 resamples");
  if (log_w && log_w->size() != values.size()) {
    throw std::invalid_argument("bootstrap_error: weights and values differ in length");
  }
  std::vector<double> w;
  if (log_w) {
    const double shift = values.empty() ? 0.0 : *std::max_element(log_w->begin(), log_w->end());
    w.reserve(values.size());
    for (double v : *log_w) w.push_back(std::exp(v - shift));
  }
  return bootstrap_std(values.size(), resamples, rng, [&](std::span<const std::size_t> idx) {
    double num = 0.0, den = 0.0;
    for (auto i : idx) {
      const double wi = w.empty() ? 1.0 : w[i];
      num += wi * values[i];
      den += wi;
    }
    return num / den;
  });
}

struct Estimate {
  double value = std::numeric_limits<double>::quiet_NaN();
  double error = std::numeric_limits<double>::quiet_NaN();
};

/// Estimator summary for one trained (or prior-only) model.
struct EstimateReport {
  double beta = 0.0;
  int prior_order = 0;
  std::size_t samples = 0;
  std::size_t mc_samples = 0;
  Estimate ess, f_q, f_nis, energy, magnetization, abs_magnetization;
  Estimate variational_energy, variational_magnetization, variational_abs_magnetization;
  std::optional<Estimate> f_mc, w_bar;
};

/// Builds the report from per-sample scalars of the model samples and,
/// optionally, log q + beta E of Monte Carlo samples from p.
inline EstimateReport make_estimate_report(double beta, int prior_order,
                                           std::span<const double> log_q,
                                           std::span<const double> energy,
                                           std::span<const double> magnetization,
                                           std::optional<std::span<const double>> mc_log_q_plus_beta_e,
                                           int resamples, Rng& rng) {
  const std::size_t m = log_q.size();
  if (m == 0 || energy.size() != m || magnetization.size() != m) {
    throw std::invalid_argument("estimate report: inconsistent sample arrays");
  }
  EstimateReport rep;
  rep.beta = beta;
  rep.prior_order = prior_order;
  rep.samples = m;

  const auto lw = log_weights(log_q, energy, beta);
  std::vector<double> fq(m), abs_m(m);
  for (std::size_t k = 0; k < m; ++k) {
    fq[k] = log_q[k] + beta * energy[k];
    abs_m[k] = std::abs(magnetization[k]);
  }
  const double shift = *std::max_element(lw.begin(), lw.end());
  std::vector<double> w(m);
  for (std::size_t k = 0; k < m; ++k) w[k] = std::exp(lw[k] - shift);

  auto mean_of = [](std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v;
    return s / static_cast<double>(x.size());
  };
  auto plain = [&](std::span<const double> x) {
    return Estimate{mean_of(x), bootstrap_error(x, std::nullopt, resamples, rng)};
  };
  auto weighted = [&](std::span<const double> x) {
    return Estimate{nis_observable(lw, x), bootstrap_error(x, std::span<const double>(lw),
                                                           resamples, rng)};
  };

  rep.f_q = plain(fq);
  rep.variational_energy = plain(energy);
  rep.variational_magnetization = plain(magnetization);
  rep.variational_abs_magnetization = plain(abs_m);
  rep.energy = weighted(energy);
  rep.magnetization = weighted(magnetization);
  rep.abs_magnetization = weighted(abs_m);

  rep.ess.value = ess(lw);
  rep.ess.error = bootstrap_std(m, resamples, rng, [&](std::span<const std::size_t> idx) {
    double s1 = 0.0, s2 = 0.0;
    for (auto i : idx) {
      s1 += w[i];
      s2 += w[i] * w[i];
    }
    return s1 * s1 / (s2 * static_cast<double>(idx.size()));
  });
  auto resampled_f_nis = [&](std::span<const std::size_t> idx) {
    double s = 0.0;
    for (auto i : idx) s += w[i];
    return -(shift + std::log(s / static_cast<double>(idx.size())));
  };
  rep.f_nis.value = f_nis(lw);
  rep.f_nis.error = bootstrap_std(m, resamples, rng, resampled_f_nis);

  if (mc_log_q_plus_beta_e) {
    const auto mc = *mc_log_q_plus_beta_e;
    rep.mc_samples = mc.size();
    const double mc_shift = *std::max_element(mc.begin(), mc.end());
    std::vector<double> mc_w(mc.size());
    for (std::size_t k = 0; k < mc.size(); ++k) mc_w[k] = std::exp(mc[k] - mc_shift);
    auto resampled_f_mc = [&](std::span<const std::size_t> idx) {
      double s = 0.0;
      for (auto i : idx) s += mc_w[i];
      return mc_shift + std::log(s / static_cast<double>(idx.size()));
    };
    Estimate fmc{f_mc(mc), bootstrap_std(mc.size(), resamples, rng, resampled_f_mc)};
    rep.f_mc = fmc;
    // Independent sample sets, so the log-gap errors add in quadrature.
    const double wb = w_bar(rep.f_nis.value, fmc.value);
    rep.w_bar = Estimate{wb, wb * std::hypot(rep.f_nis.error, fmc.error)};
  }
  return rep;
}

}  // namespace spinvan

#endif  // SPINVAN_ESTIMATORS_HPP
