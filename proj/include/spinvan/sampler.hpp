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

#ifndef SPINVAN_SAMPLER_HPP
#define SPINVAN_SAMPLER_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "spinvan/arnet.hpp"
#include "spinvan/lattice.hpp"
#include "spinvan/priors.hpp"
#include "spinvan/rng.hpp"

namespace spinvan {

/// Batches are cut into chunks of this many samples. Chunk c draws from
/// Rng(derive_seed(base, "chunk", c)) where `base` is one draw from the
/// caller's generator, so results do not depend on the thread count.
inline constexpr std::size_t kSamplerChunk = 256;

/// Incremental state of ancestral sampling for one chunk.
struct SamplerCache {
  Eigen::MatrixXd pre;        // H x B pre-activations, W1[:, <cursor] s + b1
  std::vector<double> log_q;  // log-probability per sample, complete once done()
  int cursor = 0;             // next site to sample
};

namespace detail {

/// Source spin index and coefficient of every prior term that reaches `site`
/// (padding and zero factors dropped).
struct PriorTap {
  int source;
  double factor;
};

inline void prior_taps(const PriorSpec& spec, int site, std::vector<PriorTap>& taps) {
  const auto& g = spec.geometry();
  const int l = g.side_length();
  const int r = g.row(site);
  const int c = g.col(site);
  taps.clear();
  for (const auto& term : spec.terms()) {
    const int rr = r + term.row_offset;
    const int cc = c + term.col_offset;
    const double f = spec.factor(term, site);
    if (rr < 0 || cc < 0 || f == 0.0) continue;
    taps.push_back({rr * l + cc % l, f});
  }
}

template <class Fn>
void parallel_chunks(std::size_t chunks, int threads, Fn&& fn) {
  const auto workers = static_cast<std::size_t>(std::max(1, threads));
  if (workers == 1 || chunks < 2) {
    for (std::size_t c = 0; c < chunks; ++c) fn(c);
    return;
  }
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < std::min(workers, chunks); ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t c = w; c < chunks; c += workers) fn(c);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace detail

/// Site-by-site sampler over a batch of configurations. The network, when
/// present, is evaluated from cached pre-activations: sampling site i only
/// adds one column of W1 to the cache and reads one row of W2.
///
/// One uniform variate is consumed per (sample, site), site-major.
class AncestralSampler {
 public:
  AncestralSampler(const ModelParameters* network, const PriorSpec& prior, std::size_t batch,
                   std::uint64_t seed)
      : network_(network),
        prior_(prior),
        batch_(batch),
        columns_(static_cast<std::size_t>(prior.geometry().site_count()) * batch),
        rng_(seed) {
    if (batch < 1) throw std::invalid_argument("batch size must be at least 1");
    const auto b = static_cast<Eigen::Index>(batch);
    cache_.log_q.assign(batch, 0.0);
    norm_.assign(batch, 1.0);
    z_.assign(batch, 0.0);
    if (network_) {
      if (network_->inputs != prior.geometry().site_count()) {
        throw std::invalid_argument("network input size does not match the lattice");
      }
      cache_.pre = network_->b1.replicate(1, b);
      hidden_.resize(network_->hidden, b);
      spins_.resize(1, b);
      h_.resize(1, b);
    }
  }

  int cursor() const { return cache_.cursor; }
  bool done() const { return cache_.cursor >= prior_.geometry().site_count(); }
  const SamplerCache& cache() const { return cache_; }
  std::size_t batch_size() const { return batch_; }

  /// Spins of site `site` for every sample in the batch.
  std::span<const Spin> site_column(int site) const {
    return {columns_.data() + static_cast<std::size_t>(site) * batch_, batch_};
  }

  /// Sampled configurations, one per row; complete once done().
  SpinBatch configs() const {
    const auto n = static_cast<std::size_t>(prior_.geometry().site_count());
    SpinBatch out(batch_, n);
    for (std::size_t i = 0; i < n; ++i) {
      const Spin* col = columns_.data() + i * batch_;
      for (std::size_t b = 0; b < batch_; ++b) out[b][i] = col[b];
    }
    return out;
  }

  void step() {
    const int i = cache_.cursor;
    const std::size_t batch = batch_;
    Spin* out = columns_.data() + static_cast<std::size_t>(i) * batch;
    detail::prior_taps(prior_, i, taps_);

    if (network_) {
      const double a = network_->leaky_slope;
      hidden_ = cache_.pre.unaryExpr([a](double x) { return leaky_relu(x, a); });
      h_.noalias() = network_->w2.row(i) * hidden_;
    }
    // log sigmoid(s z) = min(s z, 0) - log(1 + exp(-|z|)); the log of the
    // second term is taken once per block of sites on a running product.
    double* z = z_.data();
    if (network_) {
      const double b2 = network_->b2(i);
      for (std::size_t b = 0; b < batch; ++b) z[b] = b2 + h_(0, static_cast<Eigen::Index>(b));
    } else {
      std::fill(z_.begin(), z_.end(), 0.0);
    }
    for (const auto& tap : taps_) {
      const Spin* src = columns_.data() + static_cast<std::size_t>(tap.source) * batch;
      const double f = tap.factor;
      for (std::size_t b = 0; b < batch; ++b) z[b] += f * src[b];
    }
    for (std::size_t b = 0; b < batch; ++b) {
      const double e = std::exp(-std::abs(z[b]));
      const double p_up = z[b] >= 0.0 ? 1.0 / (1.0 + e) : e / (1.0 + e);
      const Spin si = uniform01(rng_) < p_up ? Spin{1} : Spin{-1};
      out[b] = si;
      cache_.log_q[b] += std::min(si * z[b], 0.0);
      norm_[b] *= 1.0 + e;
    }
    if (network_) {
      for (std::size_t b = 0; b < batch; ++b) spins_(0, static_cast<Eigen::Index>(b)) = out[b];
    }
    if (network_) cache_.pre.noalias() += network_->w1.col(i) * spins_;
    ++cache_.cursor;
    if (cache_.cursor % kNormBlock == 0 || done()) {
      for (std::size_t b = 0; b < batch; ++b) {
        cache_.log_q[b] -= std::log(norm_[b]);
        norm_[b] = 1.0;
      }
    }
  }

  void run() {
    while (!done()) step();
  }


 private:
  static constexpr int kNormBlock = 64;

  const ModelParameters* network_;
  const PriorSpec& prior_;
  std::size_t batch_;
  std::vector<Spin> columns_;  // site-major: columns_[site * batch + b]
  Rng rng_;
  SamplerCache cache_;
  std::vector<double> norm_;  // pending product of (1 + exp(-|z|)), at most 2^kNormBlock
  std::vector<detail::PriorTap> taps_;
  std::vector<double> z_;
  Eigen::MatrixXd hidden_;
  Eigen::RowVectorXd spins_;
  Eigen::RowVectorXd h_;
};

struct SampleBatch {
  SpinBatch configs;
  std::vector<double> log_q;
  std::vector<double> energy;
};

/// Per-sample scalars without the configurations themselves.
struct SampleSummary {
  std::vector<double> log_q;
  std::vector<double> energy;
  std::vector<double> magnetization;
};

namespace detail {

template <class Sink>
void sample_chunked(const ModelParameters* network, const PriorSpec& prior, std::size_t count,
                    Rng& rng, int threads, Sink&& sink) {
  const std::uint64_t base = rng();
  const std::size_t chunks = (count + kSamplerChunk - 1) / kSamplerChunk;
  parallel_chunks(chunks, threads, [&](std::size_t chunk) {
    const std::size_t begin = chunk * kSamplerChunk;
    const std::size_t size = std::min(kSamplerChunk, count - begin);
    AncestralSampler sampler(network, prior, size, derive_seed(base, "chunk", chunk));
    sampler.run();
    sink(begin, sampler);
  });
}

inline SampleBatch ancestral_sample_impl(const ModelParameters* network, const PriorSpec& prior,
                                         const LatticeGeometry& geometry,
                                         const CouplingField& couplings, std::size_t count,
                                         Rng& rng, int threads) {
  if (count < 1) throw std::invalid_argument("batch size must be at least 1");
  if (!(prior.geometry() == geometry)) {
    throw std::invalid_argument("prior was built for a different lattice");
  }
  const auto n = static_cast<std::size_t>(geometry.site_count());
  SampleBatch out{SpinBatch(count, n), std::vector<double>(count), std::vector<double>(count)};
  sample_chunked(network, prior, count, rng, threads,
                 [&](std::size_t begin, const AncestralSampler& s) {
                   const auto& configs = s.configs();
                   for (std::size_t b = 0; b < configs.size(); ++b) {
                     std::copy(configs[b].begin(), configs[b].end(), out.configs[begin + b].begin());
                     out.log_q[begin + b] = s.cache().log_q[b];
                     out.energy[begin + b] = energy(configs[b], couplings, geometry);
                   }
                 });
  return out;
}

inline SampleSummary sample_summaries_impl(const ModelParameters* network,
                                           const PriorSpec& prior,
                                           const LatticeGeometry& geometry,
                                           const CouplingField& couplings, std::size_t count,
                                           Rng& rng, int threads) {
  if (count < 1) throw std::invalid_argument("sample count must be at least 1");
  SampleSummary out{std::vector<double>(count), std::vector<double>(count),
                    std::vector<double>(count)};
  sample_chunked(network, prior, count, rng, threads,
                 [&](std::size_t begin, const AncestralSampler& s) {
                   const auto& configs = s.configs();
                   for (std::size_t b = 0; b < configs.size(); ++b) {
                     out.log_q[begin + b] = s.cache().log_q[b];
                     out.energy[begin + b] = energy(configs[b], couplings, geometry);
                     out.magnetization[begin + b] = magnetization(configs[b]);
                   }
                 });
  return out;
}

}  // namespace detail

/// Draws `count` configurations from the prior-shifted network; returns them
/// with their log q (accumulated during sampling) and energies.
inline SampleBatch ancestral_sample(const ModelParameters& network, const PriorSpec& prior,
                                    const LatticeGeometry& geometry,
                                    const CouplingField& couplings, std::size_t count, Rng& rng,
                                    int threads = 1) {
  return detail::ancestral_sample_impl(&network, prior, geometry, couplings, count, rng, threads);
}

/// Prior-only variant: network output identically zero.
inline SampleBatch ancestral_sample(const PriorSpec& prior, const LatticeGeometry& geometry,
                                    const CouplingField& couplings, std::size_t count, Rng& rng,
                                    int threads = 1) {
  return detail::ancestral_sample_impl(nullptr, prior, geometry, couplings, count, rng, threads);
}

/// Same draws as ancestral_sample for the same generator state, but keeps
/// only log q, E and M per sample.
inline SampleSummary sample_summaries(const ModelParameters& network, const PriorSpec& prior,
                                      const LatticeGeometry& geometry,
                                      const CouplingField& couplings, std::size_t count, Rng& rng,
                                      int threads = 1) {
  return detail::sample_summaries_impl(&network, prior, geometry, couplings, count, rng, threads);
}

inline SampleSummary sample_summaries(const PriorSpec& prior, const LatticeGeometry& geometry,
                                      const CouplingField& couplings, std::size_t count, Rng& rng,
                                      int threads = 1) {
  return detail::sample_summaries_impl(nullptr, prior, geometry, couplings, count, rng, threads);
}

struct MeanWithError {
  double estimate = 0.0;
  double std_error = 0.0;
};

/// F_q of the prior alone: mean of log q + beta E over ancestral samples.
inline MeanWithError prior_only_f_q(const PriorSpec& spec, const CouplingField& couplings,
                                    const LatticeGeometry& geometry, std::size_t sample_count,
                                    std::uint64_t seed, int threads = 1) {
  if (sample_count < 2) throw std::invalid_argument("need at least 2 samples");
  Rng rng(seed);
  const auto s = sample_summaries(spec, geometry, couplings, sample_count, rng, threads);
  double mean = 0.0, m2 = 0.0;
  for (std::size_t k = 0; k < sample_count; ++k) {
    const double x = s.log_q[k] + spec.beta() * s.energy[k];
    const double d = x - mean;
    mean += d / static_cast<double>(k + 1);
    m2 += d * (x - mean);
  }
  const double var = m2 / static_cast<double>(sample_count - 1);
  return {mean, std::sqrt(var / static_cast<double>(sample_count))};
}

struct MarkovChain {
  SpinBatch states;
  std::vector<double> energy;
  double acceptance_rate = 0.0;
};

/// Independence Metropolis-Hastings with ancestral proposals, accepting
/// s' with min(1, P(s') q(s) / (P(s) q(s'))) where P = exp(-beta E).
inline MarkovChain neural_mcmc_chain(const ModelParameters* network, const PriorSpec& prior,
                                     const LatticeGeometry& geometry,
                                     const CouplingField& couplings, double beta,
                                     std::size_t chain_length, Rng& rng) {
  if (chain_length < 1) throw std::invalid_argument("chain length must be at least 1");
  const auto proposals =
      detail::ancestral_sample_impl(network, prior, geometry, couplings, chain_length, rng, 1);
  const auto n = static_cast<std::size_t>(geometry.site_count());
  MarkovChain chain{SpinBatch(chain_length, n), std::vector<double>(chain_length), 0.0};

  std::size_t current = 0;
  std::size_t accepted = 0;
  auto log_weight = [&](std::size_t k) { return -beta * proposals.energy[k] - proposals.log_q[k]; };
  for (std::size_t k = 0; k < chain_length; ++k) {
    if (k > 0) {
      const double log_ratio = log_weight(k) - log_weight(current);
      const double u = uniform01(rng);
      if (log_ratio >= 0.0 || u < std::exp(log_ratio)) {
        current = k;
        ++accepted;
      }
    }
    std::copy(proposals.configs[current].begin(), proposals.configs[current].end(),
              chain.states[k].begin());
    chain.energy[k] = proposals.energy[current];
  }
  chain.acceptance_rate =
      chain_length > 1 ? static_cast<double>(accepted) / static_cast<double>(chain_length - 1)
                       : 1.0;
  return chain;
}

}  // namespace spinvan

#endif  // SPINVAN_SAMPLER_HPP
