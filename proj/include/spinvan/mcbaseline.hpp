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

#ifndef SPINVAN_MCBASELINE_HPP
#define SPINVAN_MCBASELINE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "spinvan/lattice.hpp"
#include "spinvan/rng.hpp"

namespace spinvan {

struct UnsupportedModel : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// One Markov chain. For +-1 couplings the tracked energy is an integer and
/// every local update changes it by an integer, so it is exact in double
/// precision and never drifts from a full recomputation.
struct ChainState {
  LatticeGeometry geometry;
  SpinConfiguration spins;
  double beta = 0.0;
  double energy = 0.0;
  long sweeps = 0;
  long accepted = 0;
  long proposed = 0;
  Rng rng;
  std::vector<std::uint8_t> scratch;

  /// Random ("hot") start.
  static ChainState make(const LatticeGeometry& geometry, const CouplingField& couplings,
                         double beta, std::uint64_t seed) {
    if (!(beta >= 0.0)) throw std::invalid_argument("beta must be non-negative");
    ChainState st{geometry, SpinConfiguration(static_cast<std::size_t>(geometry.site_count())),
                  beta, 0.0, 0, 0, 0, Rng(seed), {}};
    for (auto& s : st.spins) s = (st.rng() >> 63) ? Spin{1} : Spin{-1};
    st.energy = spinvan::energy(st.spins, couplings, geometry);
    return st;
  }
};

namespace detail {

inline double local_field(const ChainState& st, const CouplingField& j, int i) {
  const auto& g = st.geometry;
  const auto& s = st.spins;
  return j.horizontal[i] * s[g.right(i)] + j.horizontal[g.left(i)] * s[g.left(i)] +
         j.vertical[i] * s[g.down(i)] + j.vertical[g.up(i)] * s[g.up(i)];
}

inline void require_ferromagnetic(const CouplingField& couplings) {
  if (!couplings.all_ferromagnetic()) {
    throw UnsupportedModel("Wolff cluster updates require all couplings J = +1");
  }
}

inline int wolff_update_unchecked(ChainState& st) {
  const auto& g = st.geometry;
  const int n = g.site_count();
  auto& s = st.spins;
  auto& mark = st.scratch;
  mark.assign(static_cast<std::size_t>(n), 0);
  const double p_add = -std::expm1(-2.0 * st.beta);

  std::vector<int> cluster;
  const int seed = static_cast<int>(st.rng() % static_cast<std::uint64_t>(n));
  const Spin s0 = s[seed];
  cluster.push_back(seed);
  mark[seed] = 1;
  for (std::size_t head = 0; head < cluster.size(); ++head) {
    const int i = cluster[head];
    for (int nb : {g.right(i), g.left(i), g.down(i), g.up(i)}) {
      if (!mark[nb] && s[nb] == s0 && uniform01(st.rng) < p_add) {
        mark[nb] = 1;
        cluster.push_back(nb);
      }
    }
  }
  // Bonds leaving the cluster change sign; bonds inside do not.
  double delta = 0.0;
  for (int i : cluster) {
    for (int nb : {g.right(i), g.left(i), g.down(i), g.up(i)}) {
      if (!mark[nb]) delta += 2.0 * s[i] * s[nb];
    }
  }
  for (int i : cluster) s[i] = static_cast<Spin>(-s[i]);
  st.energy += delta;
  return static_cast<int>(cluster.size());
}

}  // namespace detail

/// Grows one Wolff cluster with bond probability 1 - exp(-2 beta) and flips
/// it. Returns the cluster size.
inline int wolff_update(ChainState& st, const CouplingField& couplings) {
  detail::require_ferromagnetic(couplings);
  return detail::wolff_update_unchecked(st);
}

/// N single-spin Metropolis proposals in site order; returns the fraction
/// accepted. One uniform variate is drawn per proposal.
inline double metropolis_sweep(ChainState& st, const CouplingField& couplings) {
  const int n = st.geometry.site_count();
  int accepted = 0;
  for (int i = 0; i < n; ++i) {
    const double delta = 2.0 * st.spins[i] * detail::local_field(st, couplings, i);
    const double u = uniform01(st.rng);
    if (delta <= 0.0 || u < std::exp(-st.beta * delta)) {
      st.spins[i] = static_cast<Spin>(-st.spins[i]);
      st.energy += delta;
      ++accepted;
    }
  }
  ++st.sweeps;
  st.accepted += accepted;
  st.proposed += n;
  return static_cast<double>(accepted) / n;
}

/// Retained Monte Carlo samples.
struct McSamples {
  SpinBatch configs;  // empty unless configurations were requested
  std::vector<double> energy;
  std::vector<double> magnetization;

  void record(const ChainState& st, bool keep_config) {
    if (keep_config) configs.push_back(st.spins);
    energy.push_back(st.energy);
    magnetization.push_back(spinvan::magnetization(st.spins));
  }
};

struct McRunOptions {
  std::size_t samples = 1000;
  long burn_in = 10000;  // sweeps
  long thin = 10;        // sweeps between retained samples
  bool keep_configs = false;
};

/// Wolff updates grouped into sweeps. A burn-in sweep ends once the flipped
/// cluster sizes add up to N. Retained samples use a fixed number of updates
/// per sweep, N over the mean burn-in cluster size (1 without burn-in), so
/// the recording times never depend on the states visited.
inline McSamples wolff_run(ChainState& st, const CouplingField& couplings,
                           const McRunOptions& opt) {
  detail::require_ferromagnetic(couplings);
  const long n = st.geometry.site_count();
  long updates = 0, flipped_total = 0;
  for (long k = 0; k < opt.burn_in; ++k) {
    long flipped = 0;
    while (flipped < n) {
      flipped += detail::wolff_update_unchecked(st);
      ++updates;
    }
    flipped_total += flipped;
    ++st.sweeps;
  }
  const long per_sweep =
      updates > 0 ? std::max(1L, std::lround(static_cast<double>(n) * updates / flipped_total)) : 1;
  McSamples out;
  for (std::size_t k = 0; k < opt.samples; ++k) {
    for (long t = 0; t < opt.thin; ++t) {
      for (long u = 0; u < per_sweep; ++u) detail::wolff_update_unchecked(st);
      ++st.sweeps;
    }
    out.record(st, opt.keep_configs);
  }
  return out;
}

inline McSamples metropolis_run(ChainState& st, const CouplingField& couplings,
                                const McRunOptions& opt) {
  for (long k = 0; k < opt.burn_in; ++k) metropolis_sweep(st, couplings);
  McSamples out;
  for (std::size_t k = 0; k < opt.samples; ++k) {
    for (long t = 0; t < opt.thin; ++t) metropolis_sweep(st, couplings);
    out.record(st, opt.keep_configs);
  }
  return out;
}

/// Replica-exchange acceptance min(1, exp((beta_a - beta_b)(E_a - E_b))).
inline double swap_acceptance_probability(double beta_a, double beta_b, double energy_a,
                                          double energy_b) {
  return std::min(1.0, std::exp((beta_a - beta_b) * (energy_a - energy_b)));
}

/// Replicas sorted by strictly increasing beta. Slot k always runs at
/// betas[k]; an accepted swap exchanges the configurations of two slots.
struct TemperingLadder {
  std::vector<double> betas;
  std::vector<ChainState> replicas;
  std::vector<int> replica_ids;  // which original replica occupies each slot
  std::vector<long> swap_attempts;
  std::vector<long> swap_accepts;

  TemperingLadder(std::vector<double> ladder, const LatticeGeometry& geometry,
                  const CouplingField& couplings, std::uint64_t seed)
      : betas(std::move(ladder)) {
    if (betas.empty()) throw std::invalid_argument("tempering ladder is empty");
    for (std::size_t k = 1; k < betas.size(); ++k) {
      if (!(betas[k] > betas[k - 1])) {
        throw std::invalid_argument("tempering ladder must be strictly increasing in beta");
      }
    }
    for (std::size_t k = 0; k < betas.size(); ++k) {
      replicas.push_back(
          ChainState::make(geometry, couplings, betas[k], derive_seed(seed, "replica", k)));
    }
    replica_ids.resize(betas.size());
    std::iota(replica_ids.begin(), replica_ids.end(), 0);
    swap_attempts.assign(betas.size() > 1 ? betas.size() - 1 : 0, 0);
    swap_accepts = swap_attempts;
  }

  /// `count` betas geometrically spaced from beta_min to beta_max.
  static std::vector<double> geometric(double beta_min, double beta_max, int count) {
    if (count < 1 || !(beta_min > 0.0) || !(beta_max >= beta_min)) {
      throw std::invalid_argument("invalid geometric ladder parameters");
    }
    std::vector<double> b(static_cast<std::size_t>(count));
    for (int k = 0; k < count; ++k) {
      b[k] = count == 1 ? beta_max
                        : beta_min * std::pow(beta_max / beta_min, static_cast<double>(k) / (count - 1));
    }
    b.back() = beta_max;
    return b;
  }

  std::vector<double> swap_rates() const {
    std::vector<double> r(swap_attempts.size());
    for (std::size_t k = 0; k < r.size(); ++k) {
      r[k] = swap_attempts[k] ? static_cast<double>(swap_accepts[k]) / swap_attempts[k] : 0.0;
    }
    return r;
  }
};

struct TemperingResult {
  std::vector<McSamples> samples;  // one entry per ladder slot
  std::vector<double> swap_rates;
};

/// Metropolis sweeps on every replica, with adjacent swap attempts every
/// `swap_interval` sweeps. Samples are retained after `burn_in` sweeps,
/// every `thin` sweeps, until `opt.samples` per beta are collected.
inline TemperingResult parallel_tempering_run(TemperingLadder& ladder,
                                              const CouplingField& couplings,
                                              const McRunOptions& opt, long swap_interval,
                                              Rng& rng) {
  if (swap_interval < 1) throw std::invalid_argument("swap interval must be at least 1");
  if (opt.thin < 1) throw std::invalid_argument("thinning must be at least 1 sweep");
  if (ladder.betas.size() == 1) {
    std::cerr << "spinvan: warning: tempering ladder has a single beta, "
                 "running plain Metropolis\n";
  }
  const std::size_t k_count = ladder.betas.size();
  TemperingResult out;
  out.samples.resize(k_count);

  auto try_swaps = [&] {
    for (std::size_t a = 0; a + 1 < k_count; ++a) {
      auto& ra = ladder.replicas[a];
      auto& rb = ladder.replicas[a + 1];
      ++ladder.swap_attempts[a];
      const double p = swap_acceptance_probability(ra.beta, rb.beta, ra.energy, rb.energy);
      if (uniform01(rng) < p) {
        std::swap(ra.spins, rb.spins);
        std::swap(ra.energy, rb.energy);
        std::swap(ladder.replica_ids[a], ladder.replica_ids[a + 1]);
        ++ladder.swap_accepts[a];
      }
    }
  };

  long sweep = 0;
  auto advance = [&] {
    for (auto& r : ladder.replicas) metropolis_sweep(r, couplings);
    ++sweep;
    if (k_count > 1 && sweep % swap_interval == 0) try_swaps();
  };
  for (long k = 0; k < opt.burn_in; ++k) advance();
  for (std::size_t k = 0; k < opt.samples; ++k) {
    for (long t = 0; t < opt.thin; ++t) advance();
    for (std::size_t slot = 0; slot < k_count; ++slot) {
      out.samples[slot].record(ladder.replicas[slot], opt.keep_configs);
    }
  }
  out.swap_rates = ladder.swap_rates();
  return out;
}

}  // namespace spinvan

#endif  // SPINVAN_MCBASELINE_HPP
