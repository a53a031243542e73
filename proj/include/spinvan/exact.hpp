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

#ifndef SPINVAN_EXACT_HPP
#define SPINVAN_EXACT_HPP

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "spinvan/lattice.hpp"

namespace spinvan {

/// Inverse critical temperature of the infinite square-lattice Ising model.
inline const double kBetaCritical = 0.5 * std::log(1.0 + std::numbers::sqrt2);

inline constexpr int kMaxEnumerationSites = 24;
inline constexpr int kMaxProbabilityTableSites = 16;

/// State index x encodes s_j = +1 iff bit j of x is set.
inline Spin spin_of(std::uint64_t state, int site) {
  return ((state >> site) & 1U) ? Spin{1} : Spin{-1};
}

struct EnumerationResult {
  LatticeGeometry geometry;
  CouplingField couplings;
  double beta = 0.0;
  double log_z = 0.0;
  double free_energy = 0.0;  // F = -log Z
  double mean_energy = 0.0;
  double mean_magnetization = 0.0;
  double mean_abs_magnetization = 0.0;
  std::vector<double> probabilities;  // indexed by state, only for N <= 16

  double probability(std::span<const Spin> config) const {
    if (probabilities.empty()) throw std::logic_error("probability table not stored");
    std::uint64_t x = 0;
    for (std::size_t j = 0; j < config.size(); ++j) {
      if (config[j] > 0) x |= (std::uint64_t{1} << j);
    }
    return probabilities[x];
  }
};

namespace detail {

struct NeighbourBonds {
  std::array<int, 4> site;
  std::array<double, 4> coupling;
};

inline std::vector<NeighbourBonds> neighbour_bonds(const LatticeGeometry& g,
                                                   const CouplingField& j) {
  std::vector<NeighbourBonds> nb(static_cast<std::size_t>(g.site_count()));
  for (int i = 0; i < g.site_count(); ++i) {
    nb[i].site = {g.right(i), g.left(i), g.down(i), g.up(i)};
    nb[i].coupling = {j.horizontal[i], j.horizontal[g.left(i)], j.vertical[i], j.vertical[g.up(i)]};
  }
  return nb;
}

}  // namespace detail

/// Exact Z, F and moments by visiting all 2^N states in Gray-code order with
/// incremental energy updates. Weights are shifted by the lower bound
/// -sum|J| of the energy so nothing overflows.
inline EnumerationResult enumerate(const LatticeGeometry& geometry, const CouplingField& couplings,
                                   double beta) {
  const int n = geometry.site_count();
  if (n > kMaxEnumerationSites) {
    throw std::invalid_argument("refusing to enumerate 2^" + std::to_string(n) +
                                " states (limit is N <= " +
                                std::to_string(kMaxEnumerationSites) + ")");
  }
  detail::check_sizes(static_cast<std::size_t>(n), couplings, geometry);
  const auto nb = detail::neighbour_bonds(geometry, couplings);

  double e_lower = 0.0;
  for (double x : couplings.horizontal) e_lower -= std::abs(x);
  for (double x : couplings.vertical) e_lower -= std::abs(x);

  EnumerationResult res{geometry, couplings, beta};
  const bool keep_table = n <= kMaxProbabilityTableSites;
  const std::uint64_t states = std::uint64_t{1} << n;
  if (keep_table) res.probabilities.assign(states, 0.0);

  SpinConfiguration s(static_cast<std::size_t>(n), Spin{-1});
  double e = energy(s, couplings, geometry);
  long m = -n;
  std::uint64_t gray = 0;
  double z = 0.0, ze = 0.0, zm = 0.0, zam = 0.0;
  for (std::uint64_t k = 0; k < states; ++k) {
    if (k > 0) {
      const int flip = std::countr_zero(k);
      double field = 0.0;
      for (int a = 0; a < 4; ++a) field += nb[flip].coupling[a] * s[nb[flip].site[a]];
      e += 2.0 * s[flip] * field;
      m -= 2 * s[flip];
      s[flip] = static_cast<Spin>(-s[flip]);
      gray ^= std::uint64_t{1} << flip;
    }
    const double w = std::exp(-beta * (e - e_lower));
    z += w;
    ze += w * e;
    zm += w * static_cast<double>(m);
    zam += w * std::abs(static_cast<double>(m));
    if (keep_table) res.probabilities[gray] = w;
  }
  res.log_z = std::log(z) - beta * e_lower;
  res.free_energy = -res.log_z;
  res.mean_energy = ze / z;
  res.mean_magnetization = zm / z;
  res.mean_abs_magnetization = zam / z;
  for (double& p : res.probabilities) p /= z;
  return res;
}

/// p(s_site = +1 | s_<site) by summing Boltzmann weights over every
/// completion of the prefix.
inline double exact_conditional(const EnumerationResult& enumeration,
                                std::span<const Spin> prefix, int site) {
  const auto& g = enumeration.geometry;
  const int n = g.site_count();
  if (site < 0 || site >= n) throw std::invalid_argument("site out of range");
  if (prefix.size() < static_cast<std::size_t>(site)) {
    throw std::invalid_argument("prefix shorter than site index");
  }
  if (enumeration.probabilities.empty()) {
    throw std::invalid_argument("exact conditionals need the stored probability table (N <= 16)");
  }
  std::uint64_t low = 0;
  for (int j = 0; j < site; ++j) {
    if (prefix[j] != 1 && prefix[j] != -1) throw std::invalid_argument("invalid prefix spin");
    if (prefix[j] > 0) low |= std::uint64_t{1} << j;
  }
  const std::uint64_t completions = std::uint64_t{1} << (n - site - 1);
  double up = 0.0, down = 0.0;
  for (std::uint64_t rest = 0; rest < completions; ++rest) {
    const std::uint64_t base = low | (rest << (site + 1));
    up += enumeration.probabilities[base | (std::uint64_t{1} << site)];
    down += enumeration.probabilities[base];
  }
  return up / (up + down);
}

namespace detail {

/// log(2 cosh x)
inline double log_2cosh(double x) {
  const double a = std::abs(x);
  return a + std::log1p(std::exp(-2.0 * a));
}

/// log|2 sinh x|, -inf at x = 0
inline double log_abs_2sinh(double x) {
  const double a = std::abs(x);
  if (a == 0.0) return -std::numeric_limits<double>::infinity();
  return a + std::log(-std::expm1(-2.0 * a));
}

}  // namespace detail

/// Exact F = -log Z of the ferromagnetic Ising model on the periodic L x L
/// torus, from the four-term finite-lattice partition function
///
///   Z = 1/2 (2 sinh 2K)^{L^2/2} (Z1 + Z2 + Z3 + Z4)
///   Z1 = prod_r 2 cosh(L g_{2r+1} / 2),  Z2 = prod_r 2 sinh(L g_{2r+1} / 2)
///   Z3 = prod_r 2 cosh(L g_{2r} / 2),    Z4 = prod_r 2 sinh(L g_{2r} / 2)
///
/// with r = 0..L-1, cosh g_k = cosh 2K coth 2K - cos(pi k / L) and the
/// special g_0 = 2K + log tanh K, which changes sign at the critical point.
/// Everything is accumulated as signed logarithms.
inline double kaufman_free_energy(int side_length, double beta) {
  if (!(beta > 0.0) || !std::isfinite(beta)) {
    throw std::invalid_argument("kaufman_free_energy needs a finite beta > 0");
  }
  if (side_length < 2) throw std::invalid_argument("side length must be at least 2");
  const int l = side_length;
  const double k2 = 2.0 * beta;
  const double c = std::cosh(k2) / std::tanh(k2);
  auto gamma = [&](int k) {
    if (k == 0) return k2 + std::log(std::tanh(beta));
    return std::acosh(c - std::cos(std::numbers::pi * k / l));
  };

  double log_z1 = 0.0, log_z2 = 0.0, log_z3 = 0.0, log_z4 = 0.0;
  int sign2 = 1, sign4 = 1;
  for (int r = 0; r < l; ++r) {
    const double odd = 0.5 * l * gamma(2 * r + 1);
    const double even = 0.5 * l * gamma(2 * r);
    log_z1 += detail::log_2cosh(odd);
    log_z2 += detail::log_abs_2sinh(odd);
    if (odd < 0.0) sign2 = -sign2;
    log_z3 += detail::log_2cosh(even);
    log_z4 += detail::log_abs_2sinh(even);
    if (even < 0.0) sign4 = -sign4;
  }

  const double terms[4] = {log_z1, log_z2, log_z3, log_z4};
  const int signs[4] = {1, sign2, 1, sign4};
  double shift = -std::numeric_limits<double>::infinity();
  for (double t : terms) shift = std::max(shift, t);
  double sum = 0.0;
  for (int k = 0; k < 4; ++k) {
    if (std::isfinite(terms[k])) sum += signs[k] * std::exp(terms[k] - shift);
  }
  const double log_z = -std::log(2.0) + 0.5 * l * l * std::log(2.0 * std::sinh(k2)) + shift +
                       std::log(sum);
  return -log_z;
}

/// <E> = dF/dbeta from a fourth-order central difference of the closed form.
inline double kaufman_mean_energy(int side_length, double beta, double step = 1e-4) {
  auto f = [&](double b) { return kaufman_free_energy(side_length, b); };
  return (-f(beta + 2 * step) + 8 * f(beta + step) - 8 * f(beta - step) + f(beta - 2 * step)) /
         (12 * step);
}

}  // namespace spinvan

#endif  // SPINVAN_EXACT_HPP
