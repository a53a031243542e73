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

// Independent reference implementations used by the tests. Nothing here
// calls into the library beyond plain data types, so a bug in a library
// routine cannot hide behind the same bug in its oracle.

#ifndef SPINVAN_TESTS_ORACLES_HPP
#define SPINVAN_TESTS_ORACLES_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "spinvan/arnet.hpp"
#include "spinvan/lattice.hpp"

namespace oracle {

using spinvan::CouplingField;
using spinvan::Spin;
using spinvan::SpinConfiguration;

inline int wrap(int x, int l) { return ((x % l) + l) % l; }

/// Bond-by-bond energy: for every site, the bond to its right neighbour and
/// the bond to the neighbour below.
inline double energy(std::span<const Spin> s, const CouplingField& j, int l) {
  double e = 0.0;
  for (int r = 0; r < l; ++r) {
    for (int c = 0; c < l; ++c) {
      const double here = s[r * l + c];
      e -= j.horizontal[r * l + c] * here * s[r * l + wrap(c + 1, l)];
      e -= j.vertical[r * l + c] * here * s[wrap(r + 1, l) * l + c];
    }
  }
  return e;
}

/// Spins of state index x in plain binary order (bit j set means +1).
inline SpinConfiguration state(std::uint64_t x, int n) {
  SpinConfiguration s(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) s[j] = ((x >> j) & 1U) ? Spin{1} : Spin{-1};
  return s;
}

struct Exact {
  double log_z = 0.0;
  double mean_energy = 0.0;
  double mean_abs_m = 0.0;
  std::vector<double> p;  // probability of every state in binary order
};

/// Direct sum over all 2^N states in binary order with a log-sum-exp.
inline Exact enumerate(const CouplingField& j, int l, double beta) {
  const int n = l * l;
  const std::uint64_t states = std::uint64_t{1} << n;
  std::vector<double> log_w(states);
  std::vector<double> e(states), am(states);
  for (std::uint64_t x = 0; x < states; ++x) {
    const auto s = state(x, n);
    e[x] = energy(s, j, l);
    double m = 0.0;
    for (Spin v : s) m += v;
    am[x] = std::abs(m);
    log_w[x] = -beta * e[x];
  }
  const double shift = *std::max_element(log_w.begin(), log_w.end());
  double z = 0.0;
  for (double v : log_w) z += std::exp(v - shift);
  Exact out;
  out.log_z = shift + std::log(z);
  out.p.resize(states);
  for (std::uint64_t x = 0; x < states; ++x) {
    out.p[x] = std::exp(log_w[x] - out.log_z);
    out.mean_energy += out.p[x] * e[x];
    out.mean_abs_m += out.p[x] * am[x];
  }
  return out;
}

/// Network output h_i written as explicit loops over the weight matrices.
inline double network_output(const spinvan::ModelParameters& p, std::span<const Spin> s, int i) {
  double h = p.b2(i);
  for (int k = 0; k < p.hidden; ++k) {
    double pre = p.b1(k);
    for (int j = 0; j < p.inputs; ++j) pre += p.w1(k, j) * s[j];
    const double act = pre > 0.0 ? pre : p.leaky_slope * pre;
    h += p.w2(i, k) * act;
  }
  return h;
}

inline double log_sigmoid(double x) {
  return x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

/// log q(s) = sum_i log sigma(s_i (h_i + prior_i)), one site at a time.
inline double log_q(const spinvan::ModelParameters* p, std::span<const Spin> s,
                    const std::function<double(std::span<const Spin>, int)>& prior_logit) {
  double lq = 0.0;
  for (int i = 0; i < static_cast<int>(s.size()); ++i) {
    const double z = (p ? network_output(*p, s, i) : 0.0) + prior_logit(s, i);
    lq += log_sigmoid(s[i] * z);
  }
  return lq;
}

enum Move { R, L, U, D };

/// tanh(beta J) products along each expansion path, walked bond by bond on
/// the torus. A path is a list of moves from the site to the source spin.
inline const std::vector<std::vector<Move>>& paths(int order) {
  static const std::vector<std::vector<Move>> by_order[5] = {
      {},
      {{U}, {L}},
      {{R, U}},
      {{R, R, U}, {D, L, U}},
      {{R, R, R, U}, {D, L, L, U}, {D, R, U, U}},
  };
  return by_order[order];
}

struct PathTerm {
  int dr;
  int dc;
  double factor;
};

/// All path contributions reaching `site` at orders 1..order. The order-1
/// paths carry 2 beta J, higher orders 2 prod tanh(beta J).
inline std::vector<PathTerm> path_terms(const CouplingField& j, int l, double beta, int order,
                                        int site) {
  auto bond = [&](int r, int c, Move m) {
    switch (m) {
      case R: return j.horizontal[wrap(r, l) * l + wrap(c, l)];
      case L: return j.horizontal[wrap(r, l) * l + wrap(c - 1, l)];
      case D: return j.vertical[wrap(r, l) * l + wrap(c, l)];
      case U: return j.vertical[wrap(r - 1, l) * l + wrap(c, l)];
    }
    return 0.0;
  };
  std::vector<PathTerm> out;
  for (int k = 1; k <= order; ++k) {
    for (const auto& path : paths(k)) {
      int r = site / l, c = site % l;
      double f = 2.0;
      for (Move m : path) {
        const double jb = bond(r, c, m);
        f *= k == 1 ? beta * jb : std::tanh(beta * jb);
        r += m == D ? 1 : m == U ? -1 : 0;
        c += m == R ? 1 : m == L ? -1 : 0;
      }
      out.push_back({r - site / l, c - site % l, f});
    }
  }
  return out;
}

/// Prior logit from the path terms: source spins above the top row or left
/// of column 0 are zero padding, columns past the right edge wrap within
/// the same row.
inline double prior_logit(const CouplingField& j, int l, double beta, int order,
                          std::span<const Spin> prefix, int site) {
  double z = 0.0;
  for (const auto& t : path_terms(j, l, beta, order, site)) {
    const int r = site / l + t.dr;
    const int c = site % l + t.dc;
    if (r < 0 || c < 0) continue;
    z += t.factor * prefix[r * l + (c % l)];
  }
  return z;
}

inline SpinConfiguration random_config(int n, std::mt19937_64& rng) {
  SpinConfiguration s(static_cast<std::size_t>(n));
  for (auto& v : s) v = (rng() & 1U) ? Spin{1} : Spin{-1};
  return s;
}

inline CouplingField random_couplings(int l, std::mt19937_64& rng) {
  CouplingField j;
  j.kind = spinvan::CouplingKind::ea_binary;
  for (int k = 0; k < l * l; ++k) j.horizontal.push_back((rng() & 1U) ? 1.0 : -1.0);
  for (int k = 0; k < l * l; ++k) j.vertical.push_back((rng() & 1U) ? 1.0 : -1.0);
  return j;
}

}  // namespace oracle

#endif  // SPINVAN_TESTS_ORACLES_HPP
