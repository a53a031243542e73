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

#ifndef SPINVAN_PRIORS_HPP
#define SPINVAN_PRIORS_HPP

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spinvan/lattice.hpp"

/**
 * \file
 * Approximate conditional logits from the high-temperature (tanh beta)
 * expansion of the Boltzmann weight.
 *
 * For the site i at (r, c) the logit of p(s_i = +1 | s_<i) is approximated by
 * a weighted sum of already-fixed spins at a handful of relative offsets:
 *
 *   order 1:  (r-1, c), (r, c-1)                 direct bonds, weight 2 beta J
 *   order 2:  (r-1, c+1)                          one summed spin
 *   order 3:  (r-1, c+2), (r, c-1)                two summed spins
 *   order 4:  (r-1, c+3), (r, c-2), (r-1, c+1)    three summed spins
 *
 * The weight of a spin is twice the product of tanh(beta J) along every
 * connecting path of the given length (linearised logit). Offsets above the
 * first row or left of the first column read zero padding; offsets past the
 * right edge wrap to the start of the same row. Bonds below the site wrap
 * vertically so that every path has a defined coupling, but the summed spins
 * are treated as free (vertical periodicity of the fixed spins is ignored).
 */

namespace spinvan {

enum class PriorKind { ising, ea };

inline std::string to_string(PriorKind kind) { return kind == PriorKind::ising ? "ising" : "ea"; }

inline PriorKind parse_prior_kind(const std::string& s) {
  if (s == "ising") return PriorKind::ising;
  if (s == "ea") return PriorKind::ea;
  throw std::invalid_argument("unknown model kind '" + s + "' (expected ising or ea)");
}

/// One source offset of the logit kernel. Ising terms carry a uniform
/// `weight`; Edwards-Anderson terms carry one precomputed factor per site.
struct PriorTerm {
  int row_offset = 0;
  int col_offset = 0;
  double weight = 0.0;
  std::vector<double> site_factors;
};

class PriorSpec {
 public:
  PriorSpec(PriorKind kind, int order, double beta, LatticeGeometry geometry,
            std::vector<PriorTerm> terms)
      : kind_(kind),
        order_(order),
        beta_(beta),
        t_(std::tanh(beta)),
        geometry_(geometry),
        terms_(std::move(terms)) {}

  PriorKind kind() const { return kind_; }
  int order() const { return order_; }
  double beta() const { return beta_; }
  double t() const { return t_; }
  const LatticeGeometry& geometry() const { return geometry_; }
  const std::vector<PriorTerm>& terms() const { return terms_; }

  /// Coefficient multiplying the source spin of `term` in the logit of `site`.
  double factor(const PriorTerm& term, int site) const {
    return term.site_factors.empty() ? term.weight : term.site_factors[site];
  }

 private:
  PriorKind kind_;
  int order_;
  double beta_;
  double t_;
  LatticeGeometry geometry_;
  std::vector<PriorTerm> terms_;
};

namespace detail {

inline void check_order(int order, int lo) {
  if (order < lo || order > 4) {
    throw std::invalid_argument("prior order must be in " + std::to_string(lo) + "..4, got " +
                                std::to_string(order));
  }
}

inline void check_beta(double beta) {
  if (!(beta >= 0.0) || !std::isfinite(beta)) {
    throw std::invalid_argument("beta must be a finite non-negative number");
  }
}

inline PriorTerm& term_at(std::vector<PriorTerm>& terms, int dr, int dc, std::size_t sites) {
  for (auto& t : terms) {
    if (t.row_offset == dr && t.col_offset == dc) return t;
  }
  terms.push_back({dr, dc, 0.0, sites ? std::vector<double>(sites, 0.0) : std::vector<double>{}});
  return terms.back();
}

/// True when the source offset of a term lands on zero padding for `site`.
inline bool is_padding(const LatticeGeometry& g, int site, int dr, int dc) {
  return g.row(site) + dr < 0 || g.col(site) + dc < 0;
}

}  // namespace detail

inline PriorSpec make_ising_prior(const LatticeGeometry& geometry, double beta, int order) {
  detail::check_order(order, 0);
  detail::check_beta(beta);
  const double t = std::tanh(beta);
  std::vector<PriorTerm> terms;
  auto add = [&](int dr, int dc, double w) { detail::term_at(terms, dr, dc, 0).weight += w; };
  if (order >= 1) {
    add(-1, 0, 2.0 * beta);
    add(0, -1, 2.0 * beta);
  }
  if (order >= 2) {
    add(-1, 1, 2.0 * t * t);
  }
  if (order >= 3) {
    add(-1, 2, 2.0 * t * t * t);
    add(0, -1, 2.0 * t * t * t);
  }
  if (order >= 4) {
    const double t4 = t * t * t * t;
    add(-1, 3, 2.0 * t4);
    add(0, -2, 2.0 * t4);
    add(-1, 1, 2.0 * t4);
  }
  return {PriorKind::ising, order, beta, geometry, std::move(terms)};
}

/// Per-site products of t_ij = tanh(beta J_ij) along every path of the
/// expansion, merged into one table per source offset. Sites whose source
/// spin is padding get factor 0.
inline PriorSpec precompute_ea_factors(const LatticeGeometry& geometry,
                                       const CouplingField& couplings, double beta, int order) {
  detail::check_order(order, 1);
  detail::check_beta(beta);
  detail::check_sizes(static_cast<std::size_t>(geometry.site_count()), couplings, geometry);
  const int n = geometry.site_count();
  const auto sites = static_cast<std::size_t>(n);

  // Bond from (r, c) to (r, c+1) and from (r, c) to (r+1, c), periodic.
  auto jh = [&](int r, int c) { return couplings.horizontal[geometry.site(r, c)]; };
  auto jv = [&](int r, int c) { return couplings.vertical[geometry.site(r, c)]; };
  auto th = [&](int r, int c) { return std::tanh(beta * jh(r, c)); };
  auto tv = [&](int r, int c) { return std::tanh(beta * jv(r, c)); };

  std::vector<PriorTerm> terms;
  auto add = [&](int dr, int dc, int site, double f) {
    auto& term = detail::term_at(terms, dr, dc, sites);
    if (!detail::is_padding(geometry, site, dr, dc)) term.site_factors[site] += f;
  };

  // Register offsets in a fixed order even where every factor vanishes.
  const int offsets_by_order[5] = {0, 2, 3, 5, 7};
  const int offsets[7][2] = {{-1, 0}, {0, -1}, {-1, 1}, {-1, 2}, {0, -1}, {-1, 3}, {0, -2}};
  for (int k = 0; k < offsets_by_order[order]; ++k) {
    detail::term_at(terms, offsets[k][0], offsets[k][1], sites);
  }

  for (int i = 0; i < n; ++i) {
    const int r = geometry.row(i);
    const int c = geometry.col(i);
    if (order >= 1) {
      add(-1, 0, i, 2.0 * beta * jv(r - 1, c));
      add(0, -1, i, 2.0 * beta * jh(r, c - 1));
    }
    if (order >= 2) {
      add(-1, 1, i, 2.0 * tv(r - 1, c + 1) * th(r, c));
    }
    if (order >= 3) {
      add(-1, 2, i, 2.0 * tv(r - 1, c + 2) * th(r, c + 1) * th(r, c));
      add(0, -1, i, 2.0 * tv(r, c - 1) * th(r + 1, c - 1) * tv(r, c));
    }
    if (order >= 4) {
      add(-1, 3, i, 2.0 * tv(r - 1, c + 3) * th(r, c + 2) * th(r, c + 1) * th(r, c));
      add(0, -2, i, 2.0 * tv(r, c - 2) * th(r + 1, c - 2) * th(r + 1, c - 1) * tv(r, c));
      add(-1, 1, i, 2.0 * tv(r - 1, c + 1) * tv(r, c + 1) * th(r + 1, c) * tv(r, c));
    }
  }
  return {PriorKind::ea, order, beta, geometry, std::move(terms)};
}

/// Order 0 yields the uniform prior (no terms) for either kind.
inline PriorSpec make_prior(PriorKind kind, const LatticeGeometry& geometry,
                            const CouplingField& couplings, double beta, int order) {
  if (kind == PriorKind::ising || order == 0) {
    auto spec = make_ising_prior(geometry, beta, order);
    if (kind == PriorKind::ising) return spec;
    return {PriorKind::ea, 0, beta, geometry, {}};
  }
  return precompute_ea_factors(geometry, couplings, beta, order);
}

/// Logit of the prior conditional for `site`, reading only spins with index
/// below `site` from `prefix`.
inline double prior_logit_site(const PriorSpec& spec, std::span<const Spin> prefix, int site) {
  const auto& g = spec.geometry();
  const int l = g.side_length();
  if (site < 0 || site >= g.site_count()) {
    throw std::invalid_argument("site " + std::to_string(site) + " out of range");
  }
  if (prefix.size() < static_cast<std::size_t>(site)) {
    throw std::invalid_argument("prefix shorter than site index");
  }
  const int r = g.row(site);
  const int c = g.col(site);
  double logit = 0.0;
  for (const auto& term : spec.terms()) {
    const int rr = r + term.row_offset;
    const int cc = c + term.col_offset;
    if (rr < 0 || cc < 0) continue;
    logit += spec.factor(term, site) * prefix[rr * l + (cc % l)];
  }
  return logit;
}

/// Logits for every site of every configuration, returned as an N x B
/// matrix (one column per configuration).
///
/// Each configuration is laid out on a padded grid with one zero row on top,
/// two zero columns on the left and three columns on the right that repeat
/// the first three spins of the same row; every term is then a shifted
/// element-wise product with that grid.
inline Eigen::MatrixXd prior_logits_batched(const PriorSpec& spec, const SpinBatch& batch) {
  const auto& g = spec.geometry();
  const int l = g.side_length();
  const int n = g.site_count();
  if (batch.sites() != static_cast<std::size_t>(n)) {
    throw std::invalid_argument("batch configurations do not match the prior's lattice");
  }
  constexpr int kTop = 1, kLeft = 2, kRight = 3;
  const int width = l + kLeft + kRight;
  std::vector<double> padded(static_cast<std::size_t>((l + kTop) * width), 0.0);

  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(batch.size()));
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const auto s = batch[b];
    for (int r = 0; r < l; ++r) {
      double* row = padded.data() + (r + kTop) * width;
      for (int c = 0; c < l; ++c) row[c + kLeft] = s[r * l + c];
      for (int c = 0; c < kRight; ++c) row[l + kLeft + c] = s[r * l + (c % l)];
    }
    double* col = out.col(static_cast<Eigen::Index>(b)).data();
    for (const auto& term : spec.terms()) {
      const bool uniform = term.site_factors.empty();
      for (int r = 0; r < l; ++r) {
        const double* src = padded.data() + (r + kTop + term.row_offset) * width + kLeft +
                            term.col_offset;
        double* dst = col + r * l;
        if (uniform) {
          for (int c = 0; c < l; ++c) dst[c] += term.weight * src[c];
        } else {
          const double* f = term.site_factors.data() + r * l;
          for (int c = 0; c < l; ++c) dst[c] += f[c] * src[c];
        }
      }
    }
  }
  return out;
}

}  // namespace spinvan

#endif  // SPINVAN_PRIORS_HPP
