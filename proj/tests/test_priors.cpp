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

#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "spinvan/checkpoint.hpp"
#include "spinvan/priors.hpp"
#include "spinvan/sampler.hpp"

namespace spinvan {
namespace {

constexpr double kTight = 1e-12;

SpinBatch random_batch(int l, int count, std::mt19937_64& rng) {
  SpinBatch b(0, static_cast<std::size_t>(l * l));
  for (int k = 0; k < count; ++k) b.push_back(oracle::random_config(l * l, rng));
  return b;
}

TEST(Priors, OrderOneInteriorSubstitution) {
  const LatticeGeometry g(8);
  const auto spec = make_ising_prior(g, 0.5, 1);
  const SpinConfiguration s(64, Spin{1});
  EXPECT_NEAR(prior_logit_site(spec, s, g.site(3, 3)), 2.0, kTight);
}

TEST(Priors, SiteZeroIsAlwaysZero) {
  const LatticeGeometry g(8);
  const auto j = make_couplings(CouplingKind::ea_binary, g, 5);
  const SpinConfiguration s(64, Spin{1});
  for (int order = 0; order <= 4; ++order) {
    EXPECT_EQ(prior_logit_site(make_ising_prior(g, 0.7, order), s, 0), 0.0);
    if (order >= 1) EXPECT_EQ(prior_logit_site(precompute_ea_factors(g, j, 0.7, order), s, 0), 0.0);
  }
}

TEST(Priors, OrderZeroIsUniform) {
  const LatticeGeometry g(4);
  std::mt19937_64 rng(1);
  const auto s = oracle::random_config(16, rng);
  const auto spec = make_ising_prior(g, 0.9, 0);
  for (int i = 0; i < 16; ++i) EXPECT_EQ(prior_logit_site(spec, s, i), 0.0);
}

TEST(Priors, InvalidArgumentsThrow) {
  const LatticeGeometry g(4);
  const SpinConfiguration s(16, Spin{1});
  const auto spec = make_ising_prior(g, 0.4, 2);
  EXPECT_THROW(prior_logit_site(spec, s, 16), std::invalid_argument);
  EXPECT_THROW(prior_logit_site(spec, s, -1), std::invalid_argument);
  EXPECT_THROW(make_ising_prior(g, 0.4, 5), std::invalid_argument);
  EXPECT_THROW(make_ising_prior(g, -0.1, 1), std::invalid_argument);
  SpinBatch wrong(1, 9);
  EXPECT_THROW(prior_logits_batched(spec, wrong), std::invalid_argument);
}

// The linearised order-2 term against the one-spin sum it approximates:
// summing out the right neighbour gives log cosh 2 beta for s20 = +1, and
// the linearisation 2 t^2 differs from it by less than t^6.
TEST(Priors, OrderTwoAgainstOneSpinSum) {
  const LatticeGeometry g(8);
  std::mt19937_64 rng(7);
  for (double beta : {0.1, 0.3, 0.44, 0.6}) {
    const double t = std::tanh(beta);
    const auto spec = make_ising_prior(g, beta, 2);
    for (int rep = 0; rep < 50; ++rep) {
      const auto s = oracle::random_config(64, rng);
      const int site = g.site(3, 3);
      const double up = s[g.site(2, 3)], left = s[g.site(3, 2)], diag = s[g.site(2, 4)];
      // logit = log sum_{s28} e^{beta s28 (+1 + s20)} / sum_{s28} e^{beta s28 (-1 + s20)}
      const double summed = 2.0 * beta * (up + left) +
                            std::log(std::cosh(beta * (1.0 + diag)) / std::cosh(beta * (-1.0 + diag)));
      const double linear = 2.0 * beta * (up + left) + 2.0 * diag * t * t;
      const double got = prior_logit_site(spec, s, site);
      EXPECT_NEAR(got, linear, kTight);
      EXPECT_LE(std::abs(got - summed), std::pow(t, 6));
    }
  }
}

TEST(Priors, IsingCoefficientsPerOrder) {
  const LatticeGeometry g(8);
  const double beta = 0.44, t = std::tanh(beta);
  auto weight = [&](int order, int dr, int dc) {
    const auto spec = make_ising_prior(g, beta, order);
    for (const auto& term : spec.terms()) {
      if (term.row_offset == dr && term.col_offset == dc) return term.weight;
    }
    return 0.0;
  };
  EXPECT_NEAR(weight(1, -1, 0), 2 * beta, kTight);
  EXPECT_NEAR(weight(1, 0, -1), 2 * beta, kTight);
  EXPECT_NEAR(weight(2, -1, 1), 2 * t * t, kTight);
  EXPECT_NEAR(weight(3, -1, 2), 2 * t * t * t, kTight);
  EXPECT_NEAR(weight(3, 0, -1), 2 * beta + 2 * t * t * t, kTight);
  EXPECT_NEAR(weight(4, -1, 3), 2 * std::pow(t, 4), kTight);
  EXPECT_NEAR(weight(4, 0, -2), 2 * std::pow(t, 4), kTight);
  EXPECT_NEAR(weight(4, -1, 1), 2 * t * t + 2 * std::pow(t, 4), kTight);
}

TEST(Priors, MatchesPathOracleForIsingAndEa) {
  std::mt19937_64 rng(21);
  for (int l : {2, 3, 5, 8}) {
    const LatticeGeometry g(l);
    const auto ferro = make_couplings(CouplingKind::ferromagnetic, g, 0);
    const auto ea = oracle::random_couplings(l, rng);
    for (int order = 1; order <= 4; ++order) {
      const auto ising = make_ising_prior(g, 0.37, order);
      const auto glass = precompute_ea_factors(g, ea, 0.37, order);
      for (int rep = 0; rep < 5; ++rep) {
        const auto s = oracle::random_config(l * l, rng);
        for (int i = 0; i < l * l; ++i) {
          EXPECT_NEAR(prior_logit_site(ising, s, i), oracle::prior_logit(ferro, l, 0.37, order, s, i), kTight)
              << "ising L=" << l << " order=" << order << " site=" << i;
          EXPECT_NEAR(prior_logit_site(glass, s, i), oracle::prior_logit(ea, l, 0.37, order, s, i), kTight)
              << "ea L=" << l << " order=" << order << " site=" << i;
        }
      }
    }
  }
}

TEST(Priors, ReadsOnlyThePrefix) {
  std::mt19937_64 rng(2);
  const LatticeGeometry g(6);
  const auto ea = oracle::random_couplings(6, rng);
  for (int order = 1; order <= 4; ++order) {
    const auto spec = precompute_ea_factors(g, ea, 0.5, order);
    for (int rep = 0; rep < 10; ++rep) {
      auto s = oracle::random_config(36, rng);
      for (int i = 0; i < 36; ++i) {
        const double before = prior_logit_site(spec, s, i);
        auto t = s;
        for (int k = i; k < 36; ++k) t[k] = static_cast<Spin>(-t[k]);
        EXPECT_EQ(prior_logit_site(spec, t, i), before) << "order " << order << " site " << i;
      }
    }
  }
}

TEST(Priors, BatchedEqualsPerSite) {
  std::mt19937_64 rng(4);
  const LatticeGeometry g(8);
  const auto ferro = make_couplings(CouplingKind::ferromagnetic, g, 0);
  const auto ea = make_couplings(CouplingKind::ea_binary, g, 77);
  const auto batch = random_batch(8, 100, rng);
  for (auto kind : {PriorKind::ising, PriorKind::ea}) {
    for (int order = 0; order <= 4; ++order) {
      const auto spec = make_prior(kind, g, kind == PriorKind::ea ? ea : ferro, 0.44, order);
      const auto z = prior_logits_batched(spec, batch);
      for (std::size_t b = 0; b < batch.size(); ++b) {
        for (int i = 0; i < 64; ++i) {
          EXPECT_NEAR(z(i, static_cast<Eigen::Index>(b)), prior_logit_site(spec, batch[b], i), kTight);
        }
      }
    }
  }
}

TEST(Priors, EaWithFerromagneticCouplingsReducesToIsing) {
  std::mt19937_64 rng(6);
  for (int l : {3, 8}) {
    const LatticeGeometry g(l);
    const auto ferro = make_couplings(CouplingKind::ferromagnetic, g, 0);
    const auto batch = random_batch(l, 20, rng);
    for (int order = 1; order <= 4; ++order) {
      const auto a = prior_logits_batched(make_ising_prior(g, 0.44, order), batch);
      const auto b = prior_logits_batched(precompute_ea_factors(g, ferro, 0.44, order), batch);
      EXPECT_LT((a - b).cwiseAbs().maxCoeff(), kTight) << "L=" << l << " order " << order;
    }
  }
}

TEST(Priors, EaInteriorOrderTwoFactorsAreTanhSquared) {
  const LatticeGeometry g(8);
  const auto ferro = make_couplings(CouplingKind::ferromagnetic, g, 0);
  const auto spec = precompute_ea_factors(g, ferro, 0.44, 2);
  const double t2 = std::pow(std::tanh(0.44), 2);
  for (const auto& term : spec.terms()) {
    if (term.row_offset != -1 || term.col_offset != 1) continue;
    for (int i = 0; i < 64; ++i) {
      if (g.row(i) > 0) {
        EXPECT_NEAR(term.site_factors[i], 2 * t2, kTight);
      } else {
        EXPECT_EQ(term.site_factors[i], 0.0);
      }
    }
  }
}

TEST(Priors, FlippingOneBondNegatesExactlyItsChains) {
  const LatticeGeometry g(6);
  const double beta = 0.5;
  const auto base = make_couplings(CouplingKind::ferromagnetic, g, 0);
  auto flipped = base;
  const int bond_site = g.site(2, 3);
  flipped.vertical[bond_site] = -1.0;  // bond (2,3)-(3,3)
  for (int order = 1; order <= 4; ++order) {
    const auto a = precompute_ea_factors(g, base, beta, order);
    const auto b = precompute_ea_factors(g, flipped, beta, order);
    for (int i = 0; i < g.site_count(); ++i) {
      const auto pa = oracle::path_terms(base, 6, beta, order, i);
      const auto pb = oracle::path_terms(flipped, 6, beta, order, i);
      for (std::size_t k = 0; k < pa.size(); ++k) {
        // Each chain either keeps its value or changes sign.
        EXPECT_TRUE(pa[k].factor == pb[k].factor || pa[k].factor == -pb[k].factor);
      }
      for (std::size_t t = 0; t < a.terms().size(); ++t) {
        double expect = 0.0;
        for (const auto& p : pb) {
          const bool padded = g.row(i) + p.dr < 0 || g.col(i) + p.dc < 0;
          if (!padded && p.dr == a.terms()[t].row_offset && p.dc == a.terms()[t].col_offset) expect += p.factor;
        }
        EXPECT_NEAR(b.factor(b.terms()[t], i), expect, kTight);
      }
    }
    // Order-1 factor of site (3,3) through the flipped bond is -2 beta.
    for (const auto& term : b.terms()) {
      if (term.row_offset == -1 && term.col_offset == 0) {
        EXPECT_NEAR(term.site_factors[g.site(3, 3)], -2 * beta, kTight);
      }
    }
  }
}

TEST(Priors, IsingLogitIsOddInThePrefix) {
  std::mt19937_64 rng(8);
  const LatticeGeometry g(5);
  for (int order = 1; order <= 4; ++order) {
    const auto spec = make_ising_prior(g, 0.44, order);
    for (int rep = 0; rep < 10; ++rep) {
      const auto s = oracle::random_config(25, rng);
      const auto f = flip_all(s);
      for (int i = 0; i < 25; ++i) EXPECT_NEAR(prior_logit_site(spec, f, i), -prior_logit_site(spec, s, i), kTight);
    }
  }
}

TEST(Priors, VanishAsBetaGoesToZero) {
  std::mt19937_64 rng(9);
  const LatticeGeometry g(4);
  const auto s = oracle::random_config(16, rng);
  for (int order = 1; order <= 4; ++order) {
    const auto spec = make_ising_prior(g, 1e-9, order);
    for (int i = 0; i < 16; ++i) EXPECT_LT(std::abs(prior_logit_site(spec, s, i)), 1e-8);
  }
}

TEST(Priors, FactorTablesExport) {
  const LatticeGeometry g(4);
  const auto j = make_couplings(CouplingKind::ea_binary, g, 3);
  const auto spec = precompute_ea_factors(g, j, 0.6, 3);
  std::stringstream ss;
  write_factor_tables(ss, spec);
  const auto file = read_tensor_file(ss);
  EXPECT_EQ(file.require_meta("prior_order"), "3");
  ASSERT_EQ(file.tensors.size(), spec.terms().size());
  for (std::size_t t = 0; t < spec.terms().size(); ++t) {
    for (int i = 0; i < 16; ++i) {
      const bool padded = detail::is_padding(g, i, spec.terms()[t].row_offset, spec.terms()[t].col_offset);
      EXPECT_EQ(file.tensors[t].second.values[i], padded ? 0.0 : spec.factor(spec.terms()[t], i));
    }
  }
}

TEST(PriorOnlyFq, OrderZeroIsMinusNLogTwoPlusMeanEnergy) {
  const LatticeGeometry g(8);
  const auto j = make_couplings(CouplingKind::ferromagnetic, g, 0);
  const auto spec = make_ising_prior(g, 0.44, 0);
  Rng rng(1);
  const auto s = sample_summaries(spec, g, j, 1000, rng);
  for (double lq : s.log_q) EXPECT_NEAR(lq, -64 * std::log(2.0), 1e-10);
  const auto r = prior_only_f_q(spec, j, g, 20000, 5);
  EXPECT_LT(std::abs(r.estimate + 64 * std::log(2.0)), 5 * r.std_error);
}

}  // namespace
}  // namespace spinvan
