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

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "spinvan/arnet.hpp"
#include "spinvan/exact.hpp"

namespace spinvan {
namespace {

ModelParameters random_model(const LatticeGeometry& g, std::uint64_t seed, double scale = 1.0) {
  auto p = init_model(g, g.site_count(), seed);
  Rng rng(seed + 1000);
  for (Eigen::Index k = 0; k < p.b1.size(); ++k) p.b1(k) = scale * (uniform01(rng) - 0.5);
  for (Eigen::Index i = 0; i < p.b2.size(); ++i) p.b2(i) = scale * (uniform01(rng) - 0.5);
  p.w1 *= scale;
  p.w2 *= scale;
  return p;
}

SpinBatch all_states(int n) {
  const std::uint64_t states = std::uint64_t{1} << n;
  SpinBatch b(states, static_cast<std::size_t>(n));
  for (std::uint64_t x = 0; x < states; ++x) {
    const auto s = oracle::state(x, n);
    std::copy(s.begin(), s.end(), b[x].begin());
  }
  return b;
}

TEST(Masks, DegreesAndConnectivity) {
  const auto p = make_zero_model(16, 16);
  for (int k = 0; k < 16; ++k) {
    const int d = k % 15 + 1;
    EXPECT_EQ(p.degree(k), d);
    for (int j = 0; j < 16; ++j) EXPECT_EQ(p.mask1(k, j), j < d ? 1.0 : 0.0);
    for (int i = 0; i < 16; ++i) EXPECT_EQ(p.mask2(i, k), d <= i ? 1.0 : 0.0);
  }
}

TEST(Masks, ComposedMaskIsStrictlyLowerTriangular) {
  const auto p = make_zero_model(12, 20);
  const Eigen::MatrixXd path = p.mask2 * p.mask1;
  for (int i = 0; i < 12; ++i) {
    for (int j = 0; j < 12; ++j) {
      if (j >= i) EXPECT_EQ(path(i, j), 0.0) << i << "," << j;
    }
  }
  // Every earlier input still reaches every later output through some unit.
  for (int i = 1; i < 12; ++i) EXPECT_GT(path(i, 0), 0.0);
}

TEST(Init, MaskedWeightsAreZeroAndSeedsReproduce) {
  const LatticeGeometry g(4);
  const auto a = init_model(g, 16, 3);
  const auto b = init_model(g, 16, 3);
  const auto c = init_model(g, 16, 4);
  EXPECT_EQ(a.w1, b.w1);
  EXPECT_EQ(a.w2, b.w2);
  EXPECT_NE(a.w1, c.w1);
  EXPECT_EQ(a.w1.cwiseProduct(Eigen::MatrixXd::Ones(16, 16) - a.mask1).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(a.w2.cwiseProduct(Eigen::MatrixXd::Ones(16, 16) - a.mask2).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(a.b1.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_LE(a.w1.cwiseAbs().maxCoeff(), 0.25);
  EXPECT_EQ(a.parameter_count(), 16u * 16 * 2 + 32);
}

TEST(Forward, ZeroWeightsGiveZeroOutput) {
  const LatticeGeometry g(3);
  const auto p = make_zero_model(9, 9);
  std::mt19937_64 rng(1);
  SpinBatch b(0, 9);
  for (int k = 0; k < 4; ++k) b.push_back(oracle::random_config(9, rng));
  EXPECT_EQ(forward(p, b).cwiseAbs().maxCoeff(), 0.0);
  const auto spec = make_ising_prior(g, 0.4, 0);
  for (double lq : log_prob(p, spec, b)) EXPECT_NEAR(lq, -9 * std::log(2.0), 1e-12);
}

TEST(Forward, MatchesLoopOracle) {
  const LatticeGeometry g(3);
  const auto p = random_model(g, 5, 2.0);
  std::mt19937_64 rng(2);
  SpinBatch b(0, 9);
  for (int k = 0; k < 20; ++k) b.push_back(oracle::random_config(9, rng));
  const auto h = forward(p, b);
  for (std::size_t k = 0; k < b.size(); ++k) {
    for (int i = 0; i < 9; ++i) {
      EXPECT_NEAR(h(i, static_cast<Eigen::Index>(k)), oracle::network_output(p, b[k], i), 1e-12);
    }
  }
}

TEST(Forward, OutputIgnoresCurrentAndLaterSpins) {
  const LatticeGeometry g(4);
  const auto p = random_model(g, 6, 3.0);
  std::mt19937_64 rng(3);
  for (int rep = 0; rep < 10; ++rep) {
    const auto s = oracle::random_config(16, rng);
    for (int i = 0; i < 16; ++i) {
      auto t = s;
      for (int k = i; k < 16; ++k) t[k] = static_cast<Spin>(rng() & 1U ? 1 : -1);
      EXPECT_EQ(oracle::network_output(p, t, i), oracle::network_output(p, s, i));
      SpinBatch pair(0, 16);
      pair.push_back(s);
      pair.push_back(t);
      const auto h = forward(p, pair);
      EXPECT_NEAR(h(i, 0), h(i, 1), 1e-12);
    }
  }
}

TEST(Forward, Deterministic) {
  const LatticeGeometry g(3);
  const auto p = random_model(g, 7);
  std::mt19937_64 rng(4);
  SpinBatch b(0, 9);
  for (int k = 0; k < 8; ++k) b.push_back(oracle::random_config(9, rng));
  EXPECT_EQ(forward(p, b), forward(p, b));
}

TEST(Forward, RejectsWrongInputSize) {
  const auto p = make_zero_model(9, 9);
  SpinBatch b(1, 16);
  EXPECT_THROW(forward(p, b), std::invalid_argument);
  EXPECT_THROW(make_zero_model(9, 0), std::invalid_argument);
}

// Sum over all 2^N states of q(s) for random weights and every prior.
TEST(Normalization, SumsToOneOverAllStates) {
  for (int l : {2, 3}) {
    const LatticeGeometry g(l);
    const int n = l * l;
    const auto states = all_states(n);
    const auto ea = make_couplings(CouplingKind::ea_binary, g, 11);
    for (std::uint64_t seed : {1, 2, 3}) {
      const auto p = random_model(g, seed, 3.0);
      for (int order = 0; order <= 4; ++order) {
        for (auto kind : {PriorKind::ising, PriorKind::ea}) {
          const auto spec = make_prior(kind, g, ea, 0.8, order);
          const auto lq = log_prob(p, spec, states);
          double total = 0.0;
          for (double v : lq) total += std::exp(v);
          EXPECT_NEAR(total, 1.0, 1e-10) << "L=" << l << " order " << order;
        }
      }
    }
  }
}

// 12 inputs is not a square lattice, so only the network part is checked.
TEST(Normalization, TwelveInputsNetworkOnly) {
  auto p = make_zero_model(12, 12);
  Rng rng(9);
  for (Eigen::Index j = 0; j < 12; ++j)
    for (Eigen::Index k = 0; k < 12; ++k) p.w1(k, j) = 2.0 * uniform01(rng) - 1.0;
  for (Eigen::Index k = 0; k < 12; ++k)
    for (Eigen::Index i = 0; i < 12; ++i) p.w2(i, k) = 2.0 * uniform01(rng) - 1.0;
  p.apply_masks();
  const auto states = all_states(12);
  const auto h = forward(p, states);
  const Eigen::MatrixXd spins = to_matrix(states);
  const auto lq = log_prob_from_logits(h, spins);
  double total = 0.0;
  for (double v : lq) total += std::exp(v);
  EXPECT_NEAR(total, 1.0, 1e-10);
}

TEST(Sigmoid, ValuesAndLogitRoundTrip) {
  EXPECT_NEAR(sigmoid(2.0), 0.880797, 1e-6);
  EXPECT_NEAR(sigmoid(0.0), 0.5, 1e-15);
  EXPECT_NEAR(sigmoid(-800.0), 0.0, 1e-300);
  EXPECT_EQ(sigmoid(800.0), 1.0);
  for (double x : {-30.0, -3.0, -0.1, 0.0, 0.7, 5.0, 30.0}) {
    if (std::abs(x) < 20) EXPECT_NEAR(logit(sigmoid(x)), x, 1e-9 * (1 + std::abs(x)));
    EXPECT_NEAR(log_sigmoid(x), oracle::log_sigmoid(x), 1e-14);
    EXPECT_NEAR(log_sigmoid(x) - log_sigmoid(-x), x, 1e-12);
  }
  EXPECT_NEAR(log_sigmoid(-1000.0), -1000.0, 1e-9);
}

TEST(Conditionals, AddPriorLogitToNetworkOutput) {
  const LatticeGeometry g(3);
  const auto p = random_model(g, 12);
  const auto spec = make_ising_prior(g, 0.5, 2);
  std::mt19937_64 rng(5);
  SpinBatch b(0, 9);
  for (int k = 0; k < 5; ++k) b.push_back(oracle::random_config(9, rng));
  const auto q = conditional_probs(forward(p, b), prior_logits_batched(spec, b));
  for (std::size_t k = 0; k < b.size(); ++k) {
    for (int i = 0; i < 9; ++i) {
      const double z = oracle::network_output(p, b[k], i) + prior_logit_site(spec, b[k], i);
      EXPECT_NEAR(q(i, static_cast<Eigen::Index>(k)), 1.0 / (1.0 + std::exp(-z)), 1e-12);
    }
  }
  EXPECT_THROW(conditional_probs(Eigen::MatrixXd::Zero(9, 2), Eigen::MatrixXd::Zero(9, 3)),
               std::invalid_argument);
}

TEST(LogProb, MatchesSiteBySiteOracle) {
  const LatticeGeometry g(4);
  const auto p = random_model(g, 13, 1.5);
  const auto ea = make_couplings(CouplingKind::ea_binary, g, 2);
  const auto spec = precompute_ea_factors(g, ea, 0.6, 3);
  std::mt19937_64 rng(6);
  SpinBatch b(0, 16);
  for (int k = 0; k < 30; ++k) b.push_back(oracle::random_config(16, rng));
  const auto lq = log_prob(p, spec, b);
  for (std::size_t k = 0; k < b.size(); ++k) {
    const double want = oracle::log_q(&p, b[k], [&](std::span<const Spin> s, int i) {
      return oracle::prior_logit(ea, 4, 0.6, 3, s, i);
    });
    EXPECT_NEAR(lq[k], want, 1e-11);
  }
}

}  // namespace
}  // namespace spinvan
