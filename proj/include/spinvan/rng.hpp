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

#ifndef SPINVAN_RNG_HPP
#define SPINVAN_RNG_HPP

#include <cstdint>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace spinvan {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Sub-seed derivation used everywhere a stream is split off a master seed.
///
/// The namespace string is hashed with 64-bit FNV-1a and mixed with the
/// master seed and the stream index through splitmix64:
///
///   derive_seed(m, ns, k) = splitmix64(m ^ splitmix64(fnv1a(ns) ^ splitmix64(k)))
///
/// Namespaces in use: "train", "sample", "mc", "bootstrap", "init",
/// "chunk" (per-chunk sampler streams), "replica" (tempering replicas).
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view ns,
                                 std::uint64_t index = 0) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : ns) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return splitmix64(master ^ splitmix64(h ^ splitmix64(index)));
}

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline std::string rng_state(const Rng& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

inline void restore_rng_state(Rng& rng, const std::string& state) {
  std::istringstream is(state);
  is >> rng;
  if (is.fail()) {
    throw std::invalid_argument("malformed rng state string");
  }
}

}  // namespace spinvan

#endif  // SPINVAN_RNG_HPP
