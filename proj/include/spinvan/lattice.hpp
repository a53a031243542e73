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

#ifndef SPINVAN_LATTICE_HPP
#define SPINVAN_LATTICE_HPP

#include <cstddef>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "spinvan/rng.hpp"

namespace spinvan {

using Spin = std::int8_t;
using SpinConfiguration = std::vector<Spin>;

/// L x L square lattice, row-major site numbering, periodic in both
/// directions. Site i sits at row i / L and column i % L.
class LatticeGeometry {
 public:
  explicit LatticeGeometry(int side_length) : side_(side_length) {
    if (side_length < 2) {
      throw std::invalid_argument("lattice side length must be at least 2, got " +
                                  std::to_string(side_length));
    }
  }

  int side_length() const { return side_; }
  int site_count() const { return side_ * side_; }

  int row(int i) const { return i / side_; }
  int col(int i) const { return i % side_; }
  /// Periodic: out-of-range rows and columns wrap around.
  int site(int r, int c) const { return wrap(r) * side_ + wrap(c); }

  int right(int i) const { return site(row(i), col(i) + 1); }
  int left(int i) const { return site(row(i), col(i) - 1); }
  int down(int i) const { return site(row(i) + 1, col(i)); }
  int up(int i) const { return site(row(i) - 1, col(i)); }

  friend bool operator==(const LatticeGeometry&, const LatticeGeometry&) = default;

 private:
  int wrap(int x) const { return ((x % side_) + side_) % side_; }

  int side_;
};

/// Contiguous batch of configurations, one row of `sites()` spins per sample.
class SpinBatch {
 public:
  SpinBatch() = default;
  SpinBatch(std::size_t count, std::size_t sites)
      : count_(count), sites_(sites), data_(count * sites, Spin{1}) {}

  std::size_t size() const { return count_; }
  std::size_t sites() const { return sites_; }
  bool empty() const { return count_ == 0; }

  std::span<Spin> operator[](std::size_t b) {
    return {data_.data() + b * sites_, sites_};
  }
  std::span<const Spin> operator[](std::size_t b) const {
    return {data_.data() + b * sites_, sites_};
  }

  void push_back(std::span<const Spin> config) {
    if (count_ == 0 && sites_ == 0) {
      sites_ = config.size();
    }
    if (config.size() != sites_) {
      throw std::invalid_argument("configuration length does not match batch");
    }
    data_.insert(data_.end(), config.begin(), config.end());
    ++count_;
  }

  std::span<const Spin> data() const { return data_; }

 private:
  std::size_t count_ = 0;
  std::size_t sites_ = 0;
  std::vector<Spin> data_;
};

enum class CouplingKind { ferromagnetic, ea_binary };

inline std::string to_string(CouplingKind kind) {
  return kind == CouplingKind::ferromagnetic ? "ferromagnetic" : "ea-binary";
}

inline CouplingKind parse_coupling_kind(const std::string& s) {
  if (s == "ferromagnetic") return CouplingKind::ferromagnetic;
  if (s == "ea-binary") return CouplingKind::ea_binary;
  throw std::invalid_argument("unknown coupling kind '" + s + "'");
}

/// Link variables J. `horizontal[i]` couples site i to its right periodic
/// neighbour, `vertical[i]` couples site i to its down periodic neighbour,
/// so every one of the 2N bonds is stored exactly once.
struct CouplingField {
  std::vector<double> horizontal;
  std::vector<double> vertical;
  CouplingKind kind = CouplingKind::ferromagnetic;
  std::uint64_t seed = 0;

  bool all_ferromagnetic() const {
    for (double j : horizontal) if (j != 1.0) return false;
    for (double j : vertical) if (j != 1.0) return false;
    return true;
  }

  friend bool operator==(const CouplingField&, const CouplingField&) = default;
};

namespace detail {

inline void check_sizes(std::size_t config_size, const CouplingField& couplings,
                        const LatticeGeometry& geometry) {
  const auto n = static_cast<std::size_t>(geometry.site_count());
  if (config_size != n || couplings.horizontal.size() != n ||
      couplings.vertical.size() != n) {
    throw std::invalid_argument("configuration/couplings do not match an " +
                                std::to_string(geometry.side_length()) + "x" +
                                std::to_string(geometry.side_length()) + " lattice");
  }
}

}  // namespace detail

/// E(s) = -sum over the 2N periodic bonds of J s_i s_j.
inline double energy(std::span<const Spin> config, const CouplingField& couplings,
                     const LatticeGeometry& geometry) {
  detail::check_sizes(config.size(), couplings, geometry);
  const int l = geometry.side_length();
  const Spin* s = config.data();
  const double* jh = couplings.horizontal.data();
  const double* jv = couplings.vertical.data();
  double e = 0.0;
  for (int r = 0; r < l; ++r) {
    const Spin* row = s + r * l;
    const Spin* below = s + (r + 1 == l ? 0 : (r + 1) * l);
    const double* h = jh + r * l;
    const double* v = jv + r * l;
    for (int c = 0; c + 1 < l; ++c) e -= row[c] * (h[c] * row[c + 1] + v[c] * below[c]);
    e -= row[l - 1] * (h[l - 1] * row[0] + v[l - 1] * below[l - 1]);
  }
  return e;
}

/// Unnormalised magnetisation M = sum_i s_i.
inline double magnetization(std::span<const Spin> config) {
  long m = 0;
  for (Spin s : config) m += s;
  return static_cast<double>(m);
}

inline CouplingField make_couplings(CouplingKind kind, const LatticeGeometry& geometry,
                                    std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(geometry.site_count());
  CouplingField field{std::vector<double>(n, 1.0), std::vector<double>(n, 1.0), kind, seed};
  if (kind == CouplingKind::ea_binary) {
    Rng rng(seed);
    for (auto* bonds : {&field.horizontal, &field.vertical}) {
      for (double& j : *bonds) j = (rng() >> 63) ? 1.0 : -1.0;
    }
  }
  return field;
}

inline SpinConfiguration flip_all(std::span<const Spin> config) {
  SpinConfiguration out(config.begin(), config.end());
  for (Spin& s : out) s = static_cast<Spin>(-s);
  return out;
}

inline bool is_valid_configuration(std::span<const Spin> config, const LatticeGeometry& geometry) {
  if (config.size() != static_cast<std::size_t>(geometry.site_count())) return false;
  for (Spin s : config) {
    if (s != 1 && s != -1) return false;
  }
  return true;
}

// Text formats ---------------------------------------------------------------

/// Header `L <L> kind <kind> seed <seed>`, then the N horizontal bonds in
/// row-major order followed by the N vertical bonds, as integers.
inline void write_couplings(std::ostream& os, const LatticeGeometry& geometry,
                            const CouplingField& couplings) {
  detail::check_sizes(static_cast<std::size_t>(geometry.site_count()), couplings, geometry);
  os << "L " << geometry.side_length() << " kind " << to_string(couplings.kind) << " seed "
     << couplings.seed << '\n';
  const int l = geometry.side_length();
  for (const auto* bonds : {&couplings.horizontal, &couplings.vertical}) {
    for (int r = 0; r < l; ++r) {
      for (int c = 0; c < l; ++c) {
        os << static_cast<long>((*bonds)[r * l + c]) << (c + 1 < l ? ' ' : '\n');
      }
    }
  }
}

struct CouplingFile {
  LatticeGeometry geometry;
  CouplingField couplings;
};

inline CouplingFile read_couplings(std::istream& is) {
  std::string tag_l, tag_kind, tag_seed, kind;
  int l = 0;
  std::uint64_t seed = 0;
  if (!(is >> tag_l >> l >> tag_kind >> kind >> tag_seed >> seed) || tag_l != "L" ||
      tag_kind != "kind" || tag_seed != "seed") {
    throw std::runtime_error("coupling file: expected header 'L <L> kind <kind> seed <seed>'");
  }
  LatticeGeometry geometry(l);
  CouplingField field;
  field.kind = parse_coupling_kind(kind);
  field.seed = seed;
  const auto n = static_cast<std::size_t>(geometry.site_count());
  for (auto* bonds : {&field.horizontal, &field.vertical}) {
    bonds->reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      long j = 0;
      if (!(is >> j)) {
        throw std::runtime_error("coupling file: expected " + std::to_string(2 * n) +
                                 " bond values");
      }
      bonds->push_back(static_cast<double>(j));
    }
  }
  return {geometry, std::move(field)};
}

/// One configuration per line, N space-separated +-1 integers.
inline void write_configuration(std::ostream& os, std::span<const Spin> config) {
  for (std::size_t i = 0; i < config.size(); ++i) {
    os << (config[i] > 0 ? "1" : "-1") << (i + 1 < config.size() ? ' ' : '\n');
  }
}

inline SpinBatch read_configurations(std::istream& is, const LatticeGeometry& geometry) {
  const auto n = static_cast<std::size_t>(geometry.site_count());
  SpinBatch batch(0, n);
  std::string line;
  SpinConfiguration config;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    config.clear();
    int s = 0;
    while (ls >> s) {
      if (s != 1 && s != -1) {
        throw std::runtime_error("configuration file line " + std::to_string(line_no) +
                                 ": spin values must be +1 or -1");
      }
      config.push_back(static_cast<Spin>(s));
    }
    if (config.size() != n) {
      throw std::runtime_error("configuration file line " + std::to_string(line_no) + ": expected " +
                               std::to_string(n) + " spins, found " +
                               std::to_string(config.size()));
    }
    batch.push_back(config);
  }
  return batch;
}

}  // namespace spinvan

#endif  // SPINVAN_LATTICE_HPP
