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

#ifndef SPINVAN_CHECKPOINT_HPP
#define SPINVAN_CHECKPOINT_HPP

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "spinvan/arnet.hpp"
#include "spinvan/lattice.hpp"
#include "spinvan/priors.hpp"

/**
 * \file
 * Self-describing text tensor container.
 *
 *     spinvan-ckpt v1
 *     meta <key> <value...>
 *     ...
 *     tensor <name> <dim0> [<dim1>]
 *     <values, row-major, whitespace separated>
 *     ...
 *     end
 *
 * Values are written with 17 significant digits so a write/read cycle is
 * lossless.
 */

namespace spinvan {

inline constexpr const char* kCheckpointMagic = "spinvan-ckpt v1";

struct Tensor {
  std::vector<long> dims;
  std::vector<double> values;
};

/// Raw content of a container: ordered metadata and named tensors.
struct TensorFile {
  std::vector<std::pair<std::string, std::string>> meta;
  std::vector<std::pair<std::string, Tensor>> tensors;

  const std::string* find_meta(const std::string& key) const {
    for (const auto& [k, v] : meta) {
      if (k == key) return &v;
    }
    return nullptr;
  }
  const std::string& require_meta(const std::string& key) const {
    if (const auto* v = find_meta(key)) return *v;
    throw std::runtime_error("checkpoint: missing meta field '" + key + "'");
  }
  const Tensor* find_tensor(const std::string& name) const {
    for (const auto& [k, t] : tensors) {
      if (k == name) return &t;
    }
    return nullptr;
  }
  const Tensor& require_tensor(const std::string& name) const {
    if (const auto* t = find_tensor(name)) return *t;
    throw std::runtime_error("checkpoint: missing tensor '" + name + "'");
  }
};

inline void write_tensor_file(std::ostream& os, const TensorFile& file) {
  os << kCheckpointMagic << '\n';
  for (const auto& [k, v] : file.meta) os << "meta " << k << ' ' << v << '\n';
  char buf[32];
  for (const auto& [name, t] : file.tensors) {
    os << "tensor " << name;
    for (long d : t.dims) os << ' ' << d;
    os << '\n';
    for (std::size_t k = 0; k < t.values.size(); ++k) {
      std::snprintf(buf, sizeof buf, "%.17g", t.values[k]);
      os << buf << (k + 1 < t.values.size() ? ' ' : '\n');
    }
    if (t.values.empty()) os << '\n';
  }
  os << "end\n";
}

inline TensorFile read_tensor_file(std::istream& is) {
  std::string line;
  std::getline(is, line);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kCheckpointMagic) {
    throw std::runtime_error(std::string("not a checkpoint: expected header '") +
                             kCheckpointMagic + "'");
  }
  TensorFile file;
  bool ended = false;
  while (std::getline(is, line)) {
    std::istringstream ls(line);
    std::string kind;
    if (!(ls >> kind)) continue;
    if (kind == "end") {
      ended = true;
      break;
    }
    if (kind == "meta") {
      std::string key, value;
      ls >> key;
      std::getline(ls >> std::ws, value);
      if (key.empty()) throw std::runtime_error("checkpoint: meta line without a key");
      file.meta.emplace_back(key, value);
    } else if (kind == "tensor") {
      std::string name;
      ls >> name;
      Tensor t;
      long d = 0;
      std::size_t count = 1;
      while (ls >> d) {
        if (d < 0) throw std::runtime_error("checkpoint: negative dimension in '" + name + "'");
        t.dims.push_back(d);
        count *= static_cast<std::size_t>(d);
      }
      if (name.empty() || t.dims.empty()) {
        throw std::runtime_error("checkpoint: malformed tensor record '" + line + "'");
      }
      t.values.resize(count);
      for (auto& v : t.values) {
        if (!(is >> v)) throw std::runtime_error("checkpoint: truncated data for tensor '" + name + "'");
      }
      std::getline(is, line);  // rest of the data line
      file.tensors.emplace_back(name, std::move(t));
    } else {
      throw std::runtime_error("checkpoint: unexpected record '" + kind + "'");
    }
  }
  if (!ended) throw std::runtime_error("checkpoint: missing 'end' record (truncated file?)");
  return file;
}

/// A trained or prior-only model together with everything needed to rebuild
/// its prior: lattice, couplings, prior kind/order and beta.
struct Checkpoint {
  LatticeGeometry geometry{2};
  CouplingField couplings;
  PriorKind prior_kind = PriorKind::ising;
  int prior_order = 0;
  double beta = 0.0;
  std::optional<ModelParameters> network;  // absent for prior-only models
  std::string rng_state;                   // optional, empty if not recorded
  int era = 0;

  PriorSpec prior() const { return make_prior(prior_kind, geometry, couplings, beta, prior_order); }
};

namespace detail {

inline std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline Tensor matrix_tensor(const Eigen::MatrixXd& m) {
  Tensor t{{static_cast<long>(m.rows()), static_cast<long>(m.cols())}, {}};
  t.values.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) t.values.push_back(m(r, c));
  return t;
}

inline Tensor vector_tensor(const std::vector<double>& v) {
  return {{static_cast<long>(v.size())}, v};
}

inline Eigen::MatrixXd tensor_matrix(const Tensor& t, long rows, long cols, const std::string& name) {
  if (t.dims.size() != 2 || t.dims[0] != rows || t.dims[1] != cols) {
    throw std::runtime_error("checkpoint: tensor '" + name + "' has the wrong shape");
  }
  Eigen::MatrixXd m(rows, cols);
  for (long r = 0; r < rows; ++r)
    for (long c = 0; c < cols; ++c) m(r, c) = t.values[static_cast<std::size_t>(r * cols + c)];
  return m;
}

inline std::vector<double> tensor_vector(const Tensor& t, long size, const std::string& name) {
  if (t.dims.size() != 1 || t.dims[0] != size) {
    throw std::runtime_error("checkpoint: tensor '" + name + "' has the wrong shape");
  }
  return t.values;
}

template <class T>
T parse_meta(const TensorFile& f, const std::string& key) {
  std::istringstream is(f.require_meta(key));
  T value{};
  if (!(is >> value)) throw std::runtime_error("checkpoint: bad value for meta field '" + key + "'");
  return value;
}

}  // namespace detail

inline void write_checkpoint(std::ostream& os, const Checkpoint& ckpt) {
  const long n = ckpt.geometry.site_count();
  TensorFile f;
  f.meta = {{"L", std::to_string(ckpt.geometry.side_length())},
            {"coupling_kind", to_string(ckpt.couplings.kind)},
            {"coupling_seed", std::to_string(ckpt.couplings.seed)},
            {"prior_kind", to_string(ckpt.prior_kind)},
            {"prior_order", std::to_string(ckpt.prior_order)},
            {"beta", detail::format_double(ckpt.beta)},
            {"era", std::to_string(ckpt.era)},
            {"hidden", std::to_string(ckpt.network ? ckpt.network->hidden : 0)}};
  if (ckpt.network) f.meta.emplace_back("leaky_slope", detail::format_double(ckpt.network->leaky_slope));
  if (!ckpt.rng_state.empty()) f.meta.emplace_back("rng", ckpt.rng_state);

  f.tensors.emplace_back("couplings_h", detail::vector_tensor(ckpt.couplings.horizontal));
  f.tensors.emplace_back("couplings_v", detail::vector_tensor(ckpt.couplings.vertical));
  if (ckpt.network) {
    const auto& p = *ckpt.network;
    if (p.inputs != n) throw std::invalid_argument("network does not match the checkpoint lattice");
    f.tensors.emplace_back("w1", detail::matrix_tensor(p.w1));
    f.tensors.emplace_back("b1", detail::matrix_tensor(p.b1));
    f.tensors.emplace_back("w2", detail::matrix_tensor(p.w2));
    f.tensors.emplace_back("b2", detail::matrix_tensor(p.b2));
  }
  write_tensor_file(os, f);
}

inline Checkpoint read_checkpoint(std::istream& is) {
  const TensorFile f = read_tensor_file(is);
  Checkpoint ckpt;
  ckpt.geometry = LatticeGeometry(detail::parse_meta<int>(f, "L"));
  const long n = ckpt.geometry.site_count();
  ckpt.couplings.kind = parse_coupling_kind(f.require_meta("coupling_kind"));
  ckpt.couplings.seed = detail::parse_meta<std::uint64_t>(f, "coupling_seed");
  ckpt.couplings.horizontal = detail::tensor_vector(f.require_tensor("couplings_h"), n, "couplings_h");
  ckpt.couplings.vertical = detail::tensor_vector(f.require_tensor("couplings_v"), n, "couplings_v");
  ckpt.prior_kind = parse_prior_kind(f.require_meta("prior_kind"));
  ckpt.prior_order = detail::parse_meta<int>(f, "prior_order");
  detail::check_order(ckpt.prior_order, 0);
  ckpt.beta = detail::parse_meta<double>(f, "beta");
  if (f.find_meta("era")) ckpt.era = detail::parse_meta<int>(f, "era");
  if (const auto* rng = f.find_meta("rng")) ckpt.rng_state = *rng;

  const int hidden = detail::parse_meta<int>(f, "hidden");
  if (hidden > 0) {
    const double slope = detail::parse_meta<double>(f, "leaky_slope");
    auto p = make_zero_model(static_cast<int>(n), hidden, slope);
    p.w1 = detail::tensor_matrix(f.require_tensor("w1"), hidden, n, "w1");
    p.b1 = detail::tensor_matrix(f.require_tensor("b1"), hidden, 1, "b1");
    p.w2 = detail::tensor_matrix(f.require_tensor("w2"), n, hidden, "w2");
    p.b2 = detail::tensor_matrix(f.require_tensor("b2"), n, 1, "b2");
    const Eigen::MatrixXd w1 = p.w1, w2 = p.w2;
    p.apply_masks();
    if (w1 != p.w1 || w2 != p.w2) {
      throw std::runtime_error("checkpoint: masked weights are non-zero");
    }
    ckpt.network = std::move(p);
  }
  return ckpt;
}

/// Writes through a temporary file in the same directory and renames it
/// over `path`, so readers never observe a partial file.
inline void write_atomically(const std::filesystem::path& path,
                             const std::function<void(std::ostream&)>& writer) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open '" + tmp.string() + "' for writing");
    writer(os);
    os.flush();
    if (!os) throw std::runtime_error("write to '" + tmp.string() + "' failed");
  }
  std::filesystem::rename(tmp, path);
}

inline void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  write_atomically(path, [&](std::ostream& os) { write_checkpoint(os, ckpt); });
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open checkpoint '" + path.string() + "'");
  try {
    return read_checkpoint(is);
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

/// Per-site prior coefficients, one L x L tensor per source offset, named
/// `factor_<row offset>_<col offset>`. Padding sites carry 0.
inline void write_factor_tables(std::ostream& os, const PriorSpec& spec) {
  const auto& g = spec.geometry();
  const long l = g.side_length();
  TensorFile f;
  f.meta = {{"L", std::to_string(l)},
            {"prior_kind", to_string(spec.kind())},
            {"prior_order", std::to_string(spec.order())},
            {"beta", detail::format_double(spec.beta())}};
  for (const auto& term : spec.terms()) {
    Tensor t{{l, l}, std::vector<double>(static_cast<std::size_t>(l * l), 0.0)};
    for (int i = 0; i < g.site_count(); ++i) {
      if (!detail::is_padding(g, i, term.row_offset, term.col_offset)) t.values[i] = spec.factor(term, i);
    }
    f.tensors.emplace_back(
        "factor_" + std::to_string(term.row_offset) + "_" + std::to_string(term.col_offset),
        std::move(t));
  }
  write_tensor_file(os, f);
}

}  // namespace spinvan

#endif  // SPINVAN_CHECKPOINT_HPP
