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

#ifndef SPINVAN_TOOLS_RUN_CONFIG_HPP
#define SPINVAN_TOOLS_RUN_CONFIG_HPP

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "spinvan/checkpoint.hpp"
#include "spinvan/lattice.hpp"
#include "spinvan/priors.hpp"
#include "spinvan/trainer.hpp"

namespace spinvan::cli {

/// Configuration error carrying the offending line (0 when not from a file)
/// and field name.
struct ConfigError : std::runtime_error {
  ConfigError(const std::string& source, int line, const std::string& field, const std::string& msg)
      : std::runtime_error(source + (line > 0 ? ":" + std::to_string(line) : std::string()) +
                           (field.empty() ? std::string() : ": field '" + field + "'") + ": " +
                           msg),
        line(line),
        field(field) {}
  int line;
  std::string field;
};

/// Every setting a run may use. Unset optional paths are empty.
struct RunConfig {
  std::string name = "run";
  int side_length = 8;
  std::string model = "ising";  // ising | ea
  std::uint64_t coupling_seed = 1;
  std::string coupling_file;
  double beta = 0.44;
  int prior_order = 0;
  int hidden = 0;  // 0 means N
  std::size_t batch_size = 4096;
  int era_length = 100;
  int era_count = 1;
  double learning_rate = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 1;
  std::size_t samples = std::size_t{1} << 20;
  int bootstrap = 1000;
  int threads = 1;
  std::string out;
  std::string mc_algo = "auto";  // auto | wolff | metropolis | pt
  std::size_t mc_samples = 100000;
  long mc_burn_in = 10000;
  long mc_thin = 10;
  int pt_count = 16;
  double pt_beta_min = 0.1;
  long pt_swap_interval = 1;

  /// Directory of the config file; relative paths inside it resolve here.
  std::filesystem::path base_dir;

  PriorKind prior_kind() const { return model == "ea" ? PriorKind::ea : PriorKind::ising; }
  CouplingKind coupling_kind() const {
    return model == "ea" ? CouplingKind::ea_binary : CouplingKind::ferromagnetic;
  }
  std::filesystem::path resolve(const std::string& p) const {
    const std::filesystem::path path(p);
    return path.is_absolute() || base_dir.empty() ? path : base_dir / path;
  }
  std::filesystem::path out_dir() const { return resolve(out.empty() ? "runs/" + name : out); }

  TrainConfig train_config() const {
    TrainConfig t;
    t.beta = beta;
    t.batch_size = batch_size;
    t.era_length = era_length;
    t.era_count = era_count;
    t.learning_rate = learning_rate;
    t.adam_beta1 = adam_beta1;
    t.adam_beta2 = adam_beta2;
    t.adam_eps = adam_eps;
    t.seed = seed;
    t.prior_kind = prior_kind();
    t.prior_order = prior_order;
    t.side_length = side_length;
    t.hidden = hidden;
    t.threads = threads;
    return t;
  }
};

namespace detail {

template <class T>
T parse_number(const std::string& s) {
  T value{};
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, value);
  if (ec != std::errc() || ptr != end) throw std::invalid_argument("'" + s + "' is not a valid number");
  return value;
}

inline std::string format(double x) { return spinvan::detail::format_double(x); }

struct Field {
  const char* key;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

inline void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

inline const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      {"name", [](RunConfig& c, const std::string& v) {
         require(!v.empty() && v.find_first_of(" \t/") == std::string::npos,
                       "must be a non-empty word without '/'");
         c.name = v;
       },
       [](const RunConfig& c) { return c.name; }},
      {"L", [](RunConfig& c, const std::string& v) {
         c.side_length = parse_number<int>(v);
         require(c.side_length >= 2, "must be at least 2");
       },
       [](const RunConfig& c) { return std::to_string(c.side_length); }},
      {"model", [](RunConfig& c, const std::string& v) {
         require(v == "ising" || v == "ea", "must be 'ising' or 'ea'");
         c.model = v;
       },
       [](const RunConfig& c) { return c.model; }},
      {"coupling_seed", [](RunConfig& c, const std::string& v) { c.coupling_seed = parse_number<std::uint64_t>(v); },
       [](const RunConfig& c) { return std::to_string(c.coupling_seed); }},
      {"coupling_file", [](RunConfig& c, const std::string& v) { c.coupling_file = v; },
       [](const RunConfig& c) { return c.coupling_file; }},
      {"beta", [](RunConfig& c, const std::string& v) {
         c.beta = parse_number<double>(v);
         require(c.beta > 0.0 && std::isfinite(c.beta), "must be a finite positive number");
       },
       [](const RunConfig& c) { return format(c.beta); }},
      {"prior_order", [](RunConfig& c, const std::string& v) {
         c.prior_order = parse_number<int>(v);
         require(c.prior_order >= 0 && c.prior_order <= 4, "must be between 0 and 4");
       },
       [](const RunConfig& c) { return std::to_string(c.prior_order); }},
      {"hidden", [](RunConfig& c, const std::string& v) {
         c.hidden = parse_number<int>(v);
         require(c.hidden >= 0, "must be non-negative (0 selects N)");
       },
       [](const RunConfig& c) { return std::to_string(c.hidden); }},
      {"batch_size", [](RunConfig& c, const std::string& v) {
         c.batch_size = parse_number<std::size_t>(v);
         require(c.batch_size >= 2, "must be at least 2");
       },
       [](const RunConfig& c) { return std::to_string(c.batch_size); }},
      {"era_length", [](RunConfig& c, const std::string& v) {
         c.era_length = parse_number<int>(v);
         require(c.era_length >= 1, "must be at least 1");
       },
       [](const RunConfig& c) { return std::to_string(c.era_length); }},
      {"era_count", [](RunConfig& c, const std::string& v) {
         c.era_count = parse_number<int>(v);
         require(c.era_count >= 0, "must be non-negative");
       },
       [](const RunConfig& c) { return std::to_string(c.era_count); }},
      {"learning_rate", [](RunConfig& c, const std::string& v) {
         c.learning_rate = parse_number<double>(v);
         require(c.learning_rate > 0.0, "must be positive");
       },
       [](const RunConfig& c) { return format(c.learning_rate); }},
      {"adam_beta1", [](RunConfig& c, const std::string& v) {
         c.adam_beta1 = parse_number<double>(v);
         require(c.adam_beta1 >= 0.0 && c.adam_beta1 < 1.0, "must lie in [0, 1)");
       },
       [](const RunConfig& c) { return format(c.adam_beta1); }},
      {"adam_beta2", [](RunConfig& c, const std::string& v) {
         c.adam_beta2 = parse_number<double>(v);
         require(c.adam_beta2 >= 0.0 && c.adam_beta2 < 1.0, "must lie in [0, 1)");
       },
       [](const RunConfig& c) { return format(c.adam_beta2); }},
      {"adam_eps", [](RunConfig& c, const std::string& v) {
         c.adam_eps = parse_number<double>(v);
         require(c.adam_eps > 0.0, "must be positive");
       },
       [](const RunConfig& c) { return format(c.adam_eps); }},
      {"seed", [](RunConfig& c, const std::string& v) { c.seed = parse_number<std::uint64_t>(v); },
       [](const RunConfig& c) { return std::to_string(c.seed); }},
      {"samples", [](RunConfig& c, const std::string& v) {
         c.samples = parse_number<std::size_t>(v);
         require(c.samples >= 2, "must be at least 2");
       },
       [](const RunConfig& c) { return std::to_string(c.samples); }},
      {"bootstrap", [](RunConfig& c, const std::string& v) {
         c.bootstrap = parse_number<int>(v);
         require(c.bootstrap >= 100, "must be at least 100");
       },
       [](const RunConfig& c) { return std::to_string(c.bootstrap); }},
      {"threads", [](RunConfig& c, const std::string& v) {
         c.threads = parse_number<int>(v);
         require(c.threads >= 1, "must be at least 1");
       },
       [](const RunConfig& c) { return std::to_string(c.threads); }},
      {"out", [](RunConfig& c, const std::string& v) { c.out = v; },
       [](const RunConfig& c) { return c.out; }},
      {"mc_algo", [](RunConfig& c, const std::string& v) {
         require(v == "auto" || v == "wolff" || v == "metropolis" || v == "pt",
                       "must be one of auto, wolff, metropolis, pt");
         c.mc_algo = v;
       },
       [](const RunConfig& c) { return c.mc_algo; }},
      {"mc_samples", [](RunConfig& c, const std::string& v) {
         c.mc_samples = parse_number<std::size_t>(v);
         require(c.mc_samples >= 1, "must be at least 1");
       },
       [](const RunConfig& c) { return std::to_string(c.mc_samples); }},
      {"mc_burn_in", [](RunConfig& c, const std::string& v) {
         c.mc_burn_in = parse_number<long>(v);
         require(c.mc_burn_in >= 0, "must be non-negative");
       },
       [](const RunConfig& c) { return std::to_string(c.mc_burn_in); }},
      {"mc_thin", [](RunConfig& c, const std::string& v) {
         c.mc_thin = parse_number<long>(v);
         require(c.mc_thin >= 1, "must be at least 1");
       },
       [](const RunConfig& c) { return std::to_string(c.mc_thin); }},
      {"pt_count", [](RunConfig& c, const std::string& v) {
         c.pt_count = parse_number<int>(v);
         require(c.pt_count >= 1, "must be at least 1");
       },
       [](const RunConfig& c) { return std::to_string(c.pt_count); }},
      {"pt_beta_min", [](RunConfig& c, const std::string& v) {
         c.pt_beta_min = parse_number<double>(v);
         require(c.pt_beta_min > 0.0, "must be positive");
       },
       [](const RunConfig& c) { return format(c.pt_beta_min); }},
      {"pt_swap_interval", [](RunConfig& c, const std::string& v) {
         c.pt_swap_interval = parse_number<long>(v);
         require(c.pt_swap_interval >= 1, "must be at least 1");
       },
       [](const RunConfig& c) { return std::to_string(c.pt_swap_interval); }},
  };
  return table;
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace detail

/// Names of all recognised keys, in schema order.
inline std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& f : detail::fields()) keys.emplace_back(f.key);
  return keys;
}

/// Sets one field from its textual value. Throws ConfigError for unknown
/// keys and invalid values.
inline void set_field(RunConfig& cfg, const std::string& key, const std::string& value,
                      const std::string& source = "command line", int line = 0) {
  for (const auto& f : detail::fields()) {
    if (key != f.key) continue;
    try {
      f.set(cfg, value);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(source, line, key, e.what());
    } catch (const std::out_of_range&) {
      throw ConfigError(source, line, key, "value out of range");
    }
    return;
  }
  throw ConfigError(source, line, key, "unknown key");
}

/// `key = value` lines; `#` starts a comment; blank lines are ignored.
/// Unknown or repeated keys are errors.
inline RunConfig parse_config(std::istream& is, const std::string& source = "config") {
  RunConfig cfg;
  std::set<std::string> seen;
  std::string raw;
  int line_no = 0;
  while (std::getline(is, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = detail::trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(source, line_no, "", "expected 'key = value', got '" + line + "'");
    }
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(source, line_no, "", "missing key before '='");
    if (!seen.insert(key).second) throw ConfigError(source, line_no, key, "given more than once");
    set_field(cfg, key, value, source, line_no);
  }
  return cfg;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open config file '" + path.string() + "'");
  auto cfg = parse_config(is, path.string());
  cfg.base_dir = path.parent_path();
  return cfg;
}

/// Every key with its resolved value, in schema order. Empty optional
/// fields are written as comments so the file parses back identically.
inline void write_config(std::ostream& os, const RunConfig& cfg) {
  for (const auto& f : detail::fields()) {
    const std::string v = f.get(cfg);
    if (v.empty()) {
      os << "# " << f.key << " =\n";
    } else {
      os << f.key << " = " << v << '\n';
    }
  }
}

}  // namespace spinvan::cli

#endif  // SPINVAN_TOOLS_RUN_CONFIG_HPP
