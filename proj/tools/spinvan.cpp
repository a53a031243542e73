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

// spinvan command-line front end.
//
//   spinvan train       --config run.cfg
//   spinvan sample      --checkpoint ckpt-era-3 --samples 4096
//   spinvan estimate    --checkpoint ckpt-era-3 [--mc-samples mc_samples.txt]
//   spinvan prior-eval  --order 1 --beta 0.40 --L 32 --samples 1048576
//   spinvan mc          --algo wolff --L 32 --beta 0.40
//   spinvan exact       --L 4 --beta 0.44069
//
// Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error,
// 3 training diverged.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "run_config.hpp"
#include "spinvan/spinvan.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace spinvan::cli {
namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Command-line values keyed by config field; applied on top of the file.
struct Overrides {
  std::optional<std::string> config_path;
  std::map<std::string, std::string> values;

  void add(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
    app->add_option_function<std::string>(
        flag, [this, key](const std::string& v) { values[key] = v; }, help);
  }
};

RunConfig resolve_config(const Overrides& ov) {
  RunConfig cfg = ov.config_path ? load_config(*ov.config_path) : RunConfig{};
  for (const auto& [key, value] : ov.values) {
    if (key == "out" || key == "coupling_file") {
      set_field(cfg, key, fs::absolute(value).string());
    } else {
      set_field(cfg, key, value);
    }
  }
  return cfg;
}

fs::path output_dir(const RunConfig& cfg, const Overrides& ov, const fs::path& fallback) {
  if (ov.values.count("out") || !cfg.out.empty()) return cfg.out_dir();
  return fallback;
}

CouplingField couplings_for(const RunConfig& cfg, const LatticeGeometry& geometry) {
  if (cfg.coupling_file.empty()) return make_couplings(cfg.coupling_kind(), geometry, cfg.coupling_seed);
  const fs::path path = cfg.resolve(cfg.coupling_file);
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open coupling file '" + path.string() + "'");
  auto file = read_couplings(is);
  if (!(file.geometry == geometry)) {
    throw UsageError("coupling file '" + path.string() + "' is for L=" +
                     std::to_string(file.geometry.side_length()) + ", config has L=" +
                     std::to_string(geometry.side_length()));
  }
  return std::move(file.couplings);
}

json estimate_json(const Estimate& e) { return json{{"value", e.value}, {"error", e.error}}; }

void write_json_file(const fs::path& path, const json& doc) {
  write_atomically(path, [&](std::ostream& os) { os << doc.dump(2) << '\n'; });
}

/// JSON Lines stream written to `<path>.tmp` and renamed into place by
/// commit(), so an interrupted run never leaves a file that looks complete.
class JsonLines {
 public:
  explicit JsonLines(fs::path path) : path_(std::move(path)), tmp_(path_.string() + ".tmp"), os_(tmp_) {
    if (!os_) throw std::runtime_error("cannot open '" + tmp_.string() + "' for writing");
  }
  void write(const json& record) { os_ << record.dump() << '\n'; }
  void commit() {
    os_.close();
    if (!os_) throw std::runtime_error("write to '" + tmp_.string() + "' failed");
    fs::rename(tmp_, path_);
  }

 private:
  fs::path path_;
  fs::path tmp_;
  std::ofstream os_;
};

std::optional<double> exact_free_energy(const CouplingField& couplings, const LatticeGeometry& g,
                                        double beta) {
  if (!couplings.all_ferromagnetic()) return std::nullopt;
  return kaufman_free_energy(g.side_length(), beta);
}

// --- train -------------------------------------------------------------------

int cmd_train(const Overrides& ov) {
  RunConfig cfg = resolve_config(ov);
  const LatticeGeometry geometry(cfg.side_length);
  const auto couplings = couplings_for(cfg, geometry);
  const fs::path out = output_dir(cfg, ov, cfg.out_dir());
  fs::create_directories(out);

  write_atomically(out / "couplings.txt",
                   [&](std::ostream& os) { write_couplings(os, geometry, couplings); });
  RunConfig frozen = cfg;
  frozen.coupling_file = "couplings.txt";
  frozen.out = ".";
  write_atomically(out / "config.resolved", [&](std::ostream& os) { write_config(os, frozen); });

  JsonLines metrics(out / "metrics.jsonl");
  TrainCallbacks cb;
  cb.on_update = [&](const RunMetrics& m) {
    metrics.write(json{{"update", m.update},
                       {"era", m.era},
                       {"f_q", m.f_q},
                       {"ess", m.ess},
                       {"m_mean", m.m_mean},
                       {"m_abs_mean", m.m_abs_mean},
                       {"grad_norm", m.grad_norm}});
  };
  cb.on_era = [&](int era, const ModelParameters& params, const Rng& rng) {
    Checkpoint ck;
    ck.geometry = geometry;
    ck.couplings = couplings;
    ck.prior_kind = cfg.prior_kind();
    ck.prior_order = cfg.prior_order;
    ck.beta = cfg.beta;
    ck.network = params;
    ck.rng_state = rng_state(rng);
    ck.era = era;
    save_checkpoint(out / ("ckpt-era-" + std::to_string(era)), ck);
  };

  TrainResult result;
  try {
    result = train(cfg.train_config(), couplings, cb);
  } catch (const TrainingDiverged& e) {
    metrics.commit();
    std::cerr << "spinvan train: diverged: " << e.what() << '\n';
    return 3;
  }
  metrics.commit();

  json summary{{"out", out.string()}, {"updates", result.metrics.size()}, {"eras", cfg.era_count}};
  if (!result.metrics.empty()) {
    summary["final_f_q"] = result.metrics.back().f_q;
    summary["final_ess"] = result.metrics.back().ess;
  }
  std::cout << summary.dump(2) << '\n';
  return 0;
}

// --- sample ------------------------------------------------------------------

int cmd_sample(const Overrides& ov, const std::string& checkpoint_path) {
  const RunConfig cfg = resolve_config(ov);
  const Checkpoint ck = load_checkpoint(checkpoint_path);
  const auto prior = ck.prior();
  const std::size_t count = ov.values.count("samples") || ov.config_path ? cfg.samples : 4096;
  Rng rng(derive_seed(cfg.seed, "sample"));
  const auto batch = ck.network ? ancestral_sample(*ck.network, prior, ck.geometry, ck.couplings,
                                                   count, rng, cfg.threads)
                                : ancestral_sample(prior, ck.geometry, ck.couplings, count, rng,
                                                   cfg.threads);
  const fs::path out = output_dir(cfg, ov, ".");
  fs::create_directories(out);
  write_atomically(out / "samples.txt", [&](std::ostream& os) {
    for (std::size_t b = 0; b < batch.configs.size(); ++b) write_configuration(os, batch.configs[b]);
  });
  JsonLines side(out / "samples.jsonl");
  for (std::size_t b = 0; b < batch.configs.size(); ++b) {
    side.write(json{{"sample", b},
                    {"log_q", batch.log_q[b]},
                    {"energy", batch.energy[b]},
                    {"magnetization", magnetization(batch.configs[b])}});
  }
  side.commit();
  std::cout << json{{"out", out.string()}, {"samples", count}}.dump(2) << '\n';
  return 0;
}

// --- estimate ----------------------------------------------------------------

int cmd_estimate(const Overrides& ov, const std::string& checkpoint_path,
                 const std::optional<std::string>& mc_path) {
  const RunConfig cfg = resolve_config(ov);
  const Checkpoint ck = load_checkpoint(checkpoint_path);
  const auto prior = ck.prior();

  std::optional<std::vector<double>> mc_signal;
  if (mc_path) {
    std::ifstream is(*mc_path);
    if (!is) throw std::runtime_error("cannot open MC sample file '" + *mc_path + "'");
    SpinBatch mc(0, static_cast<std::size_t>(ck.geometry.site_count()));
    try {
      mc = read_configurations(is, ck.geometry);
    } catch (const std::runtime_error& e) {
      throw UsageError("geometry mismatch between checkpoint (L=" +
                       std::to_string(ck.geometry.side_length()) + ") and MC sample file '" +
                       *mc_path + "': " + e.what());
    }
    if (mc.empty()) throw UsageError("MC sample file '" + *mc_path + "' holds no configurations");
    const auto lq = ck.network ? log_prob(*ck.network, prior, mc) : log_prob(prior, mc);
    mc_signal.emplace(lq.size());
    for (std::size_t k = 0; k < lq.size(); ++k) {
      (*mc_signal)[k] = lq[k] + ck.beta * energy(mc[k], ck.couplings, ck.geometry);
    }
  }

  Rng rng(derive_seed(cfg.seed, "sample"));
  const auto s = ck.network ? sample_summaries(*ck.network, prior, ck.geometry, ck.couplings,
                                               cfg.samples, rng, cfg.threads)
                            : sample_summaries(prior, ck.geometry, ck.couplings, cfg.samples, rng,
                                               cfg.threads);
  Rng boot(derive_seed(cfg.seed, "bootstrap"));
  std::optional<std::span<const double>> mc_span;
  if (mc_signal) mc_span = std::span<const double>(*mc_signal);
  const auto rep = make_estimate_report(ck.beta, ck.prior_order, s.log_q, s.energy, s.magnetization,
                                        mc_span, cfg.bootstrap, boot);

  json doc{{"L", ck.geometry.side_length()},
           {"model", to_string(ck.prior_kind)},
           {"beta", rep.beta},
           {"prior_order", rep.prior_order},
           {"era", ck.era},
           {"samples", rep.samples},
           {"f_q", rep.f_q.value},
           {"f_q_err", rep.f_q.error},
           {"f_nis", rep.f_nis.value},
           {"f_nis_err", rep.f_nis.error},
           {"ess", rep.ess.value},
           {"ess_err", rep.ess.error},
           {"energy", estimate_json(rep.energy)},
           {"magnetization", estimate_json(rep.magnetization)},
           {"abs_magnetization", estimate_json(rep.abs_magnetization)},
           {"variational_energy", estimate_json(rep.variational_energy)},
           {"variational_magnetization", estimate_json(rep.variational_magnetization)},
           {"variational_abs_magnetization", estimate_json(rep.variational_abs_magnetization)}};
  if (rep.f_mc) {
    doc["mc_samples"] = rep.mc_samples;
    doc["f_mc"] = rep.f_mc->value;
    doc["f_mc_err"] = rep.f_mc->error;
    doc["w_bar"] = rep.w_bar->value;
    doc["w_bar_err"] = rep.w_bar->error;
  }
  if (const auto f = exact_free_energy(ck.couplings, ck.geometry, ck.beta)) {
    doc["f_exact"] = *f;
    doc["d_kl"] = rep.f_q.value - *f;
  }
  if (ov.values.count("out") || !cfg.out.empty()) {
    const fs::path out = cfg.out_dir();
    fs::create_directories(out);
    write_json_file(out / "report.json", doc);
  }
  std::cout << doc.dump(2) << '\n';
  return 0;
}

// --- prior-eval --------------------------------------------------------------

int cmd_prior_eval(const Overrides& ov, const std::optional<std::string>& dump_factors,
                   const std::optional<std::string>& save_checkpoint_path) {
  const RunConfig cfg = resolve_config(ov);
  const LatticeGeometry geometry(cfg.side_length);
  const auto couplings = couplings_for(cfg, geometry);
  const auto prior = make_prior(cfg.prior_kind(), geometry, couplings, cfg.beta, cfg.prior_order);

  if (dump_factors) {
    write_atomically(*dump_factors, [&](std::ostream& os) { write_factor_tables(os, prior); });
  }
  if (save_checkpoint_path) {
    Checkpoint ck;
    ck.geometry = geometry;
    ck.couplings = couplings;
    ck.prior_kind = cfg.prior_kind();
    ck.prior_order = cfg.prior_order;
    ck.beta = cfg.beta;
    save_checkpoint(*save_checkpoint_path, ck);
  }

  Rng rng(derive_seed(cfg.seed, "sample"));
  const auto s = sample_summaries(prior, geometry, couplings, cfg.samples, rng, cfg.threads);
  std::vector<double> fq(s.log_q.size());
  double mean = 0.0, m2 = 0.0;
  for (std::size_t k = 0; k < fq.size(); ++k) {
    fq[k] = s.log_q[k] + cfg.beta * s.energy[k];
    const double d = fq[k] - mean;
    mean += d / static_cast<double>(k + 1);
    m2 += d * (fq[k] - mean);
  }
  const double err = std::sqrt(m2 / static_cast<double>(fq.size() - 1) / static_cast<double>(fq.size()));
  const auto lw = log_weights(s.log_q, s.energy, cfg.beta);

  json doc{{"L", cfg.side_length},     {"model", cfg.model},  {"beta", cfg.beta},
           {"order", cfg.prior_order}, {"samples", cfg.samples}, {"f_q", mean},
           {"f_q_err", err},           {"ess", ess(lw)},      {"f_nis", f_nis(lw)}};
  if (const auto f = exact_free_energy(couplings, geometry, cfg.beta)) doc["f_exact"] = *f;
  std::cout << doc.dump(2) << '\n';
  return 0;
}

// --- mc ----------------------------------------------------------------------

int cmd_mc(const Overrides& ov, bool keep_configs) {
  const RunConfig cfg = resolve_config(ov);
  const LatticeGeometry geometry(cfg.side_length);
  const auto couplings = couplings_for(cfg, geometry);
  std::string algo = cfg.mc_algo;
  if (algo == "auto") algo = couplings.all_ferromagnetic() ? "wolff" : "pt";

  McRunOptions opt;
  opt.samples = cfg.mc_samples;
  opt.burn_in = cfg.mc_burn_in;
  opt.thin = cfg.mc_thin;
  opt.keep_configs = keep_configs;
  const std::uint64_t seed = derive_seed(cfg.seed, "mc");

  McSamples samples;
  json summary{{"algorithm", algo}, {"L", cfg.side_length}, {"beta", cfg.beta}};
  if (algo == "pt") {
    TemperingLadder ladder(
        TemperingLadder::geometric(std::min(cfg.pt_beta_min, cfg.beta), cfg.beta, cfg.pt_count),
        geometry, couplings, seed);
    Rng swap_rng(derive_seed(seed, "replica", static_cast<std::uint64_t>(cfg.pt_count)));
    auto res = parallel_tempering_run(ladder, couplings, opt, cfg.pt_swap_interval, swap_rng);
    summary["ladder"] = ladder.betas;
    summary["swap_rates"] = res.swap_rates;
    samples = std::move(res.samples.back());
  } else {
    ChainState st = ChainState::make(geometry, couplings, cfg.beta, seed);
    if (algo == "wolff") {
      samples = wolff_run(st, couplings, opt);
    } else {
      samples = metropolis_run(st, couplings, opt);
      summary["acceptance_rate"] = static_cast<double>(st.accepted) / static_cast<double>(st.proposed);
    }
  }

  const fs::path out = output_dir(cfg, ov, ".");
  fs::create_directories(out);
  if (keep_configs) {
    write_atomically(out / "mc_samples.txt", [&](std::ostream& os) {
      for (std::size_t k = 0; k < samples.configs.size(); ++k) write_configuration(os, samples.configs[k]);
    });
  }
  JsonLines stream(out / "mc.jsonl");
  double e_mean = 0.0, am_mean = 0.0;
  for (std::size_t k = 0; k < samples.energy.size(); ++k) {
    stream.write(json{{"sample", k}, {"energy", samples.energy[k]}, {"magnetization", samples.magnetization[k]}});
    e_mean += samples.energy[k];
    am_mean += std::abs(samples.magnetization[k]);
  }
  stream.commit();
  const double n = static_cast<double>(samples.energy.size());
  summary["samples"] = samples.energy.size();
  summary["mean_energy"] = e_mean / n;
  summary["mean_abs_magnetization"] = am_mean / n;
  write_json_file(out / "mc_summary.json", summary);
  std::cout << summary.dump(2) << '\n';
  return 0;
}

// --- exact -------------------------------------------------------------------

int cmd_exact(const Overrides& ov) {
  const RunConfig cfg = resolve_config(ov);
  const LatticeGeometry geometry(cfg.side_length);
  const auto couplings = couplings_for(cfg, geometry);
  json doc{{"L", cfg.side_length}, {"model", cfg.model}, {"beta", cfg.beta}};
  if (geometry.site_count() <= kMaxEnumerationSites) {
    const auto r = enumerate(geometry, couplings, cfg.beta);
    doc["method"] = "enumeration";
    doc["log_z"] = r.log_z;
    doc["free_energy"] = r.free_energy;
    doc["mean_energy"] = r.mean_energy;
    doc["mean_magnetization"] = r.mean_magnetization;
    doc["mean_abs_magnetization"] = r.mean_abs_magnetization;
  } else if (couplings.all_ferromagnetic()) {
    doc["method"] = "closed_form";
    doc["free_energy"] = kaufman_free_energy(cfg.side_length, cfg.beta);
    doc["mean_energy"] = kaufman_mean_energy(cfg.side_length, cfg.beta);
  } else {
    throw UsageError("no exact method for an Edwards-Anderson lattice with N > " +
                     std::to_string(kMaxEnumerationSites));
  }
  std::cout << doc.dump(2) << '\n';
  return 0;
}

}  // namespace
}  // namespace spinvan::cli

int main(int argc, char** argv) {
  using namespace spinvan::cli;
  CLI::App app{"Variational autoregressive samplers with analytic prior logits"};
  app.require_subcommand(1);
  app.fallthrough();

  Overrides ov;
  app.add_option_function<std::string>(
      "--config", [&](const std::string& p) { ov.config_path = p; }, "key = value run configuration");
  ov.add(&app, "--seed", "seed", "master seed");
  ov.add(&app, "--out", "out", "output directory");
  ov.add(&app, "--threads", "threads", "worker threads for sampling");

  auto add_model_flags = [&](CLI::App* sub) {
    ov.add(sub, "--L", "L", "lattice side length");
    ov.add(sub, "--beta", "beta", "inverse temperature");
    ov.add(sub, "--model", "model", "ising | ea");
    ov.add(sub, "--coupling-seed", "coupling_seed", "seed of the EA coupling realisation");
    ov.add(sub, "--couplings", "coupling_file", "coupling file (lattice text format)");
  };

  auto* train = app.add_subcommand("train", "train a model; writes metrics.jsonl and checkpoints");
  add_model_flags(train);
  ov.add(train, "--order", "prior_order", "prior order 0..4");
  ov.add(train, "--hidden", "hidden", "hidden width (0 = N)");
  ov.add(train, "--batch-size", "batch_size", "samples per update");
  ov.add(train, "--era-length", "era_length", "updates per era");
  ov.add(train, "--era-count", "era_count", "number of eras");
  ov.add(train, "--learning-rate", "learning_rate", "optimizer step size");

  std::string checkpoint;
  auto* sample = app.add_subcommand("sample", "draw configurations from a checkpoint");
  sample->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  ov.add(sample, "--samples", "samples", "number of configurations (default 4096)");

  std::optional<std::string> mc_file;
  auto* estimate = app.add_subcommand("estimate", "importance-sampling report for a checkpoint");
  estimate->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  estimate->add_option("--mc-samples", mc_file, "configurations sampled from p (enables f_mc, w_bar)");
  ov.add(estimate, "--samples", "samples", "model samples (default 2^20)");
  ov.add(estimate, "--bootstrap", "bootstrap", "bootstrap resamples (>= 100)");

  std::optional<std::string> dump_factors, save_ckpt;
  auto* prior_eval = app.add_subcommand("prior-eval", "F_q of the analytic prior alone");
  add_model_flags(prior_eval);
  ov.add(prior_eval, "--order", "prior_order", "prior order 0..4");
  ov.add(prior_eval, "--samples", "samples", "number of samples (default 2^20)");
  prior_eval->add_option("--dump-factors", dump_factors, "write per-site factor tables here");
  prior_eval->add_option("--save-checkpoint", save_ckpt, "write a prior-only checkpoint here");

  bool no_configs = false;
  auto* mc = app.add_subcommand("mc", "Monte Carlo baseline samples");
  add_model_flags(mc);
  ov.add(mc, "--algo", "mc_algo", "wolff | metropolis | pt | auto");
  ov.add(mc, "--samples", "mc_samples", "retained samples");
  ov.add(mc, "--burn-in", "mc_burn_in", "equilibration sweeps");
  ov.add(mc, "--thin", "mc_thin", "sweeps between retained samples");
  ov.add(mc, "--pt-count", "pt_count", "tempering replicas");
  ov.add(mc, "--pt-beta-min", "pt_beta_min", "smallest tempering beta");
  ov.add(mc, "--swap-interval", "pt_swap_interval", "sweeps between swap attempts");
  mc->add_flag("--no-configs", no_configs, "skip writing mc_samples.txt");

  auto* exact = app.add_subcommand("exact", "exact F by enumeration or closed form");
  add_model_flags(exact);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (*train) return cmd_train(ov);
    if (*sample) return cmd_sample(ov, checkpoint);
    if (*estimate) return cmd_estimate(ov, checkpoint, mc_file);
    if (*prior_eval) return cmd_prior_eval(ov, dump_factors, save_ckpt);
    if (*mc) return cmd_mc(ov, !no_configs);
    if (*exact) return cmd_exact(ov);
  } catch (const ConfigError& e) {
    std::cerr << "spinvan: config error: " << e.what() << '\n';
    return 2;
  } catch (const UsageError& e) {
    std::cerr << "spinvan: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "spinvan: error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
