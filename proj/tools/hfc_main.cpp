// Command-line driver. Config file first, then flags on top.
#include <cstdlib>
#include <iostream>
#include <omp.h>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "hfc/driver.hpp"
#include "hfc/error.hpp"

namespace {

constexpr const char* kThreadsEnv = "HFC_THREADS";

struct Flags {
  std::string config;
  std::optional<int> L, r, seed, chains, outer_sweeps, burn_in, branch_interval, inner_sweeps, checkpoint_every,
      threads, sweeps;
  std::optional<std::string> t, t_grid, out, resume, beta, kind, observable, observables;
  std::vector<std::string> inputs;
  bool no_cache = false;
  bool dump = false;
  bool direct = false;
};

void add_common(CLI::App* app, Flags& f) {
  app->add_option("--config", f.config, "key = value config file");
  app->add_option("--L", f.L, "linear size, a multiple of 3");
  app->add_option("--r", f.r, "circuit depth (default L)");
  app->add_option("--t", f.t, "measurement strengths in units of pi, comma separated");
  app->add_option("--t-grid", f.t_grid, "start:stop:count in units of pi");
  app->add_option("--seed", f.seed, "master seed");
  app->add_option("--chains", f.chains, "independent outer chains");
  app->add_option("--outer-sweeps", f.outer_sweeps);
  app->add_option("--burn-in", f.burn_in);
  app->add_option("--branch-interval", f.branch_interval);
  app->add_option("--inner-sweeps", f.inner_sweeps, "0 disables the inner chains");
  app->add_option("--out", f.out, "output directory");
  app->add_option("--checkpoint-every", f.checkpoint_every, "outer sweeps between checkpoints");
  app->add_option("--resume", f.resume, "checkpoint file to continue from");
  app->add_flag("--no-cache", f.no_cache, "evaluate every outer proposal from scratch");
  app->add_option("--threads", f.threads, std::string("worker threads (default $") + kThreadsEnv + ")");
  app->add_option("--observables", f.observables, "comma separated subset");
  app->add_flag("--direct", f.direct, "independent Born draws instead of Metropolis");
}

void apply(hfc::RunConfig& c, const Flags& f) {
  auto set = [&](const char* key, const std::string& v) {
    hfc::set_config_value(c, key, v);
    c.overrides.push_back(std::string(key) + " = " + v);
  };
  if (f.L) set("L", std::to_string(*f.L));
  if (f.r) set("r", std::to_string(*f.r));
  if (f.t) set("t", *f.t);
  if (f.t_grid) set("t_grid", *f.t_grid);
  if (f.seed) set("seed", std::to_string(*f.seed));
  if (f.chains) set("chains", std::to_string(*f.chains));
  if (f.outer_sweeps) set("outer_sweeps", std::to_string(*f.outer_sweeps));
  if (f.burn_in) set("burn_in", std::to_string(*f.burn_in));
  if (f.branch_interval) set("branch_interval", std::to_string(*f.branch_interval));
  if (f.inner_sweeps) set("inner_sweeps", std::to_string(*f.inner_sweeps));
  if (f.out) set("out", *f.out);
  if (f.checkpoint_every) set("checkpoint_every", std::to_string(*f.checkpoint_every));
  if (f.resume) set("resume", *f.resume);
  if (f.no_cache) set("cache", "false");
  if (f.direct) set("outer_mode", "direct");
  if (f.threads) set("threads", std::to_string(*f.threads));
  if (f.observables) set("observables", *f.observables);
  if (f.beta) set("beta", *f.beta);
  if (f.sweeps) set("kitaev_sweeps", std::to_string(*f.sweeps));
  if (f.kind) set("fit", *f.kind);
  if (f.observable) set("observable", *f.observable);
  if (!f.inputs.empty()) {
    std::string joined;
    for (const auto& s : f.inputs) joined += (joined.empty() ? "" : ",") + s;
    set("inputs", joined);
  }
}

int thread_count(const hfc::RunConfig& c) {
  if (c.threads > 0) return c.threads;
  if (const char* env = std::getenv(kThreadsEnv)) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return 0;
}

int report_error(const hfc::Error& e) {
  nlohmann::json j = {{"error", hfc::to_string(e.kind())}, {"message", e.what()}};
  std::cerr << j.dump() << "\n";
  const bool input = e.kind() == hfc::ErrorKind::ParseError || e.kind() == hfc::ErrorKind::ValidationError ||
                     e.kind() == hfc::ErrorKind::InvalidL || e.kind() == hfc::ErrorKind::InvalidR;
  return input ? 2 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"weak-measurement honeycomb Floquet simulator"};
  app.require_subcommand(1);
  Flags f;
  const char* names[] = {"lattice-info", "sweep", "point", "negativity-scan", "oracle-check", "kitaev", "fit"};
  std::map<std::string, CLI::App*> subs;
  for (const char* n : names) {
    auto* s = app.add_subcommand(n);
    add_common(s, f);
    subs[n] = s;
  }
  subs["lattice-info"]->add_flag("--dump", f.dump, "print the bond table as CSV");
  subs["kitaev"]->add_option("--beta", f.beta, "inverse temperatures, comma separated");
  subs["kitaev"]->add_option("--sweeps", f.sweeps, "flux Monte Carlo sweeps per temperature");
  subs["fit"]->add_option("--kind", f.kind, "threshold, z, negativity or collapse");
  subs["fit"]->add_option("--observable", f.observable, "observable column to fit");
  subs["fit"]->add_option("inputs", f.inputs, "CSV files");

  CLI11_PARSE(app, argc, argv);
  const std::string mode = app.get_subcommands().front()->get_name();

  try {
    hfc::RunConfig cfg;
    if (!f.config.empty()) hfc::parse_config_file(cfg, f.config);
    cfg.mode = mode;
    if (mode == "negativity-scan") {
      cfg.replica = false;
      cfg.comb.inner_sweeps = 0;
    }
    apply(cfg, f);
    if (const int n = thread_count(cfg); n > 0) omp_set_num_threads(n);

    hfc::DriverHooks hooks;
    hooks.progress = [](const std::string& s) { std::cerr << s << "\n"; };

    if (mode == "lattice-info") {
      if (cfg.L < 3 || cfg.L % 3 != 0) cfg.validate();
      hfc::lattice_info(cfg, std::cout, f.dump);
    } else if (mode == "oracle-check") {
      std::string report;
      const bool ok = hfc::run_oracle_check(cfg, &report);
      std::cout << report;
      return ok ? 0 : 3;
    } else if (mode == "kitaev") {
      const auto out = hfc::run_kitaev(cfg, hooks);
      std::cerr << "wrote " << out.csv_path << "\n";
    } else if (mode == "fit") {
      std::cout << hfc::run_fit(cfg);
    } else {
      const auto out = hfc::run_comb_points(cfg, hooks);
      std::cerr << "wrote " << out.csv_path << " (" << out.rows.size() << " rows, " << out.wall_seconds << " s)\n";
    }
  } catch (const hfc::Error& e) {
    return report_error(e);
  } catch (const std::exception& e) {
    nlohmann::json j = {{"error", "Internal"}, {"message", e.what()}};
    std::cerr << j.dump() << "\n";
    return 1;
  }
  return 0;
}
