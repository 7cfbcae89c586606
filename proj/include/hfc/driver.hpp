#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "hfc/io.hpp"
#include "hfc/kitaev.hpp"

namespace hfc {

/// Estimators for a run: the mode's defaults, filtered by cfg.observables.
std::vector<EstimatorSpec> estimators_for(const RunConfig& cfg, const Lattice& lattice);

/// Hooks for long runs. `progress` gets one line per finished point;
/// `stop_after` > 0 aborts with Error(Io) after that many checkpoint writes,
/// which simulates an interruption.
struct DriverHooks {
  std::function<void(const std::string&)> progress;
  int stop_after = 0;
};

struct RunOutput {
  std::vector<CsvRow> rows;
  std::string csv_path;
  std::string provenance_path;
  double wall_seconds = 0.0;
};

/// sweep, point and negativity-scan: one comb per t point. Writes
/// <out>/<mode>.csv, its provenance sidecar and, when checkpointing,
/// <out>/<mode>.checkpoint.json.
RunOutput run_comb_points(const RunConfig& cfg, const DriverHooks& hooks = {});

/// Kitaev finite-T rows (observables prefixed ht_, the t column holds beta).
RunOutput run_kitaev(const RunConfig& cfg, const DriverHooks& hooks = {});

/// Oracle cross-checks on the single-bond and hexagon graphs; writes
/// <out>/oracle_report.json. Returns true when every case passes.
bool run_oracle_check(const RunConfig& cfg, std::string* report = nullptr);

/// Fits over CSV inputs; returns a JSON report.
std::string run_fit(const RunConfig& cfg);

/// Counts and the bond table.
void lattice_info(const RunConfig& cfg, std::ostream& os, bool dump_bonds);

}  // namespace hfc
