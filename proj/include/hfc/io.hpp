#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "hfc/dense_oracle.hpp"
#include "hfc/sampler.hpp"

namespace hfc {

inline constexpr int kCsvVersion = 1;
inline constexpr int kCheckpointVersion = 1;
const char* code_version() noexcept;

/// Everything a CLI invocation needs. Angles are in units of pi.
struct RunConfig {
  std::string mode = "sweep";
  int L = 3;
  int r = 0;  // 0: r = L
  std::vector<double> t;  // explicit points
  std::string t_grid;     // "start:stop:count", merged after the explicit points
  CombConfig comb;
  std::vector<std::string> observables;  // empty: the mode's defaults
  bool replica = true;
  bool negativity = false;
  std::string cut = "half";
  std::string out = "out";
  int checkpoint_every = 0;
  std::string resume;
  int threads = 0;  // 0: environment default
  // kitaev
  std::vector<double> beta;
  int kitaev_sweeps = 4000;
  int kitaev_burn_in = 500;
  bool kitaev_exact = true;  // exact flux sum where L = 3
  // fit
  std::string fit_kind = "threshold";
  std::vector<std::string> inputs;
  std::string observable;

  // keys set on the command line after the file was read
  std::vector<std::string> overrides;

  int depth() const { return r > 0 ? r : L; }
  /// Explicit points followed by the grid, in units of pi.
  std::vector<double> t_points() const;
  /// Throws ValidationError naming the offending key.
  void validate() const;
};

/// Apply one `key = value` pair; unknown keys and malformed values throw.
void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value);
/// Parse a config file body: `key = value` lines, `#` comments.
void parse_config_text(RunConfig& cfg, const std::string& text, const std::string& origin = "config");
void parse_config_file(RunConfig& cfg, const std::string& path);
/// Resolved config as `key = value` text; parses back to the same config.
std::string dump_config(const RunConfig& cfg);

std::vector<double> parse_grid(const std::string& spec);

// --- CSV ---------------------------------------------------------------------

struct CsvRow {
  int L = 0;
  int r = 0;
  double t = 0.0;  // units of pi
  std::uint64_t seed = 0;
  std::string observable;
  double mean = 0.0;
  double stderr_ = 0.0;
  double tau_int = 0.0;
  std::int64_t n_outer = 0;
  std::int64_t n_inner = 0;
};

std::string csv_header();
/// Shortest round-trip formatting; NaN as `nan`.
std::string format_double(double x);
std::string format_row(const CsvRow& row);
void write_csv(std::ostream& os, const std::vector<CsvRow>& rows);
void write_csv_file(const std::string& path, const std::vector<CsvRow>& rows);
std::vector<CsvRow> read_csv(std::istream& is);
std::vector<CsvRow> read_csv_file(const std::string& path);

/// Rows for one comb result at (L, r, t).
std::vector<CsvRow> comb_rows(const CombResult& res, int L, int r, double t_pi, std::uint64_t seed,
                              const std::vector<EstimatorSpec>& estimators);

// --- provenance, checkpoints, reports ---------------------------------------

struct Provenance {
  std::string config;  // dump_config text
  std::uint64_t seed = 0;
  std::string version;
  double wall_seconds = 0.0;
  int threads = 0;
  std::vector<std::string> overrides;
  std::vector<std::string> notes;
};

void write_provenance(const std::string& path, const Provenance& p);

/// A multi-point run: the finished rows plus the comb state of the point in progress.
struct RunCheckpoint {
  std::string fingerprint;  // config keys that affect results
  int point = 0;            // index into t_points()
  std::vector<std::string> rows;  // formatted CSV rows of finished points
  bool has_comb = false;
  CombCheckpoint comb;
};

std::string fingerprint(const RunConfig& cfg);
std::string checkpoint_to_json(const RunCheckpoint& ck);
RunCheckpoint checkpoint_from_json(const std::string& text);
/// Write to a temporary file and rename over the target.
void save_checkpoint(const std::string& path, const RunCheckpoint& ck);
RunCheckpoint load_checkpoint(const std::string& path);

struct OracleCase {
  std::string graph;
  int rounds = 0;
  CrosscheckReport report;
};

/// JSON report with the largest deviations per identity and an overall verdict.
std::string oracle_report_json(const std::vector<OracleCase>& cases, double tolerance);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace hfc
