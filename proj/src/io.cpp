#include "hfc/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "hfc/error.hpp"

#ifndef HFC_VERSION
#define HFC_VERSION "unknown"
#endif

namespace hfc {

using nlohmann::json;

const char* code_version() noexcept { return HFC_VERSION; }

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(trim(cur));
  if (!s.empty() && s.back() == sep) out.push_back("");
  return out;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* want) {
  throw Error(ErrorKind::ParseError, "key '" + key + "': cannot read '" + value + "' as " + want);
}

double to_double(const std::string& key, const std::string& v) {
  double x = 0.0;
  const auto* end = v.data() + v.size();
  auto [p, ec] = std::from_chars(v.data(), end, x);
  if (ec != std::errc() || p != end) bad_value(key, v, "a number");
  return x;
}

long long to_int(const std::string& key, const std::string& v) {
  long long x = 0;
  const auto* end = v.data() + v.size();
  auto [p, ec] = std::from_chars(v.data(), end, x);
  if (ec != std::errc() || p != end) bad_value(key, v, "an integer");
  return x;
}

int to_int32(const std::string& key, const std::string& v) {
  const long long x = to_int(key, v);
  if (x < -2147483647LL || x > 2147483647LL) bad_value(key, v, "a 32-bit integer");
  return static_cast<int>(x);
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "yes" || v == "1" || v == "on") return true;
  if (v == "false" || v == "no" || v == "0" || v == "off") return false;
  bad_value(key, v, "a boolean");
}

std::vector<double> to_doubles(const std::string& key, const std::string& v) {
  std::vector<double> out;
  for (const auto& item : split(v, ',')) {
    if (item.empty()) continue;
    out.push_back(to_double(key, item));
  }
  return out;
}

std::vector<std::string> to_strings(const std::string& v) {
  std::vector<std::string> out;
  for (const auto& item : split(v, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + v[i];
  return s;
}

std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + format_double(v[i]);
  return s;
}

[[noreturn]] void invalid(const std::string& key, const std::string& why) {
  throw Error(ErrorKind::ValidationError, "key '" + key + "': " + why);
}

std::string hex(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", x);
  return buf;
}

double unhex(const std::string& s) {
  char* end = nullptr;
  const double x = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size()) throw Error(ErrorKind::ParseError, "checkpoint: bad number '" + s + "'");
  return x;
}

json binning_json(const Binning& b) {
  json levels = json::array();
  for (const auto& l : b.levels()) {
    levels.push_back({{"bins", l.bins}, {"mean", hex(l.mean)}, {"m2", hex(l.m2)},
                      {"pending", hex(l.pending)}, {"has_pending", l.has_pending}});
  }
  return levels;
}

Binning binning_from(const json& j) {
  std::vector<Binning::Level> levels;
  for (const auto& l : j) {
    Binning::Level lv;
    lv.bins = l.at("bins").get<std::int64_t>();
    lv.mean = unhex(l.at("mean").get<std::string>());
    lv.m2 = unhex(l.at("m2").get<std::string>());
    lv.pending = unhex(l.at("pending").get<std::string>());
    lv.has_pending = l.at("has_pending").get<bool>();
    levels.push_back(lv);
  }
  return Binning::from_levels(std::move(levels));
}

json stats_json(const CombStats& s) {
  json bins = json::object();
  for (const auto& [name, b] : s.bins) bins[name] = binning_json(b);
  return {{"bins", bins},
          {"outer_samples", s.outer_samples},
          {"inner_samples", s.inner_samples},
          {"flagged", s.flagged},
          {"outer_proposals", s.outer_proposals},
          {"outer_accepted", s.outer_accepted},
          {"inner_proposals", s.inner_proposals},
          {"inner_accepted", s.inner_accepted}};
}

CombStats stats_from(const json& j) {
  CombStats s;
  for (const auto& [name, b] : j.at("bins").items()) s.bins[name] = binning_from(b);
  s.outer_samples = j.at("outer_samples").get<std::int64_t>();
  s.inner_samples = j.at("inner_samples").get<std::int64_t>();
  s.flagged = j.at("flagged").get<std::int64_t>();
  s.outer_proposals = j.at("outer_proposals").get<std::int64_t>();
  s.outer_accepted = j.at("outer_accepted").get<std::int64_t>();
  s.inner_proposals = j.at("inner_proposals").get<std::int64_t>();
  s.inner_accepted = j.at("inner_accepted").get<std::int64_t>();
  return s;
}

std::string net_string(const std::vector<std::int8_t>& net) {
  std::string s(net.size(), '+');
  for (std::size_t i = 0; i < net.size(); ++i)
    if (net[i] < 0) s[i] = '-';
  return s;
}

std::vector<std::int8_t> net_from(const std::string& s) {
  std::vector<std::int8_t> net(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '+' && s[i] != '-') throw Error(ErrorKind::ParseError, "checkpoint: bad net field");
    net[i] = s[i] == '+' ? 1 : -1;
  }
  return net;
}

}  // namespace

// --- config --------------------------------------------------------------------

std::vector<double> parse_grid(const std::string& spec) {
  const auto parts = split(spec, ':');
  if (parts.size() != 3) throw Error(ErrorKind::ParseError, "t_grid: expected start:stop:count, got '" + spec + "'");
  const double a = to_double("t_grid", parts[0]);
  const double b = to_double("t_grid", parts[1]);
  const long long n = to_int("t_grid", parts[2]);
  if (n < 1) invalid("t_grid", "count must be positive");
  std::vector<double> out;
  if (n == 1) return {a};
  for (long long i = 0; i < n; ++i) out.push_back(a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
  return out;
}

std::vector<double> RunConfig::t_points() const {
  std::vector<double> out = t;
  if (!t_grid.empty()) {
    const auto g = parse_grid(t_grid);
    out.insert(out.end(), g.begin(), g.end());
  }
  return out;
}

void set_config_value(RunConfig& c, const std::string& key, const std::string& v) {
  if (key == "mode") c.mode = v;
  else if (key == "L") c.L = to_int32(key, v);
  else if (key == "r") c.r = to_int32(key, v);
  else if (key == "t") c.t = to_doubles(key, v);
  else if (key == "t_grid") c.t_grid = v;
  else if (key == "seed") {
    const long long s = to_int(key, v);
    if (s < 0) invalid(key, "must be non-negative");
    c.comb.seed = static_cast<std::uint64_t>(s);
  } else if (key == "chains") c.comb.chains = to_int32(key, v);
  else if (key == "outer_sweeps") c.comb.outer_sweeps = to_int32(key, v);
  else if (key == "burn_in") c.comb.burn_in = to_int32(key, v);
  else if (key == "branch_interval") c.comb.branch_interval = to_int32(key, v);
  else if (key == "inner_sweeps") c.comb.inner_sweeps = to_int32(key, v);
  else if (key == "inner_burn_in") c.comb.inner_burn_in = to_int32(key, v);
  else if (key == "cache") c.comb.use_cache = to_bool(key, v);
  else if (key == "outer_mode") {
    if (v == "metropolis") c.comb.outer_mode = OuterMode::Metropolis;
    else if (v == "direct") c.comb.outer_mode = OuterMode::Direct;
    else bad_value(key, v, "metropolis or direct");
  } else if (key == "flagged_limit") c.comb.flagged_limit = to_double(key, v);
  else if (key == "observables") c.observables = to_strings(v);
  else if (key == "replica") c.replica = to_bool(key, v);
  else if (key == "negativity") c.negativity = to_bool(key, v);
  else if (key == "cut") c.cut = v;
  else if (key == "out") c.out = v;
  else if (key == "checkpoint_every") c.checkpoint_every = to_int32(key, v);
  else if (key == "resume") c.resume = v;
  else if (key == "threads") c.threads = to_int32(key, v);
  else if (key == "beta") c.beta = to_doubles(key, v);
  else if (key == "kitaev_sweeps") c.kitaev_sweeps = to_int32(key, v);
  else if (key == "kitaev_burn_in") c.kitaev_burn_in = to_int32(key, v);
  else if (key == "kitaev_exact") c.kitaev_exact = to_bool(key, v);
  else if (key == "fit") c.fit_kind = v;
  else if (key == "inputs") c.inputs = to_strings(v);
  else if (key == "observable") c.observable = v;
  else throw Error(ErrorKind::ParseError, "unknown key '" + key + "'");
}

void parse_config_text(RunConfig& cfg, const std::string& text, const std::string& origin) {
  std::istringstream is(text);
  std::string line;
  int no = 0;
  while (std::getline(is, line)) {
    ++no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorKind::ParseError, origin + ":" + std::to_string(no) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    try {
      set_config_value(cfg, key, trim(line.substr(eq + 1)));
    } catch (const Error& e) {
      throw Error(e.kind(), origin + ":" + std::to_string(no) + ": " + e.what());
    }
  }
}

void parse_config_file(RunConfig& cfg, const std::string& path) { parse_config_text(cfg, read_text_file(path), path); }

std::string dump_config(const RunConfig& c) {
  std::ostringstream os;
  os << "mode = " << c.mode << "\n";
  os << "L = " << c.L << "\n";
  os << "r = " << c.depth() << "\n";
  if (!c.t.empty()) os << "t = " << join(c.t) << "\n";
  if (!c.t_grid.empty()) os << "t_grid = " << c.t_grid << "\n";
  os << "seed = " << c.comb.seed << "\n";
  os << "chains = " << c.comb.chains << "\n";
  os << "outer_sweeps = " << c.comb.outer_sweeps << "\n";
  os << "burn_in = " << c.comb.burn_in << "\n";
  os << "branch_interval = " << c.comb.branch_interval << "\n";
  os << "inner_sweeps = " << c.comb.inner_sweeps << "\n";
  os << "inner_burn_in = " << c.comb.effective_inner_burn_in() << "\n";
  os << "cache = " << (c.comb.use_cache ? "true" : "false") << "\n";
  os << "outer_mode = " << (c.comb.outer_mode == OuterMode::Direct ? "direct" : "metropolis") << "\n";
  os << "flagged_limit = " << format_double(c.comb.flagged_limit) << "\n";
  if (!c.observables.empty()) os << "observables = " << join(c.observables) << "\n";
  os << "replica = " << (c.replica ? "true" : "false") << "\n";
  os << "negativity = " << (c.negativity ? "true" : "false") << "\n";
  os << "cut = " << c.cut << "\n";
  os << "out = " << c.out << "\n";
  os << "checkpoint_every = " << c.checkpoint_every << "\n";
  if (!c.beta.empty()) os << "beta = " << join(c.beta) << "\n";
  os << "kitaev_sweeps = " << c.kitaev_sweeps << "\n";
  os << "kitaev_burn_in = " << c.kitaev_burn_in << "\n";
  os << "kitaev_exact = " << (c.kitaev_exact ? "true" : "false") << "\n";
  if (c.mode == "fit") {
    os << "fit = " << c.fit_kind << "\n";
    if (!c.inputs.empty()) os << "inputs = " << join(c.inputs) << "\n";
    if (!c.observable.empty()) os << "observable = " << c.observable << "\n";
  }
  return os.str();
}

void RunConfig::validate() const {
  static const std::vector<std::string> modes = {"lattice-info", "sweep", "point", "negativity-scan",
                                                 "oracle-check", "kitaev", "fit"};
  if (std::find(modes.begin(), modes.end(), mode) == modes.end()) invalid("mode", "unknown mode '" + mode + "'");
  if (L < 3 || L % 3 != 0) invalid("L", "must be a positive multiple of 3, got " + std::to_string(L));
  if (r < 0) invalid("r", "must be positive");
  for (double x : t_points()) {
    if (!(x >= 0.0 && x <= 0.25)) invalid("t", "angles are in units of pi and must lie in [0, 0.25]");
  }
  if ((mode == "sweep" || mode == "point" || mode == "negativity-scan") && t_points().empty()) {
    invalid("t", "no measurement strength given");
  }
  if (mode == "point" && t_points().size() != 1) invalid("t", "point takes exactly one value");
  try {
    comb.validate();
  } catch (const Error& e) {
    throw Error(ErrorKind::ValidationError, std::string("comb: ") + e.what());
  }
  if (cut != "half") invalid("cut", "only the half-torus cut 'half' is supported");
  if (checkpoint_every < 0) invalid("checkpoint_every", "must be non-negative");
  if (threads < 0) invalid("threads", "must be non-negative");
  for (double b : beta)
    if (!(b > 0.0)) invalid("beta", "inverse temperatures must be positive");
  if (kitaev_sweeps < 1 || kitaev_burn_in < 0) invalid("kitaev_sweeps", "need positive sweeps and burn-in");
  if (mode == "fit") {
    static const std::vector<std::string> kinds = {"threshold", "z", "negativity", "collapse"};
    if (std::find(kinds.begin(), kinds.end(), fit_kind) == kinds.end()) invalid("fit", "unknown fit '" + fit_kind + "'");
    if (inputs.empty()) invalid("inputs", "fit needs at least one CSV");
  }
}

// --- CSV -------------------------------------------------------------------------

std::string csv_header() { return "L,r,t,seed,observable,mean,stderr,tau_int,n_outer,n_inner"; }

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, p);
}

std::string format_row(const CsvRow& r) {
  std::string s = std::to_string(r.L) + "," + std::to_string(r.r) + "," + format_double(r.t) + "," +
                  std::to_string(r.seed) + "," + r.observable + "," + format_double(r.mean) + "," +
                  format_double(r.stderr_) + "," + format_double(r.tau_int) + "," + std::to_string(r.n_outer) +
                  "," + std::to_string(r.n_inner);
  return s;
}

void write_csv(std::ostream& os, const std::vector<CsvRow>& rows) {
  os << "# hfc-csv version " << kCsvVersion << "; t in units of pi\n" << csv_header() << "\n";
  for (const auto& r : rows) os << format_row(r) << "\n";
}

void write_csv_file(const std::string& path, const std::vector<CsvRow>& rows) {
  std::ostringstream os;
  write_csv(os, rows);
  write_text_file(path, os.str());
}

std::vector<CsvRow> read_csv(std::istream& is) {
  std::string line;
  std::vector<CsvRow> rows;
  bool header = false;
  int no = 0;
  while (std::getline(is, line)) {
    ++no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      if (line != csv_header()) throw Error(ErrorKind::ParseError, "csv: unexpected header '" + line + "'");
      header = true;
      continue;
    }
    const auto f = split(line, ',');
    if (f.size() != 10) throw Error(ErrorKind::ParseError, "csv line " + std::to_string(no) + ": expected 10 fields");
    CsvRow r;
    r.L = to_int32("L", f[0]);
    r.r = to_int32("r", f[1]);
    r.t = to_double("t", f[2]);
    r.seed = static_cast<std::uint64_t>(to_int("seed", f[3]));
    r.observable = f[4];
    r.mean = to_double("mean", f[5]);
    r.stderr_ = to_double("stderr", f[6]);
    r.tau_int = to_double("tau_int", f[7]);
    r.n_outer = to_int("n_outer", f[8]);
    r.n_inner = to_int("n_inner", f[9]);
    rows.push_back(std::move(r));
  }
  if (!header) throw Error(ErrorKind::ParseError, "csv: missing header");
  return rows;
}

std::vector<CsvRow> read_csv_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorKind::Io, "cannot open " + path);
  return read_csv(is);
}

std::vector<CsvRow> comb_rows(const CombResult& res, int L, int r, double t_pi, std::uint64_t seed,
                              const std::vector<EstimatorSpec>& estimators) {
  std::vector<CsvRow> rows;
  for (std::size_t i = 0; i < res.observables.size(); ++i) {
    const auto& o = res.observables[i];
    CsvRow row;
    row.L = L;
    row.r = r;
    row.t = t_pi;
    row.seed = seed;
    row.observable = o.name;
    row.mean = o.stats.mean;
    row.stderr_ = o.stats.stderr_;
    row.tau_int = o.stats.tau_int;
    row.n_outer = o.stats.n;
    const bool replica = i < estimators.size() && estimators[i].cls == EstimatorClass::Replica;
    row.n_inner = replica ? res.stats.inner_samples : 0;
    rows.push_back(std::move(row));
  }
  return rows;
}

// --- provenance and checkpoints ------------------------------------------------------

void write_provenance(const std::string& path, const Provenance& p) {
  json j = {{"config", p.config},
            {"seed", p.seed},
            {"version", p.version},
            {"wall_seconds", p.wall_seconds},
            {"threads", p.threads},
            {"overrides", p.overrides},
            {"notes", p.notes}};
  write_text_file(path, j.dump(2) + "\n");
}

std::string fingerprint(const RunConfig& cfg) {
  RunConfig c = cfg;
  // keys that do not change the numbers
  c.out = "";
  c.resume = "";
  c.threads = 0;
  c.checkpoint_every = 0;
  c.overrides.clear();
  return dump_config(c);
}

std::string checkpoint_to_json(const RunCheckpoint& ck) {
  json chains = json::array();
  for (const auto& c : ck.comb.chains) {
    chains.push_back({{"sweep", c.sweep},
                      {"branches", c.branches},
                      {"net", net_string(c.net)},
                      {"rng", c.rng},
                      {"stats", stats_json(c.stats)}});
  }
  json j = {{"format", "hfc-checkpoint"},
            {"version", kCheckpointVersion},
            {"code_version", code_version()},
            {"fingerprint", ck.fingerprint},
            {"point", ck.point},
            {"rows", ck.rows},
            {"has_comb", ck.has_comb},
            {"chains", chains}};
  return j.dump(1);
}

RunCheckpoint checkpoint_from_json(const std::string& text) {
  RunCheckpoint ck;
  try {
    const json j = json::parse(text);
    if (j.at("format").get<std::string>() != "hfc-checkpoint") {
      throw Error(ErrorKind::ParseError, "not a checkpoint file");
    }
    const int v = j.at("version").get<int>();
    if (v != kCheckpointVersion) {
      throw Error(ErrorKind::ValidationError, "checkpoint version " + std::to_string(v) + " is not supported");
    }
    ck.fingerprint = j.at("fingerprint").get<std::string>();
    ck.point = j.at("point").get<int>();
    ck.rows = j.at("rows").get<std::vector<std::string>>();
    ck.has_comb = j.at("has_comb").get<bool>();
    for (const auto& c : j.at("chains")) {
      ChainState st;
      st.sweep = c.at("sweep").get<int>();
      st.branches = c.at("branches").get<int>();
      st.net = net_from(c.at("net").get<std::string>());
      st.rng = c.at("rng").get<std::string>();
      st.stats = stats_from(c.at("stats"));
      ck.comb.chains.push_back(std::move(st));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ParseError, std::string("checkpoint: ") + e.what());
  }
  return ck;
}

void save_checkpoint(const std::string& path, const RunCheckpoint& ck) {
  const std::string tmp = path + ".tmp";
  write_text_file(tmp, checkpoint_to_json(ck));
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot write checkpoint " + path + ": " + ec.message());
}

RunCheckpoint load_checkpoint(const std::string& path) { return checkpoint_from_json(read_text_file(path)); }

std::string oracle_report_json(const std::vector<OracleCase>& cases, double tolerance) {
  json list = json::array();
  double worst = 0.0;
  for (const auto& c : cases) {
    const double dev = c.report.max_deviation();
    worst = std::max(worst, dev);
    list.push_back({{"graph", c.graph},
                    {"rounds", c.rounds},
                    {"t_over_pi", c.report.t / M_PI},
                    {"records", c.report.records},
                    {"total_probability", c.report.total_prob},
                    {"max_dev_probability", c.report.max_dev_prob},
                    {"max_dev_parity", c.report.max_dev_parity},
                    {"max_dev_flux", c.report.max_dev_flux},
                    {"weighted_dev", c.report.weighted_dev},
                    {"pass", dev <= tolerance}});
  }
  json j = {{"tolerance", tolerance}, {"max_deviation", worst}, {"pass", worst <= tolerance}, {"cases", list}};
  return j.dump(2) + "\n";
}

std::string read_text_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorKind::Io, "cannot open " + path);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  const auto parent = std::filesystem::path(path).parent_path();
  std::error_code ec;
  if (!parent.empty()) std::filesystem::create_directories(parent, ec);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error(ErrorKind::Io, "cannot write " + path);
  os << text;
  if (!os) throw Error(ErrorKind::Io, "write failed: " + path);
}

}  // namespace hfc
