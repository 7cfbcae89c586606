#include "hfc/driver.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <map>
#include <numbers>
#include <omp.h>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "hfc/error.hpp"

namespace hfc {

using nlohmann::json;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string out_file(const RunConfig& cfg, const std::string& suffix) {
  return (std::filesystem::path(cfg.out) / (cfg.mode + suffix)).string();
}

std::vector<CsvRow> parse_rows(const std::vector<std::string>& lines) {
  std::stringstream ss;
  ss << csv_header() << "\n";
  for (const auto& l : lines) ss << l << "\n";
  return read_csv(ss);
}

CsvRow diag_row(int L, int r, double t, std::uint64_t seed, const std::string& name, double value, std::int64_t n) {
  CsvRow row;
  row.L = L;
  row.r = r;
  row.t = t;
  row.seed = seed;
  row.observable = name;
  row.mean = value;
  row.stderr_ = 0.0;
  row.tau_int = 0.0;
  row.n_outer = n;
  return row;
}

Provenance make_provenance(const RunConfig& cfg, double wall) {
  Provenance p;
  p.config = dump_config(cfg);
  p.seed = cfg.comb.seed;
  p.version = code_version();
  p.wall_seconds = wall;
  p.threads = omp_get_max_threads();
  p.overrides = cfg.overrides;
  return p;
}

}  // namespace

std::vector<EstimatorSpec> estimators_for(const RunConfig& cfg, const Lattice& lattice) {
  std::vector<EstimatorSpec> all;
  if (cfg.mode == "negativity-scan") {
    all = {flux_cross(), negativity_average(), thermal_estimator(EstimatorKind::Entropy)};
  } else {
    all = default_estimators(lattice, cfg.replica, cfg.negativity);
  }
  if (cfg.observables.empty()) return all;
  std::vector<EstimatorSpec> pick;
  for (const auto& name : cfg.observables) {
    auto it = std::find_if(all.begin(), all.end(), [&](const EstimatorSpec& e) { return e.name == name; });
    if (it == all.end()) {
      // allow the estimators a mode leaves out by default
      auto full = default_estimators(lattice, true, true);
      it = std::find_if(full.begin(), full.end(), [&](const EstimatorSpec& e) { return e.name == name; });
      if (it == full.end()) throw Error(ErrorKind::ValidationError, "key 'observables': unknown observable '" + name + "'");
      pick.push_back(*it);
    } else {
      pick.push_back(*it);
    }
  }
  return pick;
}

RunOutput run_comb_points(const RunConfig& cfg, const DriverHooks& hooks) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const Lattice lat = Lattice::honeycomb(cfg.L);
  const int r = cfg.depth();
  const Schedule sch = Schedule::floquet(lat, r);
  const auto est = estimators_for(cfg, lat);
  const auto points = cfg.t_points();
  const std::string fp = fingerprint(cfg);
  const std::string ck_path = out_file(cfg, ".checkpoint.json");

  RunCheckpoint resume;
  int start = 0;
  std::vector<std::string> lines;
  if (!cfg.resume.empty()) {
    resume = load_checkpoint(cfg.resume);
    if (resume.fingerprint != fp) {
      throw Error(ErrorKind::ValidationError, "checkpoint " + cfg.resume + " was written by a different configuration");
    }
    start = resume.point;
    lines = resume.rows;
  }

  int writes = 0;
  std::vector<std::string> notes;
  for (int i = start; i < static_cast<int>(points.size()); ++i) {
    const double tpi = points[i];
    const auto ms = MeasurementStrength::from_t_over_pi(tpi);
    CombControl ctl;
    ctl.checkpoint_every = cfg.checkpoint_every;
    if (cfg.checkpoint_every > 0) {
      ctl.sink = [&, i](const CombCheckpoint& c) {
        save_checkpoint(ck_path, RunCheckpoint{fp, i, lines, true, c});
        if (hooks.stop_after > 0 && ++writes >= hooks.stop_after) throw Error(ErrorKind::Io, "interrupted");
      };
    }
    if (i == start && resume.has_comb) ctl.resume = &resume.comb;
    const auto res = run_comb(cfg.comb, ms, lat, sch, est, ctl);

    auto rows = comb_rows(res, cfg.L, r, tpi, cfg.comb.seed, est);
    const auto& st = res.stats;
    rows.push_back(diag_row(cfg.L, r, tpi, cfg.comb.seed, "equilibration_sigma", res.equilibration_sigma,
                            st.outer_samples));
    if (st.outer_proposals > 0) {
      rows.push_back(diag_row(cfg.L, r, tpi, cfg.comb.seed, "outer_acceptance",
                              static_cast<double>(st.outer_accepted) / static_cast<double>(st.outer_proposals),
                              st.outer_proposals));
    }
    if (st.inner_proposals > 0) {
      rows.push_back(diag_row(cfg.L, r, tpi, cfg.comb.seed, "inner_acceptance",
                              static_cast<double>(st.inner_accepted) / static_cast<double>(st.inner_proposals),
                              st.inner_proposals));
    }
    for (const auto& row : rows) lines.push_back(format_row(row));
    if (!res.equilibrated) {
      notes.push_back("t = " + format_double(tpi) + ": flux cross-correlation off by " +
                      format_double(res.equilibration_sigma) + " sigma; treat as not equilibrated");
    }
    if (cfg.checkpoint_every > 0) save_checkpoint(ck_path, RunCheckpoint{fp, i + 1, lines, false, {}});
    if (hooks.progress) {
      std::ostringstream os;
      os << cfg.mode << " L=" << cfg.L << " r=" << r << " t=" << tpi << "pi done (" << (i + 1) << "/"
         << points.size() << ", " << seconds_since(t0) << " s)";
      hooks.progress(os.str());
    }
  }

  RunOutput out;
  out.rows = parse_rows(lines);
  out.csv_path = out_file(cfg, ".csv");
  out.provenance_path = out_file(cfg, ".provenance.json");
  out.wall_seconds = seconds_since(t0);
  std::ostringstream os;
  os << "# hfc-csv version " << kCsvVersion << "; t in units of pi\n" << csv_header() << "\n";
  for (const auto& l : lines) os << l << "\n";
  write_text_file(out.csv_path, os.str());
  auto prov = make_provenance(cfg, out.wall_seconds);
  prov.notes = notes;
  if (!cfg.resume.empty()) prov.notes.push_back("resumed from " + cfg.resume);
  write_provenance(out.provenance_path, prov);
  return out;
}

RunOutput run_kitaev(const RunConfig& cfg, const DriverHooks& hooks) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const Lattice lat = Lattice::honeycomb(cfg.L);
  std::vector<double> betas = cfg.beta;
  if (betas.empty()) {
    // temperature grid 1e-2 .. 1e1, logarithmic
    for (int k = 0; k < 16; ++k) betas.push_back(1.0 / std::pow(10.0, -2.0 + 3.0 * k / 15.0));
  }
  std::vector<CsvRow> rows;
  auto push = [&](double beta, const std::string& name, const BinnedStats& s, std::int64_t n) {
    CsvRow row;
    row.L = cfg.L;
    row.r = 0;
    row.t = beta;
    row.seed = cfg.comb.seed;
    row.observable = "ht_" + name;
    row.mean = s.mean;
    row.stderr_ = s.stderr_;
    row.tau_int = s.tau_int;
    row.n_outer = n;
    rows.push_back(row);
  };
  if (cfg.L == 3 && cfg.kitaev_exact) {
    for (const auto& p : exact_flux_sum(lat, betas)) {
      auto exact = [](double v) {
        BinnedStats s;
        s.mean = v;
        s.stderr_ = 0.0;
        s.tau_int = 0.0;
        return s;
      };
      push(p.beta, "energy", exact(p.energy), 0);
      push(p.beta, "C_v", exact(p.c_v), 0);
      push(p.beta, "C_v_deriv", exact(p.c_v_deriv), 0);
      push(p.beta, "flux", exact(p.flux), 0);
      push(p.beta, "negativity", exact(p.negativity), 0);
      push(p.beta, "free_energy", exact(p.free_energy), 0);
    }
  } else {
    std::vector<KitaevMcResult> res(betas.size());
    std::vector<std::exception_ptr> errors(betas.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (int k = 0; k < static_cast<int>(betas.size()); ++k) {
      try {
        KitaevMcConfig mc;
        mc.sweeps = cfg.kitaev_sweeps;
        mc.burn_in = cfg.kitaev_burn_in;
        mc.seed = cfg.comb.seed;
        res[k] = flux_mc(lat, betas[k], mc);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
    for (const auto& e : errors)
      if (e) std::rethrow_exception(e);
    for (const auto& m : res) {
      push(m.beta, "energy", m.energy, m.energy.n);
      push(m.beta, "C_v", m.c_v, m.c_v.n);
      push(m.beta, "flux", m.flux, m.flux.n);
      push(m.beta, "negativity", m.negativity, m.negativity.n);
      BinnedStats acc;
      acc.mean = m.acceptance;
      acc.stderr_ = 0.0;
      acc.tau_int = 0.0;
      push(m.beta, "acceptance", acc, m.energy.n);
      if (hooks.progress) hooks.progress("kitaev L=" + std::to_string(cfg.L) + " beta=" + format_double(m.beta) + " done");
    }
  }
  RunOutput out;
  out.rows = rows;
  out.csv_path = out_file(cfg, ".csv");
  out.provenance_path = out_file(cfg, ".provenance.json");
  out.wall_seconds = seconds_since(t0);
  write_csv_file(out.csv_path, rows);
  auto prov = make_provenance(cfg, out.wall_seconds);
  prov.notes.push_back("t column holds beta; fermions antiperiodic in both directions");
  write_provenance(out.provenance_path, prov);
  return out;
}

bool run_oracle_check(const RunConfig& cfg, std::string* report) {
  std::vector<double> ts = cfg.t;
  if (ts.empty()) ts = {0.05, 0.125, 0.2, 0.24};
  std::vector<OracleCase> cases;
  {
    auto [lat, sch] = build_custom_graph(hexagon_spec());
    for (double tpi : ts) cases.push_back({"hexagon", sch.num_rounds(), crosscheck(lat, sch, tpi * std::numbers::pi)});
  }
  {
    auto [lat, sch] = build_custom_graph(single_bond_spec(3));
    for (double tpi : ts) cases.push_back({"single_bond", sch.num_rounds(), crosscheck(lat, sch, tpi * std::numbers::pi)});
  }
  constexpr double tol = 1e-9;
  const std::string text = oracle_report_json(cases, tol);
  write_text_file((std::filesystem::path(cfg.out) / "oracle_report.json").string(), text);
  if (report) *report = text;
  for (const auto& c : cases)
    if (!(c.report.max_deviation() <= tol)) return false;
  return true;
}

std::string run_fit(const RunConfig& cfg) {
  cfg.validate();
  std::vector<CsvRow> rows;
  for (const auto& path : cfg.inputs) {
    auto part = read_csv_file(path);
    rows.insert(rows.end(), part.begin(), part.end());
  }
  json rep = {{"fit", cfg.fit_kind}, {"inputs", cfg.inputs}};
  auto select = [&](const std::string& fallback) {
    const std::string name = cfg.observable.empty() ? fallback : cfg.observable;
    std::vector<CsvRow> out;
    for (const auto& r : rows)
      if (r.observable == name) out.push_back(r);
    if (out.empty()) throw Error(ErrorKind::InsufficientData, "no rows for observable '" + name + "'");
    rep["observable"] = name;
    return out;
  };

  if (cfg.fit_kind == "threshold") {
    std::map<int, std::vector<CsvRow>> by_l;
    for (const auto& r : select("flux_ea")) by_l[r.L].push_back(r);
    json list = json::array();
    for (auto& [L, v] : by_l) {
      std::sort(v.begin(), v.end(), [](const CsvRow& a, const CsvRow& b) { return a.t < b.t; });
      std::vector<double> t, w, e;
      for (const auto& r : v) {
        t.push_back(r.t);
        w.push_back(r.mean);
        e.push_back(std::isfinite(r.stderr_) ? r.stderr_ : 0.0);
      }
      json item = {{"L", L}};
      try {
        const auto c = pseudo_threshold(t, w, e);
        item["t_c"] = c.t_c;
        item["t_c_err"] = c.err;
      } catch (const Error& ex) {
        item["error"] = ex.what();
      }
      list.push_back(item);
    }
    rep["thresholds"] = list;
  } else if (cfg.fit_kind == "collapse") {
    json list = json::array();
    double worst = 0.0;
    for (const auto& r : select("flux_ea")) {
      const double t = r.t * std::numbers::pi;
      const double y = collapse_transform(r.mean, r.r);
      const double ref = std::pow(std::sin(2.0 * t), 12);
      if (r.t >= 0.1 - 1e-12 && r.t <= 0.22 + 1e-12) worst = std::max(worst, std::abs(y - ref));
      list.push_back({{"L", r.L}, {"r", r.r}, {"t", r.t}, {"collapse", y}, {"sin12", ref}});
    }
    rep["points"] = list;
    rep["max_dev_0.1_0.22"] = worst;
  } else if (cfg.fit_kind == "z") {
    std::map<double, std::vector<ScalingPoint>> by_t;
    for (const auto& r : select("entropy")) by_t[r.t].push_back({r.L, r.r, r.mean, r.stderr_});
    json list = json::array();
    for (const auto& [t, pts] : by_t) {
      json item = {{"t", t}};
      try {
        const auto f = fit_z(pts);
        item["z"] = f.z;
        item["z_err"] = f.z_err();
        item["a"] = f.a;
      } catch (const Error& ex) {
        item["error"] = ex.what();
      }
      list.push_back(item);
    }
    rep["fits"] = list;
  } else {
    std::map<double, std::vector<CsvRow>> by_t;
    for (const auto& r : select("negativity")) by_t[r.t].push_back(r);
    json list = json::array();
    for (auto& [t, v] : by_t) {
      std::sort(v.begin(), v.end(), [](const CsvRow& a, const CsvRow& b) { return a.L < b.L; });
      std::vector<int> L;
      std::vector<double> val, err;
      for (const auto& r : v) {
        L.push_back(r.L);
        val.push_back(r.mean);
        err.push_back(r.stderr_);
      }
      json item = {{"t", t}};
      try {
        const auto f = negativity_fit(L, val, err);
        item["c1"] = f.c1;
        item["c2"] = f.c2;
        item["c2_err"] = f.c2_err();
      } catch (const Error& ex) {
        item["error"] = ex.what();
      }
      list.push_back(item);
    }
    rep["fits"] = list;
  }
  return rep.dump(2) + "\n";
}

void lattice_info(const RunConfig& cfg, std::ostream& os, bool dump_bonds) {
  const Lattice lat = Lattice::honeycomb(cfg.L);
  const Schedule sch = Schedule::floquet(lat, cfg.depth());
  os << "L = " << cfg.L << "\n"
     << "sites = " << lat.num_sites() << "\n"
     << "bonds = " << lat.num_bonds() << "\n"
     << "plaquettes = " << lat.num_plaquettes() << "\n"
     << "r = " << cfg.depth() << "\n"
     << "rounds = " << sch.num_rounds() << "\n"
     << "slots = " << sch.num_slots() << "\n"
     << "final_windows = " << sch.final_windows().size() << "\n";
  if (dump_bonds) {
    os << "bond_id,site_a,site_b,color\n";
    for (const auto& b : lat.bonds()) os << b.id << "," << b.a << "," << b.b << "," << to_char(b.color) << "\n";
  }
}

}  // namespace hfc
