#include <cmath>
#include <filesystem>
#include <sstream>

#include "doctest.h"
#include "hfc/driver.hpp"
#include "hfc/error.hpp"

using namespace hfc;

namespace {

std::string scratch(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("hfc_test_io_" + name);
  std::filesystem::remove_all(p);
  return p.string();
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error thrown");
  return ErrorKind::InvalidArgument;
}

RunConfig small_sweep(const std::string& out) {
  RunConfig c;
  c.mode = "sweep";
  c.L = 3;
  c.t = {0.1, 0.18};
  c.comb.outer_sweeps = 60;
  c.comb.burn_in = 10;
  c.comb.branch_interval = 10;
  c.comb.inner_sweeps = 10;
  c.comb.chains = 2;
  c.comb.seed = 99;
  c.out = out;
  return c;
}

}  // namespace

TEST_CASE("config: minimal file fills the defaults") {
  RunConfig c;
  parse_config_text(c, "# smallest run\nL = 3\nt = 0.125\n");
  c.validate();
  CHECK(c.depth() == 3);
  CHECK(c.t_points() == std::vector<double>{0.125});
  CHECK(c.comb.outer_sweeps == 2000);
  CHECK(c.comb.burn_in == 500);
  CHECK(c.comb.branch_interval == 100);
  CHECK(c.comb.inner_sweeps == 1000);
}

TEST_CASE("config: errors name the key") {
  RunConfig c;
  CHECK(kind_of([&] { parse_config_text(c, "L = 3\nsweeps = 4\n"); }) == ErrorKind::ParseError);
  CHECK(kind_of([&] { parse_config_text(c, "L = three\n"); }) == ErrorKind::ParseError);
  CHECK(kind_of([&] { parse_config_text(c, "just words\n"); }) == ErrorKind::ParseError);
  RunConfig bad;
  parse_config_text(bad, "L = 4\nt = 0.1\n");
  try {
    bad.validate();
    FAIL("L = 4 accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ValidationError);
    CHECK(std::string(e.what()).find("'L'") != std::string::npos);
  }
  RunConfig wide;
  parse_config_text(wide, "t = 0.3\n");
  CHECK(kind_of([&] { wide.validate(); }) == ErrorKind::ValidationError);
}

TEST_CASE("config: later values win and the dump parses back") {
  RunConfig c;
  parse_config_text(c, "L = 3\nt = 0.1, 0.2\nt_grid = 0.05:0.25:5\nseed = 17\n");
  set_config_value(c, "L", "6");
  CHECK(c.L == 6);
  CHECK(c.t_points().size() == 7);
  CHECK(c.t_points()[6] == doctest::Approx(0.25));
  RunConfig d;
  parse_config_text(d, dump_config(c));
  CHECK(dump_config(d) == dump_config(c));
  CHECK(fingerprint(d) == fingerprint(c));
  d.out = "elsewhere";
  d.threads = 4;
  CHECK(fingerprint(d) == fingerprint(c));
  d.comb.seed = 18;
  CHECK(fingerprint(d) != fingerprint(c));
}

TEST_CASE("csv round trip is exact") {
  CsvRow r;
  r.L = 6;
  r.r = 6;
  r.t = 0.1 + 0.2;
  r.seed = 5;
  r.observable = "flux_ea";
  r.mean = 1.0 / 3.0;
  r.stderr_ = std::nan("");
  r.tau_int = 2.5e-7;
  r.n_outer = 1500;
  r.n_inner = 12;
  std::stringstream ss;
  write_csv(ss, {r});
  CHECK(ss.str().rfind("# hfc-csv version 1", 0) == 0);
  const auto back = read_csv(ss);
  REQUIRE(back.size() == 1);
  CHECK(back[0].t == r.t);
  CHECK(back[0].mean == r.mean);
  CHECK(std::isnan(back[0].stderr_));
  CHECK(format_row(back[0]) == format_row(r));
  std::stringstream wrong("a,b\n1,2\n");
  CHECK_THROWS_AS(read_csv(wrong), Error);
}

TEST_CASE("checkpoint json round trip keeps every bit") {
  Binning b;
  for (int i = 0; i < 37; ++i) b.add(std::sin(0.3 * i) / 7.0);
  ChainState st;
  st.sweep = 12;
  st.branches = 2;
  st.net = {1, -1, -1, 1};
  st.rng = save_rng(make_rng(1, 2, 3));
  st.stats.bins["x"] = b;
  st.stats.outer_samples = 37;
  RunCheckpoint ck{"fp", 3, {"row"}, true, CombCheckpoint{{st}}};
  const auto back = checkpoint_from_json(checkpoint_to_json(ck));
  CHECK(back.fingerprint == "fp");
  CHECK(back.point == 3);
  REQUIRE(back.comb.chains.size() == 1);
  const auto& c = back.comb.chains[0];
  CHECK(c.net == st.net);
  CHECK(c.rng == st.rng);
  const auto& lv = c.stats.bins.at("x").levels();
  REQUIRE(lv.size() == b.levels().size());
  for (std::size_t k = 0; k < lv.size(); ++k) {
    CHECK(lv[k].mean == b.levels()[k].mean);
    CHECK(lv[k].m2 == b.levels()[k].m2);
    CHECK(lv[k].pending == b.levels()[k].pending);
  }
  CHECK(kind_of([] { checkpoint_from_json("{\"format\":\"other\"}"); }) == ErrorKind::ParseError);
}

TEST_CASE("driver: identical runs and resumed runs give byte-identical CSV") {
  const auto dir = scratch("resume");
  auto cfg = small_sweep(dir + "/a");
  const auto a = run_comb_points(cfg);
  const std::string first = read_text_file(a.csv_path);
  CHECK(a.rows.size() > 10);

  cfg.out = dir + "/b";
  const std::string second = read_text_file(run_comb_points(cfg).csv_path);
  CHECK(first == second);

  // interrupt inside the second point, then resume
  cfg.out = dir + "/c";
  cfg.checkpoint_every = 25;
  DriverHooks stop;
  stop.stop_after = 4;
  CHECK(kind_of([&] { run_comb_points(cfg, stop); }) == ErrorKind::Io);
  const std::string ck = dir + "/c/sweep.checkpoint.json";
  const auto partial = load_checkpoint(ck);
  CHECK(partial.point == 1);
  CHECK(partial.has_comb);
  cfg.resume = ck;
  CHECK(read_text_file(run_comb_points(cfg).csv_path) == first);

  // a checkpoint from another configuration is refused
  auto other = cfg;
  other.comb.seed = 100;
  CHECK(kind_of([&] { run_comb_points(other); }) == ErrorKind::ValidationError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("driver: sweep emits every observable per point") {
  const auto dir = scratch("rows");
  auto cfg = small_sweep(dir);
  cfg.t = {0.05, 0.1, 0.15};
  const auto out = run_comb_points(cfg);
  const auto est = estimators_for(cfg, Lattice::honeycomb(3));
  int flux = 0;
  for (const auto& r : out.rows) flux += r.observable == "flux_ea";
  CHECK(flux == 3);
  CHECK(out.rows.size() == 3 * (est.size() + 3));
  CHECK(std::filesystem::exists(out.provenance_path));
  cfg.observables = {"flux_cross", "nonsense"};
  CHECK(kind_of([&] { estimators_for(cfg, Lattice::honeycomb(3)); }) == ErrorKind::ValidationError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("driver: fits read the CSV schema") {
  const auto dir = scratch("fit");
  std::vector<CsvRow> rows;
  for (int L : {3, 6}) {
    for (double t : {0.1, 0.125, 0.15, 0.175, 0.2, 0.225}) {
      CsvRow r;
      r.L = L;
      r.r = L;
      r.t = t;
      r.observable = "flux_ea";
      r.mean = flux_ea_ansatz(t * M_PI, L);
      r.stderr_ = 0.01;
      rows.push_back(r);
    }
  }
  write_csv_file(dir + "/w.csv", rows);
  RunConfig c;
  c.mode = "fit";
  c.fit_kind = "threshold";
  c.inputs = {dir + "/w.csv"};
  const std::string rep = run_fit(c);
  CHECK(rep.find("\"t_c\"") != std::string::npos);
  c.fit_kind = "collapse";
  CHECK(run_fit(c).find("max_dev") != std::string::npos);
  c.observable = "missing";
  CHECK(kind_of([&] { run_fit(c); }) == ErrorKind::InsufficientData);
  std::filesystem::remove_all(dir);
}

TEST_CASE("oracle check writes a passing report") {
  const auto dir = scratch("oracle");
  RunConfig c;
  c.mode = "oracle-check";
  c.out = dir;
  std::string rep;
  CHECK(run_oracle_check(c, &rep));
  CHECK(rep.find("\"pass\": true") != std::string::npos);
  CHECK(std::filesystem::exists(dir + "/oracle_report.json"));
  std::filesystem::remove_all(dir);
}
