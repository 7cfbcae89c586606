#include <cmath>
#include <numbers>

#include "doctest.h"
#include "hfc/error.hpp"
#include "hfc/observables.hpp"

using namespace hfc;
using std::numbers::pi;

TEST_CASE("reference curves") {
  CHECK(flux_cross_exact(pi / 8) == doctest::Approx(0.125));
  CHECK(parity_cross_exact(pi / 12) == doctest::Approx(0.5));
  CHECK(su_ansatz(0.0, 3) == doctest::Approx(1.0));
  CHECK(su_ansatz(pi / 4, 3) == doctest::Approx(0.0));
  CHECK(flux_ea_ansatz(0.0, 6) == doctest::Approx(0.0));
  CHECK(flux_ea_ansatz(pi / 4, 6) == doctest::Approx(1.0));
  CHECK(clifford_negativity(6) == doctest::Approx(2.0 * std::numbers::ln2));
  CHECK(clifford_lambda0_per_n(3) == doctest::Approx(-std::numbers::ln2 / 4.0));
}

TEST_CASE("collapse transform inverts the ansatz") {
  for (int r : {3, 6, 9}) {
    for (double tpi : {0.05, 0.1, 0.15, 0.2, 0.24}) {
      const double t = tpi * pi;
      CHECK(collapse_transform(flux_ea_ansatz(t, r), r) == doctest::Approx(std::pow(std::sin(2 * t), 12)).epsilon(1e-9));
    }
  }
  CHECK(collapse_transform(1.0, 3) == doctest::Approx(1.0));
  CHECK(collapse_transform(0.0, 3) == doctest::Approx(0.0));
}

TEST_CASE("pseudo-threshold") {
  const std::vector<double> t = {0.1, 0.15, 0.2, 0.25};
  const std::vector<double> w = {0.1, 0.3, 0.7, 0.9};
  const auto c = pseudo_threshold(t, w, {0.01, 0.01, 0.01, 0.01});
  CHECK(c.t_c == doctest::Approx(0.175));
  CHECK(c.err > 0.0);
  CHECK(pseudo_threshold(t, {0.1, 0.5, 0.7, 0.9}).t_c == doctest::Approx(0.15));
  try {
    pseudo_threshold(t, {0.1, 0.2, 0.3, 0.4});
    FAIL("expected NoCrossing");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NoCrossing);
  }
  CHECK_THROWS_AS(pseudo_threshold(t, {0.1}), Error);
}

TEST_CASE("fit_z recovers synthetic parameters") {
  std::vector<ScalingPoint> pts;
  for (int L : {3, 6, 9, 12}) {
    const int r = 2 * L;
    pts.push_back({L, r, std::exp(-2.0 * r / L), 1e-4});
  }
  const auto fit = fit_z(pts);
  CHECK(fit.z == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(fit.a == doctest::Approx(2.0).epsilon(1e-9));
  pts.resize(2);
  try {
    fit_z(pts);
    FAIL("expected InsufficientData");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::InsufficientData);
  }
}

TEST_CASE("negativity fit recovers synthetic parameters") {
  const std::vector<int> L = {3, 6, 9};
  std::vector<double> v;
  for (int l : L) v.push_back((0.7 * l + 0.2 * l * std::log(l)) * std::numbers::ln2 / 3.0);
  const auto fit = negativity_fit(L, v, {0.01, 0.01, 0.01});
  CHECK(fit.c1 == doctest::Approx(0.7).epsilon(1e-9));
  CHECK(fit.c2 == doctest::Approx(0.2).epsilon(1e-9));
  CHECK(fit.c2_err() >= 0.0);
  // Clifford limit: pure area law
  std::vector<double> area;
  for (int l : L) area.push_back(clifford_negativity(l));
  const auto flat = negativity_fit(L, area);
  CHECK(std::abs(flat.c2) < 1e-9);
  CHECK(flat.c1 == doctest::Approx(1.0));
}

TEST_CASE("specific heat from one branch") {
  EstimatorContext ctx;
  ctx.beta = 4.0;
  ctx.n_majorana = 8;
  // E = {1, 3}: unbiased variance 2, mean varE 0.5
  const double cv = specific_heat_branch(ctx, 4.0, 10.0, 1.0, 2);
  CHECK(cv == doctest::Approx(16.0 / 8.0 * 2.5));
}
