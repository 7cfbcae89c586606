#include <cmath>
#include <random>

#include "doctest.h"
#include "hfc/binning.hpp"
#include "hfc/error.hpp"
#include "hfc/rng.hpp"

using namespace hfc;

TEST_CASE("iid series: stderr and tau") {
  Rng rng = make_rng(5, 0, 0);
  std::normal_distribution<double> nd;
  for (int rep = 0; rep < 5; ++rep) {
    std::vector<double> xs(1 << 14);
    for (auto& x : xs) x = nd(rng);
    const auto r = binned(xs);
    CHECK(r.stderr_ == doctest::Approx(std::pow(2.0, -7)).epsilon(0.2));
    CHECK(r.tau_int == doctest::Approx(0.5).epsilon(0.3));
    CHECK(r.n == (1 << 14));
  }
}

TEST_CASE("AR(1) series: integrated autocorrelation time") {
  Rng rng = make_rng(6, 0, 0);
  std::normal_distribution<double> nd;
  const double rho = 0.9;
  for (int rep = 0; rep < 5; ++rep) {
    double x = nd(rng) / std::sqrt(1 - rho * rho);
    std::vector<double> xs(1 << 14);
    for (auto& v : xs) {
      x = rho * x + nd(rng);
      v = x;
    }
    const auto r = binned(xs);
    CHECK(r.tau_int == doctest::Approx(9.5).epsilon(0.3));
  }
}

TEST_CASE("constant series and short series") {
  CHECK(binned(std::vector<double>(100, 3.25)).stderr_ == 0.0);
  CHECK(binned(std::vector<double>(100, 3.25)).mean == 3.25);
  try {
    binned(std::vector<double>(7, 1.0));
    FAIL("expected series-too-short");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::SeriesTooShort);
  }
}

TEST_CASE("merging independent accumulators") {
  Rng rng = make_rng(7, 0, 0);
  std::normal_distribution<double> nd;
  Binning a;
  Binning b;
  Binning all;
  double sum = 0.0;
  for (int i = 0; i < 4096; ++i) {
    const double x = 2.0 + nd(rng);
    (i < 2048 ? a : b).add(x);
    all.add(x);
    sum += x;
  }
  Binning m = a;
  m.merge(b);
  CHECK(m.count() == 4096);
  CHECK(m.mean() == doctest::Approx(sum / 4096).epsilon(1e-12));
  CHECK(m.result().stderr_ == doctest::Approx(all.result().stderr_).epsilon(0.1));
  // commutative up to rounding
  Binning m2 = b;
  m2.merge(a);
  CHECK(m2.mean() == doctest::Approx(m.mean()).epsilon(1e-14));
}
