#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "fock.hpp"
#include "hfc/circuit.hpp"
#include "hfc/error.hpp"
#include "hfc/gaussian.hpp"

using namespace hfc;

namespace {

template <class E>
double max_abs(const Eigen::MatrixBase<E>& m) {
  return m.cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("compose has the zero covariance as identity") {
  std::mt19937_64 rng(3);
  for (int rep = 0; rep < 20; ++rep) {
    const Mat x = fock::random_antisymmetric(8, 0.3, rng);
    const Mat zero = Mat::Zero(8, 8);
    const CMat xc = x.cast<std::complex<double>>();
    CHECK(max_abs(compose(x, zero) - xc) <= 1e-12);
    CHECK(max_abs(compose(zero, x) - xc) <= 1e-12);
    CHECK(max_abs(compose_real_part(x, zero) - x) <= 1e-12);
  }
}

TEST_CASE("compose and trace rule against Fock space products") {
  std::mt19937_64 rng(11);
  for (int m : {2, 3}) {
    const auto c = fock::majoranas(m);
    const int n = 2 * m;
    for (int rep = 0; rep < 25; ++rep) {
      const auto hx = fock::random_antisymmetric(n, 0.8, rng);
      const auto hy = fock::random_antisymmetric(n, 0.8, rng);
      const fock::CM x = fock::gaussian_operator(hx, c);
      const fock::CM y = fock::gaussian_operator(hy, c);
      const Mat gx = fock::covariance(x, c);
      const Mat gy = fock::covariance(y, c);
      const CMat gxy = fock::covariance_c(x * y, c);
      const CMat comp = compose(gx, gy);
      CHECK(max_abs(comp - gxy) <= 1e-10);
      CHECK(max_abs(comp + comp.transpose()) <= 1e-10);
      CHECK(max_abs(compose_real_part(gx, gy) - gxy.real()) <= 1e-10);
      CHECK(max_abs(compose_real_part(gy, gx) - gxy.real()) <= 1e-10);
      // chained: K X K is Hermitian again
      const Mat kxk = sandwich(gx, gy);
      CHECK(max_abs(kxk - fock::covariance(x * y * x, c)) <= 1e-10);
      CHECK(antisymmetry_error(kxk) <= 1e-10);
      const double lhs = std::log((x * y).trace().real());
      const double rhs = std::log(x.trace().real()) + std::log(y.trace().real()) - 0.5 * n * std::log(2.0) +
                         log_trace_overlap(gx, gy);
      CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
    }
  }
}

TEST_CASE("pair update equals (1 + tP) X (1 + tP)") {
  std::mt19937_64 rng(5);
  const auto c = fock::majoranas(3);
  std::uniform_real_distribution<double> ut(-0.95, 0.95);
  for (int rep = 0; rep < 20; ++rep) {
    const auto h = fock::random_antisymmetric(6, 0.7, rng);
    const fock::CM x = fock::gaussian_operator(h, c);
    const int a = rep % 6;
    const int b = (a + 1 + rep % 5) % 6;
    const double t = ut(rng);
    const fock::CM k = fock::CM::Identity(8, 8) + t * fock::cplx(0, 1) * c[a] * c[b];
    const fock::CM y = k * x * k;
    Mat g = fock::covariance(x, c);
    const double dlog = pair_update(g, a, b, t);
    CHECK(max_abs(g - fock::covariance(y, c)) <= 1e-10);
    CHECK(dlog == doctest::Approx(std::log(y.trace().real() / x.trace().real())).epsilon(1e-10));
  }
}

TEST_CASE("parallel and serial kernels agree bitwise") {
  std::mt19937_64 rng(9);
  const int n = 200;
  Mat g = fock::random_antisymmetric(n, 0.05, rng);
  Mat h = g;
  for (int k = 0; k < 30; ++k) {
    const int a = (7 * k) % n;
    const int b = (13 * k + 1) % n;
    if (a == b) continue;
    const double x = pair_update(g, a, b, 0.3);
    const double y = pair_update_serial(h, a, b, 0.3);
    CHECK(x == y);
  }
  CHECK((g - h).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("layer by pair updates equals layer by double composition") {
  std::mt19937_64 rng(21);
  const auto lat = Lattice::honeycomb(3);
  const auto sch = Schedule::floquet(lat, 3);
  for (double tpi : {0.05, 0.125, 0.2, 0.24}) {
    const auto ms = MeasurementStrength::from_t_over_pi(tpi);
    auto traj = sample_uniform_trajectory(rng, sch);
    const auto ks = layer_kernels(ms, lat, sch, net_field(traj, sch));
    GaussianState a = GaussianState::maximally_mixed(lat.num_sites());
    GaussianState b = a;
    GaussianState c = a;
    for (const auto& k : ks) {
      apply_layer(a, k);
      apply_layer_by_composition(b, k);
      apply_layer_serial(c, k);
    }
    CHECK(max_abs(a.cov - b.cov) <= 1e-9);
    CHECK(a.log_weight == doctest::Approx(b.log_weight).epsilon(1e-10));
    CHECK(max_abs(a.cov - c.cov) == 0.0);
    CHECK(antisymmetry_error(a.cov) <= 1e-10);
  }
}

TEST_CASE("tau = 0 layers leave the identity alone") {
  const auto lat = Lattice::honeycomb(3);
  const auto sch = Schedule::floquet(lat, 3);
  const auto ms = MeasurementStrength::from_t(0.0);
  GaussianState s = GaussianState::maximally_mixed(lat.num_sites());
  const double start = s.log_weight;
  CHECK(start == doctest::Approx(9 * std::log(2.0)));
  for (const auto& k : layer_kernels(ms, lat, sch, std::vector<std::int8_t>(sch.num_slots(), 1))) {
    apply_layer(s, k);
    CHECK(s.log_weight == doctest::Approx(start));
  }
  CHECK(max_abs(s.cov) == 0.0);
}

TEST_CASE("single bond from the maximally mixed state: both outcomes 1/2") {
  auto [lat, sch] = build_custom_graph(single_bond_spec(1));
  for (double tpi : {0.05, 0.2}) {
    const auto ms = MeasurementStrength::from_t_over_pi(tpi);
    double total = 0.0;
    for (int s : {1, -1}) {
      double p = 0.0;
      for (int u : {1, -1}) {
        GaugeTrajectory g{{static_cast<std::int8_t>(s)}, {static_cast<std::int8_t>(u)}};
        p += std::exp(log_weight(ms, lat, sch, g) - log_normalization(ms, sch));
      }
      p *= std::pow(2.0, -1.0 - 1.0);
      CHECK(p == doctest::Approx(0.5).epsilon(1e-12));
      total += p;
    }
    CHECK(total == doctest::Approx(1.0));
  }
}

TEST_CASE("jacobi singular values") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g;
  Mat a(12, 12);
  for (int i = 0; i < 12; ++i)
    for (int j = 0; j < 12; ++j) a(i, j) = g(rng);
  const Vec ref = Eigen::JacobiSVD<Mat>(a).singularValues();
  const Vec got = jacobi_singular_values(a);
  CHECK((ref - got).cwiseAbs().maxCoeff() <= 1e-12 * ref[0]);

  // Row-graded matrix diag(d) Q: singular values are d to full relative accuracy.
  const Mat q = Eigen::HouseholderQR<Mat>(a).householderQ();
  Vec d(12);
  for (int i = 0; i < 12; ++i) d[i] = std::exp(-30.0 * i);
  const Vec sv = jacobi_singular_values(d.asDiagonal() * q);
  for (int i = 0; i < 12; ++i) CHECK(sv[i] == doctest::Approx(d[i]).epsilon(1e-12));
}

TEST_CASE("spectrum: zero strength and particle-hole symmetry") {
  const auto lat = Lattice::honeycomb(3);
  const auto sch = Schedule::floquet(lat, 3);
  {
    const auto ms = MeasurementStrength::from_t(0.0);
    const auto sp = spectrum(layer_kernels(ms, lat, sch, std::vector<std::int8_t>(sch.num_slots(), 1)), 18);
    for (double e : sp.eps) CHECK(e == 0.0);
    const auto q = thermal_quantities(sp);
    CHECK(q.lambda0 / 18 == doctest::Approx(-std::log(2.0) / 2).epsilon(1e-12));
    CHECK(q.S_c / (18 * std::log(2.0)) == doctest::Approx(0.5));
  }
  std::mt19937_64 rng(8);
  for (double tpi : {0.1, 0.2, 0.249}) {
    const auto ms = MeasurementStrength::from_t_over_pi(tpi);
    const auto traj = sample_uniform_trajectory(rng, sch);
    const auto sp = spectrum(layer_kernels(ms, lat, sch, net_field(traj, sch)), 18);
    REQUIRE(sp.kappa.size() == 18);
    for (int i = 0; i < 9; ++i) CHECK(std::abs(sp.kappa[i] + sp.kappa[17 - i]) <= 1e-8 * (1.0 + std::abs(sp.kappa[i])));
    for (double e : sp.eps) CHECK(e <= 0.0);
  }
}

TEST_CASE("thermal quantities: closed forms and a two-level trace") {
  Spectrum sp;
  sp.eps = {0.0};
  sp.beta = 4.0;
  auto q = thermal_quantities(sp);
  CHECK(q.F == doctest::Approx(-std::log(4.0) / 8.0));
  CHECK(q.E == doctest::Approx(0.0));
  CHECK(q.S_c == doctest::Approx(std::log(2.0)));

  sp.eps = {-200.0};
  q = thermal_quantities(sp);
  CHECK(q.S_c == doctest::Approx(0.0));
  CHECK(q.E == doctest::Approx(-100.0));
  CHECK(q.E0 == doctest::Approx(-100.0));

  // One mode with levels -|eps|/2, +|eps|/2.
  for (double eps : {-0.3, -1.7}) {
    for (double beta : {0.5, 3.0}) {
      sp.eps = {eps};
      sp.beta = beta;
      q = thermal_quantities(sp);
      const double e0 = eps / 2, e1 = -eps / 2;
      const double w0 = std::exp(-beta * e0), w1 = std::exp(-beta * e1);
      const double z = w0 + w1;
      const double e = (e0 * w0 + e1 * w1) / z;
      const double e2 = (e0 * e0 * w0 + e1 * e1 * w1) / z;
      CHECK(q.F == doctest::Approx(-std::log(z) / beta));
      CHECK(q.E == doctest::Approx(e));
      CHECK(q.varE == doctest::Approx(e2 - e * e));
      CHECK(q.S_c == doctest::Approx(beta * (e + std::log(z) / beta)));
      CHECK(q.gap == doctest::Approx(std::abs(eps)));
    }
  }
}

TEST_CASE("negativity closed cases") {
  CHECK(std::abs(negativity(Mat::Zero(4, 4), {1, 1, 0, 0})) <= 1e-14);
  Mat g = Mat::Zero(2, 2);
  g(0, 1) = 1.0;
  g(1, 0) = -1.0;
  CHECK(negativity(g, {1, 0}) == doctest::Approx(std::log(2.0) / 2).epsilon(1e-12));
  // same dimer inside A carries nothing
  Mat g4 = Mat::Zero(4, 4);
  g4(0, 1) = 1.0;
  g4(1, 0) = -1.0;
  g4(2, 3) = 1.0;
  g4(3, 2) = -1.0;
  // sqrt(1 - xi) turns eigenvalue round-off near xi = 1 into ~1e-8
  CHECK(std::abs(negativity(g4, {1, 1, 0, 0})) <= 1e-7);
}

TEST_CASE("negativity against the partial transpose in Fock space") {
  std::mt19937_64 rng(17);
  for (int m : {2, 3}) {
    const auto c = fock::majoranas(m);
    const int n = 2 * m;
    for (int rep = 0; rep < 10; ++rep) {
      const auto h = fock::random_antisymmetric(n, 1.5, rng);
      const fock::CM rho = fock::gaussian_operator(h, c);
      std::vector<char> in_a(n, 0);
      for (int j = 0; j < n; ++j) in_a[j] = (rep + j) % 3 == 0;
      const Mat g = fock::covariance(rho, c);
      CHECK(negativity(g, in_a) == doctest::Approx(fock::negativity(rho, c, in_a)).epsilon(1e-9));
    }
  }
}

TEST_CASE("negativity is invariant under relabeling within each side") {
  std::mt19937_64 rng(4);
  const auto c = fock::majoranas(3);
  const auto h = fock::random_antisymmetric(6, 1.0, rng);
  const Mat g = fock::covariance(fock::gaussian_operator(h, c), c);
  const std::vector<char> in_a = {1, 1, 1, 0, 0, 0};
  const std::vector<int> perm = {2, 0, 1, 5, 3, 4};
  Mat gp(6, 6);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) gp(i, j) = g(perm[i], perm[j]);
  CHECK(negativity(gp, in_a) == doctest::Approx(negativity(g, in_a)).epsilon(1e-12));
}

TEST_CASE("correlation profile") {
  const auto lat = Lattice::honeycomb(3);
  for (const auto& bin : correlation_profile(Mat::Zero(18, 18), lat)) CHECK(bin.mean_abs == 0.0);
  const auto sch = Schedule::floquet(lat, 3);
  const auto ms = MeasurementStrength::from_t_over_pi(0.25);
  const auto st = evolve_net(ms, lat, sch, std::vector<std::int8_t>(sch.num_slots(), 1));
  const auto prof = correlation_profile(st.cov, lat);
  REQUIRE(prof.size() >= 2);
  CHECK(prof[0].distance == doctest::Approx(1.0));
  CHECK(prof[0].mean_abs > 0.1);
  for (std::size_t k = 1; k < prof.size(); ++k) CHECK(prof[k].mean_abs <= 1e-5);
}

TEST_CASE("singular composition is regularized and flagged") {
  Mat x = Mat::Zero(2, 2);
  x(0, 1) = 1.0;
  x(1, 0) = -1.0;
  bool flagged = false;
  const CMat z = compose(x, Mat(-x), &flagged);
  CHECK(flagged);
  CHECK(z.allFinite());
}
