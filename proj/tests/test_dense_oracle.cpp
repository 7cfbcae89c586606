#include <cmath>
#include <numbers>

#include "doctest.h"
#include "hfc/dense_oracle.hpp"
#include "hfc/error.hpp"

using namespace hfc;

namespace {

double tau_of(double t) { return 2.0 * std::atanh(std::tan(t)); }

double max_diff(const DensityMatrix& a, const DensityMatrix& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) m = std::max(m, std::abs(a.data[i] - b.data[i]));
  return m;
}

double min_eigenvalue(const DensityMatrix& rho) {
  Eigen::MatrixXcd m(rho.dim(), rho.dim());
  for (std::size_t r = 0; r < rho.dim(); ++r)
    for (std::size_t c = 0; c < rho.dim(); ++c) m(r, c) = rho(r, c);
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(m).eigenvalues().minCoeff();
}

}  // namespace

TEST_CASE("Pauli string algebra") {
  const auto x = PauliString::single(0, Pauli::X);
  const auto y = PauliString::single(0, Pauli::Y);
  const auto z = PauliString::single(0, Pauli::Z);
  // XZ = -iY, ZX = iY; stored as i^phase X^x Z^z with Y = i XZ
  const auto xz = x * z;
  CHECK(xz.x == y.x);
  CHECK(xz.z == y.z);
  CHECK((xz.phase - y.phase + 4) % 4 == 3);
  const auto zx = z * x;
  CHECK(zx.phase == (y.phase + 1) % 4);
  // Y|0> = i|1>
  CHECK(std::abs(y.amplitude(0) - cplx(0, 1)) < 1e-15);
  CHECK(std::abs(y.amplitude(1) - cplx(0, -1)) < 1e-15);
}

TEST_CASE("two qubits: ZZ weak measurement from the maximally mixed state") {
  const auto zz = PauliString::single(0, Pauli::Z) * PauliString::single(1, Pauli::Z);
  for (double t : {0.1, 0.3, std::numbers::pi / 4}) {
    for (int s : {1, -1}) {
      const auto rho = apply_weak_measurement(DensityMatrix::maximally_mixed(2), zz, t, s);
      const double p = rho.trace().real();
      CHECK(p == doctest::Approx(0.5).epsilon(1e-12));
      const double ezz = rho.expectation(zz).real() / p;
      if (t < std::numbers::pi / 4) {
        CHECK(ezz == doctest::Approx(s * std::tanh(tau_of(t))).epsilon(1e-12));
      } else {
        CHECK(ezz == doctest::Approx(s).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("gate decomposition equals the direct Kraus route") {
  Rng rng = make_rng(42, 0, 0);
  for (int rep = 0; rep < 100; ++rep) {
    const int n = 2 + rep % 3;
    const auto rho = random_density_matrix(n, rng);
    const double t = uniform01(rng) * std::numbers::pi / 4;
    const int s = coin(rng) ? 1 : -1;
    const Pauli basis = static_cast<Pauli>(rep % 3);
    const int qa = rep % n;
    const int qb = (qa + 1) % n;
    const auto op = PauliString::single(qa, basis) * PauliString::single(qb, basis);
    const auto direct = apply_weak_measurement(rho, op, t, s);
    const auto gates = apply_weak_measurement_gates(rho, qa, qb, basis, t, s);
    CHECK(max_diff(direct, gates) <= 1e-12);
  }
}

TEST_CASE("channel is trace preserving, positive, and parallel equals serial") {
  Rng rng = make_rng(43, 0, 0);
  for (int rep = 0; rep < 20; ++rep) {
    const int n = 5 + rep % 2;
    const auto rho = random_density_matrix(n, rng);
    const double t = uniform01(rng) * std::numbers::pi / 4;
    const Pauli basis = static_cast<Pauli>(rep % 3);
    const auto op = PauliString::single(0, basis) * PauliString::single(3, basis);
    const auto plus = apply_weak_measurement(rho, op, t, 1);
    const auto minus = apply_weak_measurement(rho, op, t, -1);
    CHECK((plus.trace() + minus.trace()).real() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(min_eigenvalue(plus) >= -1e-10);
    CHECK(min_eigenvalue(minus) >= -1e-10);
    CHECK(max_diff(plus, apply_weak_measurement_serial(rho, op, t, 1)) == 0.0);
  }
}

TEST_CASE("hexagon: flux cross-correlation identity") {
  auto [lat, sch] = build_custom_graph(hexagon_spec());
  for (double tpi : {0.05, 0.125, 0.2, 0.24, 0.25}) {
    const double t = tpi * std::numbers::pi;
    const auto e = enumerate_protocol(lat, sch, t);
    double total = 0.0;
    double cross = 0.0;
    double first = 0.0;
    for (const auto& rec : e.records) {
      const auto s = decode_outcomes(rec.code, e.slots);
      int ws = 1;
      for (int slot : sch.windows()[0].slots) ws *= s[slot];
      total += rec.prob;
      cross += rec.prob * rec.flux[0] * ws;
      first += rec.prob * rec.flux[0];
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(cross == doctest::Approx(std::pow(std::sin(2 * t), 6)).epsilon(1e-10));
    CHECK(std::abs(first) <= 1e-12);
  }
}

TEST_CASE("single bond: temporal correlations and bimodal totals") {
  const int r = 6;
  auto [lat, sch] = build_custom_graph(single_bond_spec(r));
  for (double tpi : {0.05, 0.125, 0.2}) {
    const double t = tpi * std::numbers::pi;
    const double tau = tau_of(t);
    const auto e = enumerate_protocol(lat, sch, t);
    std::vector<double> p_tot(r + 1, 0.0);
    for (int m = 0; m < r; ++m) {
      for (int n = m + 1; n < r; ++n) {
        double c = 0.0;
        for (const auto& rec : e.records) {
          const auto s = decode_outcomes(rec.code, r);
          c += rec.prob * s[m] * s[n];
        }
        CHECK(c == doctest::Approx(1.0 - 1.0 / (std::cosh(tau) * std::cosh(tau))).epsilon(1e-10));
      }
    }
    double last = 0.0;
    for (const auto& rec : e.records) {
      const auto s = decode_outcomes(rec.code, r);
      last += rec.prob * rec.parity[0] * s[r - 1];
      int up = 0;
      for (auto x : s) up += x > 0;
      p_tot[up] += rec.prob;
    }
    CHECK(last == doctest::Approx(std::tanh(tau)).epsilon(1e-10));
    for (int up = 0; up <= r; ++up) {
      const int stot = 2 * up - r;
      const double binom = std::tgamma(r + 1.0) / (std::tgamma(up + 1.0) * std::tgamma(r - up + 1.0));
      const double closed = binom * std::cosh(tau * stot) / std::pow(2.0 * std::cosh(tau), r);
      CHECK(std::abs(p_tot[up] - closed) <= 1e-10);
    }
  }
}

TEST_CASE("crosscheck: Gaussian route reproduces the dense oracle") {
  auto [hex, hex_sch] = build_custom_graph(hexagon_spec());
  for (int k = 0; k < 9; ++k) {
    const double t = (0.02 + 0.0275 * k) * std::numbers::pi;
    const auto rep = crosscheck(hex, hex_sch, t);
    CAPTURE(t);
    CHECK(rep.max_deviation() <= 1e-9);
  }
  auto [bond, bond_sch] = build_custom_graph(single_bond_spec(3));
  for (double tpi : {0.05, 0.125, 0.2, 0.24}) CHECK(crosscheck(bond, bond_sch, tpi * std::numbers::pi).max_deviation() <= 1e-9);

  // Longer records near pi/4: |G_ab| saturates at 1 in double precision and a
  // later contradicting outcome cannot recover the lost digits. Only records
  // of negligible probability are affected.
  for (int r : {6, 9}) {
    auto [b, sch] = build_custom_graph(single_bond_spec(r));
    const auto rep = crosscheck(b, sch, 0.24 * std::numbers::pi);
    CHECK(rep.max_dev_prob <= 1e-12);
    CHECK(rep.weighted_dev <= 1e-12);
  }

  const auto e = enumerate_protocol(hex, hex_sch, 0.0);
  for (const auto& rec : e.records) {
    CHECK(rec.prob == doctest::Approx(1.0 / 64).epsilon(1e-12));
    for (double v : rec.parity) CHECK(std::abs(v) <= 1e-14);
    for (double v : rec.flux) CHECK(std::abs(v) <= 1e-14);
  }
}

TEST_CASE("oracle size limits") {
  const auto lat = Lattice::honeycomb(3);
  const auto sch = Schedule::floquet(lat, 3);
  CHECK_THROWS_AS(enumerate_protocol(lat, sch, 0.1), Error);
  auto [bond, bond_sch] = build_custom_graph(single_bond_spec(25));
  try {
    enumerate_protocol(bond, bond_sch, 0.1);
    FAIL("expected too-many-slots");
  } catch (const Error& err) {
    CHECK(err.kind() == ErrorKind::TooManySlots);
  }
}
