#include "hfc/dense_oracle.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <numbers>

#include "hfc/error.hpp"

namespace hfc {

namespace {

const cplx kI(0.0, 1.0);

cplx ipow(int k) {
  switch (((k % 4) + 4) % 4) {
    case 0: return {1.0, 0.0};
    case 1: return {0.0, 1.0};
    case 2: return {-1.0, 0.0};
    default: return {0.0, -1.0};
  }
}

template <bool Parallel>
DensityMatrix weak_measurement_impl(const DensityMatrix& rho, const PauliString& op, double t, int s) {
  if (!(t >= 0.0) || t > std::numbers::pi / 4 + 1e-12) throw Error(ErrorKind::InvalidArgument, "t outside [0, pi/4]");
  const double c2 = 0.5 * std::cos(t) * std::cos(t);
  const double a = std::tan(t);
  const double sa = s * a;
  const std::size_t dim = rho.dim();
  const long long rows = static_cast<long long>(dim);
  DensityMatrix out;
  out.n = rho.n;
  out.data.assign(dim * dim, cplx{});
#pragma omp parallel for schedule(static) if (Parallel && rho.n >= 5)
  for (long long rr = 0; rr < rows; ++rr) {
    const std::size_t r = static_cast<std::size_t>(rr);
    const std::size_t rx = r ^ op.x;
    const cplx pr = op.amplitude(static_cast<std::uint32_t>(rx));
    for (std::size_t c = 0; c < dim; ++c) {
      const std::size_t cx = c ^ op.x;
      const cplx pc = op.amplitude(static_cast<std::uint32_t>(c));
      const cplx v = rho(r, c) + sa * (pr * rho(rx, c) + rho(r, cx) * pc) + a * a * pr * rho(rx, cx) * pc;
      out(r, c) = c2 * v;
    }
  }
  return out;
}

using CM = Eigen::MatrixXcd;

// Full-register matrix of a one-qubit gate.
CM embed_1q(int nq, int q, const Eigen::Matrix2cd& u) {
  const std::size_t dim = std::size_t{1} << nq;
  CM m = CM::Zero(dim, dim);
  for (std::size_t c = 0; c < dim; ++c) {
    const int bc = (c >> q) & 1;
    for (int br = 0; br < 2; ++br) {
      const std::size_t r = (c & ~(std::size_t{1} << q)) | (std::size_t(br) << q);
      m(r, c) += u(br, bc);
    }
  }
  return m;
}

CM to_eigen(const DensityMatrix& rho) {
  const auto dim = rho.dim();
  CM m(dim, dim);
  for (std::size_t r = 0; r < dim; ++r)
    for (std::size_t c = 0; c < dim; ++c) m(r, c) = rho(r, c);
  return m;
}

DensityMatrix from_eigen(const CM& m, int n) {
  DensityMatrix rho;
  rho.n = n;
  rho.data.resize(m.rows() * m.cols());
  for (std::size_t r = 0; r < rho.dim(); ++r)
    for (std::size_t c = 0; c < rho.dim(); ++c) rho(r, c) = m(r, c);
  return rho;
}

}  // namespace

PauliString PauliString::single(int qubit, Pauli p) {
  PauliString s;
  const std::uint32_t bit = 1u << qubit;
  switch (p) {
    case Pauli::X: s.x = bit; break;
    case Pauli::Z: s.z = bit; break;
    case Pauli::Y:  // Y = i X Z
      s.x = bit;
      s.z = bit;
      s.phase = 1;
      break;
  }
  return s;
}

PauliString PauliString::bond(const Lattice& lattice, int bond) {
  const Bond& b = lattice.bond(bond);
  const Pauli p = basis_of(b.color);
  return single(b.a, p) * single(b.b, p);
}

PauliString PauliString::operator*(const PauliString& o) const {
  PauliString r;
  r.x = x ^ o.x;
  r.z = z ^ o.z;
  r.phase = (phase + o.phase + 2 * std::popcount(z & o.x)) % 4;
  return r;
}

cplx PauliString::amplitude(std::uint32_t w) const {
  return ipow(phase) * (std::popcount(z & w) % 2 ? -1.0 : 1.0);
}

DensityMatrix DensityMatrix::maximally_mixed(int n) {
  if (n < 1 || n > kMaxOracleQubits) throw Error(ErrorKind::TooManySlots, "oracle supports 1..14 qubits");
  DensityMatrix rho;
  rho.n = n;
  rho.data.assign(rho.dim() * rho.dim(), cplx{});
  for (std::size_t i = 0; i < rho.dim(); ++i) rho(i, i) = 1.0 / static_cast<double>(rho.dim());
  return rho;
}

cplx DensityMatrix::trace() const {
  cplx s{};
  for (std::size_t i = 0; i < dim(); ++i) s += (*this)(i, i);
  return s;
}

cplx DensityMatrix::expectation(const PauliString& p) const {
  cplx s{};
  for (std::size_t w = 0; w < dim(); ++w) s += p.amplitude(static_cast<std::uint32_t>(w)) * (*this)(w, w ^ p.x);
  return s;
}

DensityMatrix apply_weak_measurement(const DensityMatrix& rho, const PauliString& op, double t, int s) {
  return weak_measurement_impl<true>(rho, op, t, s);
}

DensityMatrix apply_weak_measurement_serial(const DensityMatrix& rho, const PauliString& op, double t, int s) {
  return weak_measurement_impl<false>(rho, op, t, s);
}

DensityMatrix apply_weak_measurement_gates(const DensityMatrix& rho, int qa, int qb, Pauli basis, double t, int s) {
  const int n = rho.n;
  const int nq = n + 1;
  const int anc = n;
  const std::size_t dim = std::size_t{1} << nq;
  const double r2 = 1.0 / std::sqrt(2.0);

  // rho (x) |+><+| on the ancilla (highest bit).
  CM big = CM::Zero(dim, dim);
  const CM small = to_eigen(rho);
  for (int ar = 0; ar < 2; ++ar)
    for (int ac = 0; ac < 2; ++ac)
      big.block(std::size_t(ar) << n, std::size_t(ac) << n, rho.dim(), rho.dim()) = 0.5 * small;

  Eigen::Matrix2cd h;
  h << r2, r2, r2, -r2;
  Eigen::Matrix2cd sg;
  sg << 1, 0, 0, kI;
  Eigen::Matrix2cd v = Eigen::Matrix2cd::Identity();
  if (basis == Pauli::X) v = h;
  if (basis == Pauli::Y) v = sg * h;  // V Z V^dagger = Y
  const CM vv = embed_1q(nq, qa, v) * embed_1q(nq, qb, v);

  // Into the Z frame.
  big = vv.adjoint() * big * vv;

  // RZZ(2t) on (anc, a) and RZZ(pi/2) on (anc, b): diagonal phases.
  Eigen::VectorXcd phase(dim);
  for (std::size_t k = 0; k < dim; ++k) {
    const double zan = ((k >> anc) & 1) ? -1.0 : 1.0;
    const double za = ((k >> qa) & 1) ? -1.0 : 1.0;
    const double zb = ((k >> qb) & 1) ? -1.0 : 1.0;
    phase[k] = std::exp(-kI * (t * zan * za + 0.25 * std::numbers::pi * zan * zb));
  }
  big = phase.asDiagonal() * big * phase.conjugate().asDiagonal();

  // Ancilla X outcome s_anc = -s; project and trace it out.
  const int s_anc = -s;
  const std::size_t half = rho.dim();
  CM proj(half, half);
  for (std::size_t r = 0; r < half; ++r) {
    for (std::size_t c = 0; c < half; ++c) {
      // <s_anc|_X = (<0| + s_anc <1|)/sqrt 2
      proj(r, c) = 0.5 * (big(r, c) + double(s_anc) * big(r + half, c) + double(s_anc) * big(r, c + half) +
                          big(r + half, c + half));
    }
  }
  // Correction i Z_b for s_anc = -1.
  Eigen::Matrix2cd z;
  z << 1, 0, 0, -1;
  if (s_anc < 0) {
    const CM zb = embed_1q(n, qb, z);
    proj = zb * proj * zb;
  }
  const CM vs = embed_1q(n, qa, v) * embed_1q(n, qb, v);
  proj = vs * proj * vs.adjoint();
  return from_eigen(proj, n);
}

DensityMatrix random_density_matrix(int n, Rng& rng) {
  const std::size_t dim = std::size_t{1} << n;
  std::normal_distribution<double> g;
  CM a(dim, dim);
  for (std::size_t r = 0; r < dim; ++r)
    for (std::size_t c = 0; c < dim; ++c) a(r, c) = cplx(g(rng), g(rng));
  CM rho = a * a.adjoint();
  rho /= rho.trace();
  return from_eigen(rho, n);
}

std::vector<std::int8_t> decode_outcomes(std::uint32_t code, int slots) {
  std::vector<std::int8_t> s(slots);
  for (int k = 0; k < slots; ++k) s[k] = ((code >> (slots - 1 - k)) & 1u) ? -1 : 1;
  return s;
}

OracleEnumeration enumerate_protocol(const Lattice& lattice, const Schedule& schedule, double t) {
  const int nq = lattice.num_sites();
  const int slots = schedule.num_slots();
  if (nq > kMaxOracleQubits) throw Error(ErrorKind::TooManySlots, "graph too large for the dense oracle");
  if (slots > kMaxOracleSlots) throw Error(ErrorKind::TooManySlots, "too many slots to enumerate");

  std::vector<PauliString> slot_ops;
  for (const auto& sl : schedule.slots()) slot_ops.push_back(PauliString::bond(lattice, sl.bond));
  std::vector<PauliString> bond_ops;
  for (int b = 0; b < lattice.num_bonds(); ++b) bond_ops.push_back(PauliString::bond(lattice, b));

  OracleEnumeration out;
  out.slots = slots;
  for (const auto& w : schedule.windows()) {
    PauliString second;
    PauliString first;
    for (int slot : w.slots) {
      const auto& op = slot_ops[slot];
      if (schedule.slot(slot).round == w.first_round) {
        first = first * op;
      } else {
        second = second * op;
      }
    }
    out.window_ops.push_back(second * first);
  }

  const std::uint32_t total = 1u << slots;
  out.records.resize(total);
  const auto leaf = [&](const DensityMatrix& rho, std::uint32_t code) {
    OracleRecord rec;
    rec.code = code;
    rec.prob = rho.trace().real();
    for (const auto& op : bond_ops) rec.parity.push_back(rec.prob > 0 ? rho.expectation(op).real() / rec.prob : 0.0);
    for (const auto& op : out.window_ops) rec.flux.push_back(rec.prob > 0 ? rho.expectation(op).real() / rec.prob : 0.0);
    out.records[code] = std::move(rec);
  };
  std::function<void(const DensityMatrix&, int, std::uint32_t)> dfs = [&](const DensityMatrix& rho, int k,
                                                                          std::uint32_t code) {
    if (k == slots) {
      leaf(rho, code);
      return;
    }
    for (int bit = 0; bit < 2; ++bit) {
      dfs(apply_weak_measurement_serial(rho, slot_ops[k], t, bit ? -1 : 1), k + 1, (code << 1) | bit);
    }
  };

  // Outcome prefixes are independent subtrees; every record has a fixed slot.
  const int prefix_bits = std::min(slots, 3);
  const int prefixes = 1 << prefix_bits;
  const DensityMatrix start = DensityMatrix::maximally_mixed(nq);
#pragma omp parallel for schedule(dynamic)
  for (int p = 0; p < prefixes; ++p) {
    DensityMatrix rho = start;
    for (int k = 0; k < prefix_bits; ++k) {
      const int bit = (p >> (prefix_bits - 1 - k)) & 1;
      rho = apply_weak_measurement_serial(rho, slot_ops[k], t, bit ? -1 : 1);
    }
    dfs(rho, prefix_bits, static_cast<std::uint32_t>(p));
  }
  return out;
}

GaussianRecord gaussian_record(const Lattice& lattice, const Schedule& schedule, double t,
                               const std::vector<std::int8_t>& s) {
  const auto ms = MeasurementStrength::from_t(t);
  const int nb = lattice.num_bonds();
  if (nb > 20) throw Error(ErrorKind::TooManySlots, "exact gauge sum needs <= 20 bonds");
  const double ln_b = log_normalization(ms, schedule);
  const auto windows = schedule.windows();
  std::vector<int> chi;
  for (const auto& w : windows) chi.push_back(window_sign(lattice, schedule, w));

  GaugeTrajectory traj;
  traj.s = s;
  traj.u.assign(nb, 1);
  double z = 0.0;
  std::vector<double> parity(nb, 0.0);
  std::vector<double> flux(windows.size(), 0.0);
  for (std::uint32_t code = 0; code < (1u << nb); ++code) {
    for (int b = 0; b < nb; ++b) traj.u[b] = ((code >> b) & 1u) ? -1 : 1;
    const GaussianState st = evolve_net(ms, lattice, schedule, net_field(traj, schedule));
    const double w = std::exp(st.log_weight - ln_b);
    z += w;
    for (int b = 0; b < nb; ++b) {
      const Bond& bond = lattice.bond(b);
      parity[b] += w * traj.u[b] * st.cov(bond.a, bond.b);
    }
    for (std::size_t k = 0; k < windows.size(); ++k) {
      int prod = 1;
      for (int slot : windows[k].slots) prod *= traj.u[schedule.slot(slot).bond];
      flux[k] += w * prod;
    }
  }
  GaussianRecord rec;
  rec.prob = std::pow(2.0, -0.5 * lattice.num_sites() - nb) * z;
  for (auto& p : parity) p /= z;
  for (std::size_t k = 0; k < flux.size(); ++k) flux[k] = chi[k] * flux[k] / z;
  rec.parity = std::move(parity);
  rec.flux = std::move(flux);
  return rec;
}

double CrosscheckReport::max_deviation() const {
  return std::max({max_dev_prob, max_dev_parity, max_dev_flux, std::abs(total_prob - 1.0)});
}

CrosscheckReport crosscheck(const Lattice& lattice, const Schedule& schedule, double t) {
  const auto dense = enumerate_protocol(lattice, schedule, t);
  CrosscheckReport rep;
  rep.t = t;
  rep.records = static_cast<int>(dense.records.size());
  for (const auto& rec : dense.records) {
    const auto g = gaussian_record(lattice, schedule, t, decode_outcomes(rec.code, dense.slots));
    rep.total_prob += g.prob;
    rep.max_dev_prob = std::max(rep.max_dev_prob, std::abs(g.prob - rec.prob));
    double dev = 0.0;
    for (std::size_t b = 0; b < g.parity.size(); ++b) dev = std::max(dev, std::abs(g.parity[b] - rec.parity[b]));
    for (std::size_t k = 0; k < g.flux.size(); ++k) dev = std::max(dev, std::abs(g.flux[k] - rec.flux[k]));
    for (std::size_t b = 0; b < g.parity.size(); ++b)
      rep.max_dev_parity = std::max(rep.max_dev_parity, std::abs(g.parity[b] - rec.parity[b]));
    for (std::size_t k = 0; k < g.flux.size(); ++k)
      rep.max_dev_flux = std::max(rep.max_dev_flux, std::abs(g.flux[k] - rec.flux[k]));
    rep.weighted_dev += rec.prob * dev;
  }
  return rep;
}

}  // namespace hfc
