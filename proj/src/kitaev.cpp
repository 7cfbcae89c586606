#include "hfc/kitaev.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <numeric>

#include "hfc/error.hpp"
#include "hfc/rng.hpp"

namespace hfc {

namespace {

using Bits = std::vector<char>;

// One solution of rows * x = rhs over GF(2); rows are bit vectors of length n.
Bits solve_gf2(std::vector<Bits> rows, Bits rhs, int n) {
  const int m = static_cast<int>(rows.size());
  std::vector<int> pivot_col;
  int r = 0;
  for (int c = 0; c < n && r < m; ++c) {
    int p = -1;
    for (int i = r; i < m; ++i)
      if (rows[i][c]) {
        p = i;
        break;
      }
    if (p < 0) continue;
    std::swap(rows[p], rows[r]);
    std::swap(rhs[p], rhs[r]);
    for (int i = 0; i < m; ++i) {
      if (i != r && rows[i][c]) {
        for (int k = 0; k < n; ++k) rows[i][k] ^= rows[r][k];
        rhs[i] ^= rhs[r];
      }
    }
    pivot_col.push_back(c);
    ++r;
  }
  for (int i = r; i < m; ++i)
    if (rhs[i]) throw Error(ErrorKind::InvalidArgument, "inconsistent GF(2) system");
  Bits x(n, 0);
  for (int i = 0; i < r; ++i) x[pivot_col[i]] = rhs[i];
  return x;
}

int gf2_rank(std::vector<Bits> rows, int n) {
  int r = 0;
  const int m = static_cast<int>(rows.size());
  for (int c = 0; c < n && r < m; ++c) {
    int p = -1;
    for (int i = r; i < m; ++i)
      if (rows[i][c]) {
        p = i;
        break;
      }
    if (p < 0) continue;
    std::swap(rows[p], rows[r]);
    for (int i = r + 1; i < m; ++i)
      if (rows[i][c])
        for (int k = 0; k < n; ++k) rows[i][k] ^= rows[r][k];
    ++r;
  }
  return r;
}

// ln(2 cosh(x)) without overflow
double log2cosh(double x) {
  const double a = std::abs(x);
  return a + std::log1p(std::exp(-2.0 * a));
}

}  // namespace

Mat quadratic_hamiltonian(const Lattice& lat, const std::vector<std::int8_t>& u, FermionBoundary bc) {
  if (static_cast<int>(u.size()) != lat.num_bonds()) throw Error(ErrorKind::DimensionMismatch, "u has wrong length");
  const KitaevModel model(lat, bc);
  const int n = lat.num_sites();
  Mat a = Mat::Zero(n, n);
  for (const auto& b : lat.bonds()) {
    a(b.a, b.b) += 2.0 * model.seam(b.id) * u[b.id];
    a(b.b, b.a) -= 2.0 * model.seam(b.id) * u[b.id];
  }
  return a;
}

KitaevModel::KitaevModel(const Lattice& lattice, FermionBoundary bc) : lat_(&lattice), bc_(bc) {
  if (!lattice.is_torus()) throw Error(ErrorKind::InvalidArgument, "the Kitaev model needs the torus");
  const int nb = lattice.num_bonds();
  const int L = lattice.L();
  seam_.assign(nb, 1.0);
  if (bc == FermionBoundary::Antiperiodic) {
    for (int id = 0; id < nb; ++id) {
      const int cell = id / 3;
      const int dir = id % 3;
      if ((dir == 1 && cell % L == 0) || (dir == 2 && cell / L == 0)) seam_[id] = -1.0;
    }
  }

  std::vector<Bits> plaq;
  for (const auto& p : lattice.plaquettes()) {
    Bits row(nb, 0);
    for (int b : p.bonds) row[b] ^= 1;
    plaq.push_back(row);
  }
  const int base = gf2_rank(plaq, nb);

  // fundamental cycles of a BFS spanning tree; keep two outside the plaquette span
  const int ns = lattice.num_sites();
  std::vector<int> parent_bond(ns, -2), depth(ns, 0);
  std::vector<int> queue = {0};
  parent_bond[0] = -1;
  for (std::size_t q = 0; q < queue.size(); ++q) {
    const int s = queue[q];
    for (int b : lattice.bonds_at(s)) {
      const auto& bd = lattice.bond(b);
      const int o = bd.a == s ? bd.b : bd.a;
      if (parent_bond[o] != -2) continue;
      parent_bond[o] = b;
      depth[o] = depth[s] + 1;
      queue.push_back(o);
    }
  }
  auto climb = [&](int s) {
    const auto& bd = lattice.bond(parent_bond[s]);
    return bd.a == s ? bd.b : bd.a;
  };
  std::vector<Bits> span = plaq;
  for (int b = 0; b < nb && static_cast<int>(cycles_.size()) < 2; ++b) {
    const auto& bd = lattice.bond(b);
    if (parent_bond[bd.a] == b || parent_bond[bd.b] == b) continue;
    Bits cyc(nb, 0);
    cyc[b] = 1;
    int x = bd.a, y = bd.b;
    while (x != y) {
      if (depth[x] >= depth[y]) {
        cyc[parent_bond[x]] ^= 1;
        x = climb(x);
      } else {
        cyc[parent_bond[y]] ^= 1;
        y = climb(y);
      }
    }
    span.push_back(cyc);
    if (gf2_rank(span, nb) > base + static_cast<int>(cycles_.size())) {
      cycles_.push_back(cyc);
    } else {
      span.pop_back();
    }
  }
  if (cycles_.size() != 2) throw Error(ErrorKind::InvalidArgument, "torus cycle space has the wrong rank");

  // flux-neutral cuts that flip one holonomy each
  std::vector<Bits> rows = plaq;
  rows.push_back(cycles_[0]);
  rows.push_back(cycles_[1]);
  std::array<Bits, 2> cut;
  for (int i = 0; i < 2; ++i) {
    Bits rhs(rows.size(), 0);
    rhs[plaq.size() + i] = 1;
    cut[i] = solve_gf2(rows, rhs, nb);
  }
  moves_.resize(nb);
  for (int b = 0; b < nb; ++b) {
    Bits d(nb, 0);
    d[b] = 1;
    for (int i = 0; i < 2; ++i)
      if (cycles_[i][b])
        for (int k = 0; k < nb; ++k) d[k] ^= cut[i][k];
    for (int k = 0; k < nb; ++k)
      if (d[k]) moves_[b].push_back(k);
  }
}

std::vector<int> KitaevModel::fluxes(const std::vector<std::int8_t>& u) const {
  std::vector<int> w;
  for (const auto& p : lat_->plaquettes()) {
    int prod = 1;
    for (int b : p.bonds) prod *= u[b];
    w.push_back(prod);
  }
  return w;
}

double KitaevModel::mean_flux(const std::vector<std::int8_t>& u) const {
  const auto w = fluxes(u);
  return std::accumulate(w.begin(), w.end(), 0.0) / static_cast<double>(w.size());
}

std::pair<int, int> KitaevModel::holonomies(const std::vector<std::int8_t>& u) const {
  int h[2] = {1, 1};
  for (int i = 0; i < 2; ++i)
    for (std::size_t b = 0; b < u.size(); ++b)
      if (cycles_[i][b]) h[i] *= u[b];
  return {h[0], h[1]};
}

std::vector<std::int8_t> KitaevModel::representative(const std::vector<int>& flux) const {
  const int nb = lat_->num_bonds();
  if (static_cast<int>(flux.size()) != lat_->num_plaquettes()) {
    throw Error(ErrorKind::DimensionMismatch, "flux pattern has wrong length");
  }
  std::vector<Bits> rows;
  Bits rhs;
  for (std::size_t p = 0; p < flux.size(); ++p) {
    Bits row(nb, 0);
    for (int b : lat_->plaquette(static_cast<int>(p)).bonds) row[b] ^= 1;
    rows.push_back(row);
    rhs.push_back(flux[p] < 0 ? 1 : 0);
  }
  rows.push_back(cycles_[0]);
  rows.push_back(cycles_[1]);
  rhs.push_back(0);
  rhs.push_back(0);
  const Bits x = solve_gf2(rows, rhs, nb);
  std::vector<std::int8_t> u(nb);
  for (int b = 0; b < nb; ++b) u[b] = x[b] ? -1 : 1;
  return u;
}

namespace {

Mat ab_block(const Lattice& lat, const std::vector<double>& seam, const std::vector<std::int8_t>& u) {
  // sites alternate A, B within a cell
  const int half = lat.num_sites() / 2;
  Mat m = Mat::Zero(half, half);
  for (const auto& b : lat.bonds()) m(b.a / 2, b.b / 2) += 2.0 * seam[b.id] * u[b.id];
  return m;
}

}  // namespace

Vec KitaevModel::energies(const std::vector<std::int8_t>& u) const {
  return Eigen::BDCSVD<Mat>(ab_block(*lat_, seam_, u)).singularValues();
}

SectorThermo KitaevModel::thermo_from_energies(const Vec& eps, double beta) {
  SectorThermo t;
  for (int k = 0; k < eps.size(); ++k) {
    const double x = 0.5 * beta * eps[k];
    const double th = std::tanh(x);
    t.log_z += log2cosh(x);
    t.energy -= 0.5 * eps[k] * th;
    t.var_energy += 0.25 * eps[k] * eps[k] * (1.0 - th * th);
  }
  return t;
}

SectorThermo KitaevModel::thermo(const std::vector<std::int8_t>& u, double beta, bool with_cov) const {
  if (!with_cov) return thermo_from_energies(energies(u), beta);
  Eigen::BDCSVD<Mat> svd(ab_block(*lat_, seam_, u), Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec eps = svd.singularValues();
  SectorThermo t = thermo_from_energies(eps, beta);
  Vec th(eps.size());
  for (int k = 0; k < eps.size(); ++k) th[k] = std::tanh(0.5 * beta * eps[k]);
  const Mat gab = -svd.matrixU() * th.asDiagonal() * svd.matrixV().transpose();
  const int n = lat_->num_sites();
  t.cov = Mat::Zero(n, n);
  for (int i = 0; i < n / 2; ++i) {
    for (int j = 0; j < n / 2; ++j) {
      t.cov(2 * i, 2 * j + 1) = gab(i, j);
      t.cov(2 * j + 1, 2 * i) = -gab(i, j);
    }
  }
  return t;
}

// --- exact sum -------------------------------------------------------------------

std::vector<KitaevExactPoint> exact_flux_sum(const Lattice& lat, const std::vector<double>& betas, FermionBoundary bc) {
  if (!lat.is_torus() || lat.L() != 3) throw Error(ErrorKind::InvalidL, "exact flux sum needs L = 3");
  const KitaevModel model(lat, bc);
  const int np = lat.num_plaquettes();
  const double n = lat.num_sites();
  const Cut cut = bipartition(lat);

  struct Sector {
    std::vector<std::int8_t> u;
    Vec eps;
    double flux = 0.0;
  };
  std::vector<Sector> sectors;
  for (std::uint32_t code = 0; code < (1u << np); ++code) {
    if (std::popcount(code) % 2) continue;
    std::vector<int> f(np);
    for (int p = 0; p < np; ++p) f[p] = (code >> p) & 1 ? -1 : 1;
    Sector s;
    s.u = model.representative(f);
    s.eps = model.energies(s.u);
    s.flux = model.mean_flux(s.u);
    sectors.push_back(std::move(s));
  }

  auto log_z = [&](double beta) {
    std::vector<double> lz;
    for (const auto& s : sectors) lz.push_back(KitaevModel::thermo_from_energies(s.eps, beta).log_z);
    const double mx = *std::max_element(lz.begin(), lz.end());
    double acc = 0.0;
    for (double v : lz) acc += std::exp(v - mx);
    return mx + std::log(acc);
  };

  std::vector<KitaevExactPoint> out;
  for (double beta : betas) {
    KitaevExactPoint pt;
    pt.beta = beta;
    std::vector<SectorThermo> th;
    double mx = -1e300;
    for (const auto& s : sectors) {
      th.push_back(model.thermo(s.u, beta, true));
      mx = std::max(mx, th.back().log_z);
    }
    double z = 0.0, e = 0.0, e2 = 0.0, w = 0.0, neg = 0.0;
    for (std::size_t i = 0; i < sectors.size(); ++i) {
      const double p = std::exp(th[i].log_z - mx);
      z += p;
      e += p * th[i].energy;
      e2 += p * (th[i].var_energy + th[i].energy * th[i].energy);
      w += p * sectors[i].flux;
      neg += p * negativity(th[i].cov, cut.in_a);
    }
    e /= z;
    e2 /= z;
    pt.energy = e / n;
    pt.c_v = beta * beta * (e2 - e * e) / n;
    pt.flux = w / z;
    pt.negativity = neg / z;
    const double lz = mx + std::log(z);
    pt.free_energy = -lz / (beta * n);

    // beta^2 d^2/dbeta^2 = g'' - g' in x = ln beta; five-point stencils
    const double h = 2e-3;
    const double x = std::log(beta);
    double g[5];
    for (int k = 0; k < 5; ++k) g[k] = log_z(std::exp(x + (k - 2) * h));
    const double d1 = (g[0] - 8.0 * g[1] + 8.0 * g[3] - g[4]) / (12.0 * h);
    const double d2 = (-g[0] + 16.0 * g[1] - 30.0 * g[2] + 16.0 * g[3] - g[4]) / (12.0 * h * h);
    pt.c_v_deriv = (d2 - d1) / n;
    out.push_back(pt);
  }
  return out;
}

// --- Monte Carlo ------------------------------------------------------------------

BinnedStats fluctuation_jackknife(const std::vector<double>& e, const std::vector<double>& q, double scale, int blocks) {
  const std::size_t n = e.size();
  if (n < static_cast<std::size_t>(std::max(8, blocks)) || q.size() != n) {
    throw Error(ErrorKind::SeriesTooShort, "jackknife needs at least one sample per block");
  }
  const std::size_t per = n / blocks;
  std::vector<double> be(blocks, 0.0), bq(blocks, 0.0);
  for (int b = 0; b < blocks; ++b) {
    for (std::size_t i = b * per; i < (b + 1) * per; ++i) {
      be[b] += e[i];
      bq[b] += q[i];
    }
  }
  const double se = std::accumulate(be.begin(), be.end(), 0.0);
  const double sq = std::accumulate(bq.begin(), bq.end(), 0.0);
  const double used = static_cast<double>(per * blocks);
  const double em = se / used;
  BinnedStats st;
  st.mean = scale * (sq / used - em * em);
  st.n = static_cast<std::int64_t>(used);
  std::vector<double> jk(blocks);
  for (int b = 0; b < blocks; ++b) {
    const double m = used - static_cast<double>(per);
    const double ej = (se - be[b]) / m;
    jk[b] = scale * ((sq - bq[b]) / m - ej * ej);
  }
  const double jm = std::accumulate(jk.begin(), jk.end(), 0.0) / blocks;
  double var = 0.0;
  for (double v : jk) var += (v - jm) * (v - jm);
  st.stderr_ = std::sqrt(var * (blocks - 1.0) / blocks);
  st.tau_int = 0.5;
  return st;
}

KitaevMcResult flux_mc(const Lattice& lat, double beta, const KitaevMcConfig& cfg, FermionBoundary bc) {
  if (!lat.is_torus()) throw Error(ErrorKind::InvalidArgument, "flux Monte Carlo needs the torus");
  if (!(beta > 0.0)) throw Error(ErrorKind::InvalidArgument, "beta must be positive");
  if (cfg.sweeps <= 0 || cfg.burn_in < 0) throw Error(ErrorKind::ValidationError, "kitaev sweeps must be positive");
  const KitaevModel model(lat, bc);
  const int nb = lat.num_bonds();
  const double n = lat.num_sites();
  Cut cut;
  if (cfg.negativity) cut = bipartition(lat);

  Rng rng = make_rng(cfg.seed, static_cast<std::uint64_t>(std::llround(beta * 1e6)), 7);
  std::vector<std::int8_t> u(nb, 1);
  double lz = model.thermo(u, beta, false).log_z;
  std::int64_t proposals = 0, accepted = 0;

  std::vector<double> es, qs;
  Binning energy, flux, neg;
  for (int sweep = 0; sweep < cfg.burn_in + cfg.sweeps; ++sweep) {
    for (int k = 0; k < nb; ++k) {
      const int b = static_cast<int>(rng() % static_cast<std::uint64_t>(nb));
      auto trial = u;
      for (int x : model.move(b)) trial[x] = static_cast<std::int8_t>(-trial[x]);
      const double lz_new = model.thermo(trial, beta, false).log_z;
      ++proposals;
      if (std::log(uniform01(rng)) < lz_new - lz) {
        u = std::move(trial);
        lz = lz_new;
        ++accepted;
      }
    }
    if (sweep < cfg.burn_in) continue;
    const auto th = model.thermo(u, beta, cfg.negativity);
    energy.add(th.energy / n);
    es.push_back(th.energy);
    qs.push_back(th.var_energy + th.energy * th.energy);
    flux.add(model.mean_flux(u));
    if (cfg.negativity) neg.add(negativity(th.cov, cut.in_a));
  }

  KitaevMcResult res;
  res.beta = beta;
  res.energy = energy.result();
  res.flux = flux.result();
  if (cfg.negativity) res.negativity = neg.result();
  res.c_v = fluctuation_jackknife(es, qs, beta * beta / n);
  res.c_v.tau_int = res.energy.tau_int;
  res.acceptance = static_cast<double>(accepted) / static_cast<double>(proposals);
  return res;
}

}  // namespace hfc
