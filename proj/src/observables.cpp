#include "hfc/observables.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "hfc/circuit.hpp"
#include "hfc/error.hpp"

namespace hfc {

bool EstimatorSpec::needs_spectrum() const {
  switch (kind) {
    case EstimatorKind::Energy:
    case EstimatorKind::EnergyVar:
    case EstimatorKind::Entropy:
    case EstimatorKind::Lambda0:
    case EstimatorKind::Gap:
    case EstimatorKind::EnergyReplica:
    case EstimatorKind::SpecificHeat:
      return true;
    default:
      return false;
  }
}

EstimatorSpec flux_ea(std::vector<int> plaquettes) {
  return {"flux_ea", EstimatorClass::Replica, EstimatorKind::FluxEA, std::move(plaquettes)};
}
EstimatorSpec flux_cross(std::vector<int> windows) {
  return {"flux_cross", EstimatorClass::NetEnsemble, EstimatorKind::FluxCross, std::move(windows)};
}
EstimatorSpec parity_cross(std::vector<int> bonds) {
  return {"parity_cross", EstimatorClass::NetEnsemble, EstimatorKind::ParityCross, std::move(bonds)};
}
EstimatorSpec parity_ea(std::vector<int> bonds) {
  return {"parity_ea", EstimatorClass::Replica, EstimatorKind::ParityEA, std::move(bonds)};
}
EstimatorSpec u_linear(std::vector<int> bonds) {
  return {"u_linear", EstimatorClass::Replica, EstimatorKind::ULinear, std::move(bonds)};
}
EstimatorSpec specific_heat() { return {"C_v", EstimatorClass::Replica, EstimatorKind::SpecificHeat, {}}; }
EstimatorSpec negativity_average() {
  return {"negativity", EstimatorClass::NetEnsemble, EstimatorKind::Negativity, {}};
}

EstimatorSpec thermal_estimator(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::Energy:
      return {"energy", EstimatorClass::NetEnsemble, kind, {}};
    case EstimatorKind::EnergyVar:
      return {"energy_var", EstimatorClass::NetEnsemble, kind, {}};
    case EstimatorKind::Entropy:
      return {"entropy", EstimatorClass::NetEnsemble, kind, {}};
    case EstimatorKind::Lambda0:
      return {"lambda0", EstimatorClass::NetEnsemble, kind, {}};
    case EstimatorKind::Gap:
      return {"gap", EstimatorClass::NetEnsemble, kind, {}};
    case EstimatorKind::EnergyReplica:
      return {"energy_replica", EstimatorClass::Replica, kind, {}};
    default:
      throw Error(ErrorKind::InvalidArgument, "not a thermal estimator");
  }
}

std::vector<EstimatorSpec> default_estimators(const Lattice& lattice, bool replica, bool negativity) {
  std::vector<EstimatorSpec> out = {flux_cross(), parity_cross()};
  for (auto k : {EstimatorKind::Energy, EstimatorKind::EnergyVar, EstimatorKind::Entropy, EstimatorKind::Lambda0,
                 EstimatorKind::Gap})
    out.push_back(thermal_estimator(k));
  if (negativity && lattice.is_torus()) out.push_back(negativity_average());
  if (replica) {
    out.push_back(flux_ea());
    out.push_back(parity_ea());
    out.push_back(u_linear());
    out.push_back(thermal_estimator(EstimatorKind::EnergyReplica));
    out.push_back(specific_heat());
  }
  return out;
}

EstimatorContext EstimatorContext::make(const Lattice& lattice, const Schedule& schedule, bool with_cut) {
  EstimatorContext ctx;
  ctx.lattice = &lattice;
  ctx.schedule = &schedule;
  ctx.final_windows = schedule.final_windows();
  for (const auto& w : ctx.final_windows) ctx.window_chi.push_back(window_sign(lattice, schedule, w));
  ctx.last_slot.assign(lattice.num_bonds(), -1);
  for (int b = 0; b < lattice.num_bonds(); ++b) {
    const auto& sl = schedule.slots_of_bond(b);
    if (!sl.empty()) ctx.last_slot[b] = *std::max_element(sl.begin(), sl.end());
  }
  if (schedule.num_rounds() > 0) ctx.final_bonds = schedule.round(schedule.num_rounds() - 1).bonds;
  if (with_cut) ctx.cut = bipartition(lattice);
  ctx.beta = schedule.num_rounds();
  ctx.n_majorana = lattice.num_sites();
  return ctx;
}

namespace {

template <class F>
double average_over(const std::vector<int>& payload, int count, F&& f) {
  double sum = 0.0;
  int n = 0;
  if (payload.empty()) {
    for (int i = 0; i < count; ++i) {
      const auto v = f(i);
      if (v.second) {
        sum += v.first;
        ++n;
      }
    }
  } else {
    for (int i : payload) {
      const auto v = f(i);
      if (v.second) {
        sum += v.first;
        ++n;
      }
    }
  }
  return n > 0 ? sum / n : 0.0;
}

const ThermalQuantities& thermal_of(const NetSample& s) {
  if (!s.has_thermal) throw Error(ErrorKind::InvalidArgument, "estimator needs the spectrum");
  return s.thermal;
}

}  // namespace

double evaluate(const EstimatorSpec& spec, const EstimatorContext& ctx, const NetSample& sample) {
  if (spec.cls != EstimatorClass::NetEnsemble) throw Error(ErrorKind::InvalidArgument, "replica estimator on net sample");
  const auto& net = *sample.net;
  const auto& g = *sample.cov;
  const double n = ctx.n_majorana;
  switch (spec.kind) {
    case EstimatorKind::FluxCross:
      return average_over(spec.payload, static_cast<int>(ctx.final_windows.size()), [&](int k) {
        int prod = ctx.window_chi.at(k);
        for (int slot : ctx.final_windows.at(k).slots) prod *= net[slot];
        return std::pair<double, bool>(prod, true);
      });
    case EstimatorKind::ParityCross:
      return average_over(spec.payload.empty() ? ctx.final_bonds : spec.payload, 0, [&](int b) {
        const int slot = ctx.last_slot.at(b);
        if (slot < 0) return std::pair<double, bool>(0.0, false);
        const Bond& bond = ctx.lattice->bond(b);
        return std::pair<double, bool>(net[slot] * g(bond.a, bond.b), true);
      });
    case EstimatorKind::Energy:
      return thermal_of(sample).E / n;
    case EstimatorKind::EnergyVar:
      return thermal_of(sample).varE / n;
    case EstimatorKind::Entropy:
      return thermal_of(sample).S_c / n;
    case EstimatorKind::Lambda0:
      return thermal_of(sample).lambda0 / n;
    case EstimatorKind::Gap:
      return thermal_of(sample).gap;
    case EstimatorKind::Negativity:
      if (!sample.has_negativity) throw Error(ErrorKind::InvalidArgument, "negativity not computed");
      return sample.negativity;
    default:
      throw Error(ErrorKind::InvalidArgument, "unknown net-ensemble estimator");
  }
}

double evaluate(const EstimatorSpec& spec, const EstimatorContext& ctx, const NetSample& outer,
                const std::vector<std::int8_t>& u, const NetSample& inner) {
  if (spec.cls != EstimatorClass::Replica) throw Error(ErrorKind::InvalidArgument, "net estimator on replica sample");
  const Lattice& lat = *ctx.lattice;
  const auto& gs = *outer.cov;
  const auto& gsu = *inner.cov;
  const double n = ctx.n_majorana;
  switch (spec.kind) {
    case EstimatorKind::FluxEA:
      return average_over(spec.payload, lat.num_plaquettes(), [&](int p) {
        int prod = 1;
        for (int b : lat.plaquette(p).bonds) prod *= u.at(b);
        return std::pair<double, bool>(prod, true);
      });
    case EstimatorKind::ParityEA:
      return average_over(spec.payload, lat.num_bonds(), [&](int b) {
        const Bond& bond = lat.bond(b);
        return std::pair<double, bool>(gs(bond.a, bond.b) * u.at(b) * gsu(bond.a, bond.b), true);
      });
    case EstimatorKind::ULinear:
      return average_over(spec.payload, lat.num_bonds(), [&](int b) {
        const Bond& bond = lat.bond(b);
        return std::pair<double, bool>(u.at(b) * gs(bond.a, bond.b), true);
      });
    case EstimatorKind::EnergyReplica:
      return thermal_of(outer).E * thermal_of(inner).E / (n * n);
    default:
      throw Error(ErrorKind::InvalidArgument, "unknown replica estimator");
  }
}

double specific_heat_branch(const EstimatorContext& ctx, double sum_e, double sum_e2, double sum_var, int count) {
  if (count < 2) throw Error(ErrorKind::InsufficientData, "specific heat needs two inner samples");
  const double n = count;
  const double spread = (n * sum_e2 - sum_e * sum_e) / (n * (n - 1.0));
  return ctx.beta * ctx.beta / ctx.n_majorana * (spread + sum_var / n);
}

// --- reference curves --------------------------------------------------------

double flux_cross_exact(double t) { return std::pow(std::sin(2.0 * t), 6); }
double parity_cross_exact(double t) { return std::sin(2.0 * t); }

double su_ansatz(double t, int r) {
  const double y = std::pow(std::sin(2.0 * t), 12);
  const double bits = -std::log2(0.5 * (1.0 + y));
  return std::pow(std::max(bits, 0.0), 0.25 * (r + 1));
}

double flux_ea_ansatz(double t, int r) { return 2.0 * std::exp2(-su_ansatz(t, r)) - 1.0; }

double collapse_transform(double w2, int r) {
  const double su = std::max(-std::log2(0.5 * (1.0 + w2)), 0.0);
  return 2.0 * std::exp2(-std::pow(su, 4.0 / (r + 1))) - 1.0;
}

double clifford_negativity(int L) { return L * std::numbers::ln2 / 3.0; }
double clifford_lambda0_per_n(int L) { return -std::numbers::ln2 / (3.0 * (1.0 + 1.0 / L)); }

Crossing pseudo_threshold(const std::vector<double>& t, const std::vector<double>& w2, const std::vector<double>& err) {
  if (t.size() != w2.size() || (!err.empty() && err.size() != t.size())) {
    throw Error(ErrorKind::DimensionMismatch, "curve arrays differ in length");
  }
  for (std::size_t i = 0; i + 1 < t.size(); ++i) {
    const double lo = w2[i] - 0.5;
    const double hi = w2[i + 1] - 0.5;
    if (lo == 0.0) return {t[i], 0.0};
    if (lo * hi > 0.0 || w2[i + 1] == w2[i]) continue;
    const double dw = w2[i + 1] - w2[i];
    const double dt = t[i + 1] - t[i];
    Crossing c;
    c.t_c = t[i] + (0.5 - w2[i]) / dw * dt;
    if (!err.empty()) {
      const double d0 = (0.5 - w2[i + 1]) / (dw * dw) * err[i];
      const double d1 = -(0.5 - w2[i]) / (dw * dw) * err[i + 1];
      c.err = std::abs(dt) * std::sqrt(d0 * d0 + d1 * d1);
    }
    return c;
  }
  throw Error(ErrorKind::NoCrossing, "curve does not cross 1/2");
}

namespace {

// Two-parameter weighted least squares y = x0 * p0 + x1 * p1.
struct Lsq2 {
  double p[2] = {0, 0};
  double cov[2][2] = {{0, 0}, {0, 0}};
};

Lsq2 lsq2(const std::vector<std::array<double, 2>>& x, const std::vector<double>& y, const std::vector<double>& sigma) {
  const std::size_t n = y.size();
  const bool weighted = !sigma.empty() && std::all_of(sigma.begin(), sigma.end(), [](double s) { return s > 0.0; });
  Eigen::Matrix2d a = Eigen::Matrix2d::Zero();
  Eigen::Vector2d rhs = Eigen::Vector2d::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    const double w = weighted ? 1.0 / (sigma[i] * sigma[i]) : 1.0;
    const Eigen::Vector2d xi(x[i][0], x[i][1]);
    a += w * xi * xi.transpose();
    rhs += w * y[i] * xi;
  }
  const Eigen::Matrix2d ainv = a.inverse();
  const Eigen::Vector2d p = ainv * rhs;
  double chi2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = weighted ? 1.0 / (sigma[i] * sigma[i]) : 1.0;
    const double res = y[i] - x[i][0] * p[0] - x[i][1] * p[1];
    chi2 += w * res * res;
  }
  const double dof = static_cast<double>(n) - 2.0;
  double scale = 1.0;
  if (dof > 0) scale = weighted ? std::max(1.0, chi2 / dof) : chi2 / dof;
  else if (!weighted) scale = 0.0;
  Lsq2 out;
  out.p[0] = p[0];
  out.p[1] = p[1];
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) out.cov[i][j] = scale * ainv(i, j);
  return out;
}

}  // namespace

double ZFit::z_err() const { return std::sqrt(cov[1][1]); }
double NegativityFit::c2_err() const { return std::sqrt(cov[1][1]); }

ZFit fit_z(const std::vector<ScalingPoint>& points) {
  std::vector<int> sizes;
  for (const auto& p : points) sizes.push_back(p.L);
  std::sort(sizes.begin(), sizes.end());
  if (std::unique(sizes.begin(), sizes.end()) - sizes.begin() < 3) {
    throw Error(ErrorKind::InsufficientData, "fit_z needs three or more sizes");
  }
  std::vector<std::array<double, 2>> x;
  std::vector<double> y;
  std::vector<double> sigma;
  for (const auto& p : points) {
    if (!(p.value > 0.0 && p.value < 1.0)) throw Error(ErrorKind::InvalidArgument, "S/N must lie in (0, 1)");
    const double lv = std::log(p.value);
    // ln(-ln v) - ln r = ln a - z ln L
    x.push_back({1.0, -std::log(static_cast<double>(p.L))});
    y.push_back(std::log(-lv) - std::log(static_cast<double>(p.r)));
    sigma.push_back(p.err / (p.value * std::abs(lv)));
  }
  const Lsq2 f = lsq2(x, y, sigma);
  ZFit out;
  out.a = std::exp(f.p[0]);
  out.z = f.p[1];
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) out.cov[i][j] = f.cov[i][j];
  return out;
}

NegativityFit negativity_fit(const std::vector<int>& L, const std::vector<double>& value, const std::vector<double>& err) {
  if (L.size() != value.size() || (!err.empty() && err.size() != L.size())) {
    throw Error(ErrorKind::DimensionMismatch, "fit arrays differ in length");
  }
  if (L.size() < 2) throw Error(ErrorKind::InsufficientData, "negativity fit needs two or more sizes");
  std::vector<std::array<double, 2>> x;
  for (int l : L) {
    const double k = std::numbers::ln2 / 3.0;
    x.push_back({k * l, k * l * std::log(static_cast<double>(l))});
  }
  const Lsq2 f = lsq2(x, value, err);
  NegativityFit out;
  out.c1 = f.p[0];
  out.c2 = f.p[1];
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) out.cov[i][j] = f.cov[i][j];
  return out;
}

}  // namespace hfc
