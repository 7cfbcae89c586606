#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hfc/gaussian.hpp"
#include "hfc/lattice.hpp"

namespace hfc {

/// NetEnsemble estimators are gauge invariant functions of the net field and
/// average over the outer chain alone. Replica estimators pair an outer
/// sample (u = +1) with inner samples over u.
enum class EstimatorClass { NetEnsemble, Replica };

enum class EstimatorKind {
  FluxCross,
  ParityCross,
  Energy,
  EnergyVar,
  Entropy,
  Lambda0,
  Gap,
  Negativity,
  FluxEA,
  ParityEA,
  ULinear,
  EnergyReplica,
  SpecificHeat,
};

struct EstimatorSpec {
  std::string name;
  EstimatorClass cls = EstimatorClass::NetEnsemble;
  EstimatorKind kind = EstimatorKind::Energy;
  std::vector<int> payload;  // plaquettes, bonds or window indices; empty means all

  bool needs_spectrum() const;
  bool needs_negativity() const { return kind == EstimatorKind::Negativity; }
};

EstimatorSpec flux_ea(std::vector<int> plaquettes = {});
/// payload indexes Schedule::final_windows().
EstimatorSpec flux_cross(std::vector<int> windows = {});
EstimatorSpec parity_cross(std::vector<int> bonds = {});
EstimatorSpec parity_ea(std::vector<int> bonds = {});
/// u_b * Gamma_b(s, u=+1) without the replica partner; averages to zero.
EstimatorSpec u_linear(std::vector<int> bonds = {});
EstimatorSpec specific_heat();
EstimatorSpec negativity_average();
EstimatorSpec thermal_estimator(EstimatorKind kind);

/// Everything the sampler can report for a schedule; negativity only on a torus.
std::vector<EstimatorSpec> default_estimators(const Lattice& lattice, bool replica, bool negativity);

/// Fixed per-run data shared by all estimator evaluations.
struct EstimatorContext {
  const Lattice* lattice = nullptr;
  const Schedule* schedule = nullptr;
  std::vector<FluxWindow> final_windows;
  std::vector<int> window_chi;  // sign relating W to the product of u
  std::vector<int> last_slot;   // per bond, its latest slot
  std::vector<int> final_bonds;  // bonds measured in the last round
  Cut cut;                      // empty unless negativity is requested
  double beta = 0.0;
  int n_majorana = 0;

  static EstimatorContext make(const Lattice& lattice, const Schedule& schedule, bool with_cut);
};

/// One evaluated net field: its final covariance and optional spectrum data.
struct NetSample {
  const std::vector<std::int8_t>* net = nullptr;
  const Covariance* cov = nullptr;
  ThermalQuantities thermal;
  bool has_thermal = false;
  double negativity = 0.0;
  bool has_negativity = false;
};

double evaluate(const EstimatorSpec& spec, const EstimatorContext& ctx, const NetSample& sample);
double evaluate(const EstimatorSpec& spec, const EstimatorContext& ctx, const NetSample& outer,
                const std::vector<std::int8_t>& u, const NetSample& inner);

/// C_v from one branch: the inner samples pair with each other as replicas,
/// sum_{i != j} E_i E_j / (n(n-1)) standing in for [<E>^2].
double specific_heat_branch(const EstimatorContext& ctx, double sum_e, double sum_e2, double sum_var, int count);

// --- reference curves --------------------------------------------------------

/// [<W> W_s] = tanh^6 tau = sin^6 2t.
double flux_cross_exact(double t);
/// [<sigma sigma> s_r] = sin 2t.
double parity_cross_exact(double t);
/// Ansatz for the flux entropy in bits, r the circuit depth.
double su_ansatz(double t, int r);
/// [<W>^2] implied by the ansatz.
double flux_ea_ansatz(double t, int r);
/// Maps a measured [<W>^2] onto the sin^12 2t axis.
double collapse_transform(double w2, int r);
double clifford_negativity(int L);
double clifford_lambda0_per_n(int L);

struct Crossing {
  double t_c = 0.0;
  double err = 0.0;
};

/// Linear interpolation of the first crossing of 1/2 on an ascending t grid.
Crossing pseudo_threshold(const std::vector<double>& t, const std::vector<double>& w2,
                          const std::vector<double>& err = {});

struct ScalingPoint {
  int L = 0;
  int r = 0;
  double value = 0.0;  // S/N
  double err = 0.0;
};

struct ZFit {
  double z = 0.0;
  double a = 0.0;
  double cov[2][2] = {{0, 0}, {0, 0}};  // of (ln a, z)
  double z_err() const;
};

/// Fits S/N = exp(-a r / L^z) at one t; needs three or more sizes.
ZFit fit_z(const std::vector<ScalingPoint>& points);

struct NegativityFit {
  double c1 = 0.0;
  double c2 = 0.0;
  double cov[2][2] = {{0, 0}, {0, 0}};
  double c2_err() const;
};

/// Fits E = (c1 L + c2 L ln L) ln2 / 3.
NegativityFit negativity_fit(const std::vector<int>& L, const std::vector<double>& value,
                             const std::vector<double>& err = {});

}  // namespace hfc
