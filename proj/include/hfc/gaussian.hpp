#pragma once

#include <Eigen/Dense>
#include <complex>
#include <utility>
#include <vector>

#include "hfc/lattice.hpp"

namespace hfc {

using Mat = Eigen::MatrixXd;
using CMat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXd;

/// Real antisymmetric Majorana covariance, G_ij = <i c_i c_j> for i != j.
using Covariance = Mat;

/// Unnormalized Gaussian operator X: its covariance and ln Tr X.
struct GaussianState {
  Covariance cov;
  double log_weight = 0.0;
  bool flagged = false;  // a regularized composition touched this state

  /// The identity operator on n Majoranas (maximally mixed state, weight 2^{n/2}).
  static GaussianState maximally_mixed(int n);
  int size() const noexcept { return static_cast<int>(cov.rows()); }
};

struct LayerNode {
  int a = 0;  // Majorana on sublattice A
  int b = 0;
  int eta = 1;  // net sign s*u
};

/// One measurement round: product over nodes of exp((tau/2) eta i c_a c_b).
struct LayerKernel {
  int round = 0;
  double tau = 0.0;
  std::vector<LayerNode> nodes;
};

struct Spectrum {
  std::vector<double> eps;  // non-positive branch, ascending
  std::vector<double> kappa;  // all N values 2 ln sigma of the transfer product, descending
  double beta = 0.0;
  double ln_b = 0.0;
  int n_majorana = 0;
};

struct ThermalQuantities {
  double F = 0.0;
  double E = 0.0;
  double varE = 0.0;
  double S_c = 0.0;
  double E0 = 0.0;
  double lambda0 = 0.0;
  double gap = 0.0;
};

/// Covariance of the product XY of two Gaussian operators. Complex: XY is not Hermitian unless X and Y commute.
CMat compose(const CMat& x, const CMat& y, bool* flagged = nullptr);
CMat compose(const Covariance& x, const Covariance& y, bool* flagged = nullptr);

/// Real part of compose(x, y): G_y (1 - G_x G_y)^-1 + (1 - G_x G_y)^-1 G_x.
/// Re G_xy = Re G_yx, which is all a trace ratio Tr(XYP) + Tr(YXP) needs.
Covariance compose_real_part(const Covariance& x, const Covariance& y, bool* flagged = nullptr);

/// Covariance of K X K for Hermitian Gaussian K, X (real).
Covariance sandwich(const Covariance& k, const Covariance& x, bool* flagged = nullptr);

/// ln(Tr XY) - ln Tr X - ln Tr Y + (N/2) ln 2 = (1/2) ln det(1 - G_x G_y).
double log_trace_overlap(const Covariance& x, const Covariance& y);
std::complex<double> log_trace_overlap(const CMat& x, const CMat& y);

/// X -> (1 + t P) X (1 + t P) with P = i c_a c_b, normalized; returns
/// ln(1 + 2 t G_ab + t^2). Rows are updated in parallel.
double pair_update(Covariance& g, int a, int b, double t);
/// Serial reference of pair_update.
double pair_update_serial(Covariance& g, int a, int b, double t);

/// K X K with K the layer operator; log_weight tracks ln Tr.
void apply_layer(GaussianState& state, const LayerKernel& kernel);
void apply_layer_serial(GaussianState& state, const LayerKernel& kernel);
/// Same result built from two full compositions with the layer covariance.
void apply_layer_by_composition(GaussianState& state, const LayerKernel& kernel);

/// Covariance of the normalized layer operator on n Majoranas.
Covariance layer_covariance(const LayerKernel& kernel, int n);
/// ln Tr K for the layer operator on n Majoranas.
double layer_log_trace(const LayerKernel& kernel, int n);
/// ln of the Kraus normalization per slot, ln(2 cosh tau).
double slot_log_norm(double tau);

/// Effective single-mode energies of the whole channel from stabilized
/// transfer-matrix products (beta = number of kernels).
Spectrum spectrum(const std::vector<LayerKernel>& kernels, int n_majorana);
/// -beta F from a spectrum; equals the incremental log_weight.
double log_partition(const Spectrum& spec);

ThermalQuantities thermal_quantities(const Spectrum& spec);

/// Singular values of row-graded `dv` (descending) by one-sided Jacobi on its transpose.
Vec jacobi_singular_values(const Mat& dv);

/// Hermitian form -i G.
CMat hermitian_form(const Covariance& g);

/// ln of the trace norm of the partially time-reversed state, region A
/// given by in_a (one Majorana per site).
double negativity(const Covariance& g, const std::vector<char>& in_a);

struct ProfileBin {
  double distance = 0.0;
  double mean_abs = 0.0;
  int pairs = 0;
};

/// Mean |G_ij| over site pairs grouped by lattice distance.
std::vector<ProfileBin> correlation_profile(const Covariance& g, const Lattice& lattice);

/// max |G + G^T|.
double antisymmetry_error(const Covariance& g);

}  // namespace hfc
