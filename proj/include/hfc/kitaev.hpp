#pragma once

#include <cstdint>
#include <vector>

#include "hfc/binning.hpp"
#include "hfc/gaussian.hpp"
#include "hfc/lattice.hpp"

namespace hfc {

enum class FermionBoundary { Antiperiodic, Periodic };

/// Real antisymmetric A with H = (i/4) c^T A c for H = sum over bonds of the
/// bond's Pauli pair, A_ab = 2 u_b (times -1 on seam bonds when antiperiodic).
Mat quadratic_hamiltonian(const Lattice& lattice, const std::vector<std::int8_t>& u,
                          FermionBoundary bc = FermionBoundary::Antiperiodic);

/// Free-fermion thermodynamics of one gauge sector, totals over the lattice.
struct SectorThermo {
  double log_z = 0.0;  // ln prod_k 2 cosh(beta eps_k / 2)
  double energy = 0.0;
  double var_energy = 0.0;
  Covariance cov;  // <i c_j c_k>, only when requested
};

/// Gauge structure of the torus: fluxes, the two holonomies, and bond moves
/// that flip the two fluxes next to a bond while keeping both holonomies.
class KitaevModel {
 public:
  KitaevModel(const Lattice& lattice, FermionBoundary bc = FermionBoundary::Antiperiodic);

  const Lattice& lattice() const { return *lat_; }
  int num_sites() const { return lat_->num_sites(); }
  /// -1 on bonds across the antiperiodic seam, else +1.
  double seam(int bond) const { return seam_.at(bond); }

  std::vector<int> fluxes(const std::vector<std::int8_t>& u) const;
  double mean_flux(const std::vector<std::int8_t>& u) const;
  /// Holonomies along two fixed non-contractible cycles, as signs.
  std::pair<int, int> holonomies(const std::vector<std::int8_t>& u) const;

  /// A gauge field with the given plaquette fluxes and trivial holonomies.
  /// Throws InvalidArgument when the product of fluxes is not +1.
  std::vector<std::int8_t> representative(const std::vector<int>& flux) const;
  /// Bonds to flip so that exactly the two plaquettes sharing `bond` change.
  const std::vector<int>& move(int bond) const { return moves_.at(bond); }

  /// Positive single-particle energies (singular values of the A -> B block).
  Vec energies(const std::vector<std::int8_t>& u) const;
  SectorThermo thermo(const std::vector<std::int8_t>& u, double beta, bool with_cov) const;
  static SectorThermo thermo_from_energies(const Vec& eps, double beta);

 private:
  const Lattice* lat_;
  FermionBoundary bc_;
  std::vector<double> seam_;  // per bond, -1 across the antiperiodic seam
  std::vector<std::vector<char>> cycles_;  // two holonomy cycles over bonds
  std::vector<std::vector<int>> moves_;
};

struct KitaevExactPoint {
  double beta = 0.0;
  double energy = 0.0;      // per site
  double c_v = 0.0;         // fluctuation formula, per site
  double c_v_deriv = 0.0;   // beta^2 d^2 ln Z / d beta^2, per site
  double flux = 0.0;        // <W> averaged over plaquettes
  double negativity = 0.0;  // sector-weighted
  double free_energy = 0.0;  // per site
};

/// Exact sum over all flux sectors (one gauge representative each, holonomy
/// fixed). L = 3 only.
std::vector<KitaevExactPoint> exact_flux_sum(const Lattice& lattice, const std::vector<double>& betas,
                                             FermionBoundary bc = FermionBoundary::Antiperiodic);

struct KitaevMcConfig {
  int sweeps = 4000;
  int burn_in = 500;
  std::uint64_t seed = 1;
  bool negativity = true;
};

struct KitaevMcResult {
  double beta = 0.0;
  BinnedStats energy;  // per site
  BinnedStats c_v;     // block jackknife over the stored series
  BinnedStats flux;
  BinnedStats negativity;
  double acceptance = 0.0;
};

/// Metropolis over flux sectors with weight Z_u; random-scan bond moves.
KitaevMcResult flux_mc(const Lattice& lattice, double beta, const KitaevMcConfig& cfg,
                       FermionBoundary bc = FermionBoundary::Antiperiodic);

/// Jackknife over `blocks` contiguous blocks for beta^2/N (<Q> - <E>^2).
BinnedStats fluctuation_jackknife(const std::vector<double>& e, const std::vector<double>& q, double scale,
                                  int blocks = 32);

}  // namespace hfc
