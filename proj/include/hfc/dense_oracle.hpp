#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "hfc/circuit.hpp"
#include "hfc/lattice.hpp"
#include "hfc/rng.hpp"

namespace hfc {

using cplx = std::complex<double>;

inline constexpr int kMaxOracleQubits = 14;
inline constexpr int kMaxOracleSlots = 24;

/// i^phase * prod_q X_q^{x_q} Z_q^{z_q}.
struct PauliString {
  std::uint32_t x = 0;
  std::uint32_t z = 0;
  int phase = 0;  // exponent of i, mod 4

  static PauliString single(int qubit, Pauli p);
  /// sigma^mu_a sigma^mu_b for the basis of the bond's color.
  static PauliString bond(const Lattice& lattice, int bond);
  PauliString operator*(const PauliString& o) const;
  /// <w ^ x| P |w>.
  cplx amplitude(std::uint32_t w) const;
};

/// Row-major 2^n x 2^n density matrix (not necessarily normalized).
struct DensityMatrix {
  int n = 0;
  std::vector<cplx> data;

  static DensityMatrix maximally_mixed(int n);
  std::size_t dim() const noexcept { return std::size_t{1} << n; }
  cplx& operator()(std::size_t r, std::size_t c) { return data[r * dim() + c]; }
  const cplx& operator()(std::size_t r, std::size_t c) const { return data[r * dim() + c]; }
  cplx trace() const;
  cplx expectation(const PauliString& p) const;  // Tr(P rho), unnormalized
};

/// Unnormalized K rho K^dagger with K = cosh(tau/2)(1 + s tan(t) O)/sqrt(2 cosh tau);
/// its trace is the outcome probability for normalized rho. Parallel over rows.
DensityMatrix apply_weak_measurement(const DensityMatrix& rho, const PauliString& op, double t, int s);
DensityMatrix apply_weak_measurement_serial(const DensityMatrix& rho, const PauliString& op, double t, int s);

/// The same channel through the ancilla gate sequence: basis rotation, two
/// RZZ rotations with the ancilla, ancilla X measurement and Pauli correction.
DensityMatrix apply_weak_measurement_gates(const DensityMatrix& rho, int qa, int qb, Pauli basis, double t, int s);

DensityMatrix random_density_matrix(int n, Rng& rng);

struct OracleRecord {
  std::uint32_t code = 0;  // bit (slots-1-k) set when slot k has s = -1
  double prob = 0.0;
  std::vector<double> parity;  // <O_b> per bond
  std::vector<double> flux;    // <W> per schedule window
};

struct OracleEnumeration {
  int slots = 0;
  std::vector<OracleRecord> records;  // lexicographic in slot order
  std::vector<PauliString> window_ops;
};

std::vector<std::int8_t> decode_outcomes(std::uint32_t code, int slots);

OracleEnumeration enumerate_protocol(const Lattice& lattice, const Schedule& schedule, double t);

/// Gaussian-route counterpart of one record: exact sums over u.
struct GaussianRecord {
  double prob = 0.0;
  std::vector<double> parity;
  std::vector<double> flux;
};

GaussianRecord gaussian_record(const Lattice& lattice, const Schedule& schedule, double t,
                               const std::vector<std::int8_t>& s);

struct CrosscheckReport {
  double t = 0.0;
  double max_dev_prob = 0.0;
  double max_dev_parity = 0.0;
  double max_dev_flux = 0.0;
  double total_prob = 0.0;
  // sum over records of P(s) times the largest expectation deviation; stays
  // small when only improbable records lose digits
  double weighted_dev = 0.0;
  int records = 0;

  double max_deviation() const;
};

CrosscheckReport crosscheck(const Lattice& lattice, const Schedule& schedule, double t);

}  // namespace hfc
