#pragma once

#include <cstdint>
#include <vector>

#include "hfc/gaussian.hpp"
#include "hfc/lattice.hpp"
#include "hfc/rng.hpp"

namespace hfc {

/// Gate angles closer than this to pi/4 are clamped for Gaussian evolution.
inline constexpr double kCliffordMargin = 1e-6;

struct MeasurementStrength {
  double t = 0.0;
  double tau = 0.0;  // tanh(tau/2) = tan(t)

  static MeasurementStrength from_t(double t);
  /// t given in units of pi.
  static MeasurementStrength from_t_over_pi(double t_pi);
};

/// Outcome record s (one sign per slot) and static gauge field u (one per bond).
struct GaugeTrajectory {
  std::vector<std::int8_t> s;
  std::vector<std::int8_t> u;

  static GaugeTrajectory trivial(const Schedule& schedule);
  /// net(slot) = s(slot) * u(bond of slot).
  int net(const Schedule& schedule, int slot) const { return s[slot] * u[schedule.slot(slot).bond]; }
};

/// Per-slot net field s*u.
std::vector<std::int8_t> net_field(const GaugeTrajectory& traj, const Schedule& schedule);

/// Layer kernels for a per-slot net field.
std::vector<LayerKernel> layer_kernels(const MeasurementStrength& ms, const Lattice& lattice,
                                       const Schedule& schedule, const std::vector<std::int8_t>& net);
LayerKernel layer_kernel(const MeasurementStrength& ms, const Lattice& lattice, const Schedule& schedule,
                         const std::vector<std::int8_t>& net, int round);

struct TrajectoryResult {
  GaussianState state;
  Spectrum spectrum;
  double log_w = 0.0;  // ln p_su + ln B
  std::vector<std::int8_t> net;
};

TrajectoryResult run_trajectory(const MeasurementStrength& ms, const Lattice& lattice, const Schedule& schedule,
                                const GaugeTrajectory& traj, bool with_spectrum = true);

/// Evolve from the maximally mixed state with a per-slot net field.
GaussianState evolve_net(const MeasurementStrength& ms, const Lattice& lattice, const Schedule& schedule,
                         const std::vector<std::int8_t>& net);

double log_weight(const MeasurementStrength& ms, const Lattice& lattice, const Schedule& schedule,
                  const GaugeTrajectory& traj);

/// ln B: sum over slots of ln(2 cosh tau).
double log_normalization(const MeasurementStrength& ms, const Schedule& schedule);

GaugeTrajectory sample_uniform_trajectory(Rng& rng, const Schedule& schedule);

/// Exact sequential draw of a net field from w(net) = Tr(K...K K...K): each
/// slot takes eta with probability (1 + eta tanh(tau) G_ab)/2 given the past.
std::vector<std::int8_t> sample_born_net(const MeasurementStrength& ms, const Lattice& lattice,
                                         const Schedule& schedule, Rng& rng, GaussianState* final_state = nullptr);

/// The scalar that the ordered product of factors (i c_a c_b) reduces to when
/// every Majorana index appears an even number of times.
int majorana_loop_sign(const std::vector<std::pair<int, int>>& factors);

/// Sign chi in  W = chi * prod u  for a flux window, where W is the product of
/// the second round's bond operators times the first round's.
int window_sign(const Lattice& lattice, const Schedule& schedule, const FluxWindow& window);

}  // namespace hfc
