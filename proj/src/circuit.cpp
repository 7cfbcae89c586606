#include "hfc/circuit.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "hfc/error.hpp"

namespace hfc {

MeasurementStrength MeasurementStrength::from_t(double t) {
  if (!(t >= 0.0) || t > std::numbers::pi / 4 + 1e-12) {
    throw Error(ErrorKind::InvalidArgument, "t must lie in [0, pi/4]");
  }
  MeasurementStrength ms;
  ms.t = std::min(t, std::numbers::pi / 4 - kCliffordMargin);
  ms.tau = 2.0 * std::atanh(std::tan(ms.t));
  return ms;
}

MeasurementStrength MeasurementStrength::from_t_over_pi(double t_pi) { return from_t(t_pi * std::numbers::pi); }

GaugeTrajectory GaugeTrajectory::trivial(const Schedule& schedule) {
  GaugeTrajectory g;
  g.s.assign(schedule.num_slots(), 1);
  g.u.assign(schedule.num_bonds(), 1);
  return g;
}

std::vector<std::int8_t> net_field(const GaugeTrajectory& traj, const Schedule& schedule) {
  if (static_cast<int>(traj.s.size()) != schedule.num_slots() ||
      static_cast<int>(traj.u.size()) != schedule.num_bonds()) {
    throw Error(ErrorKind::DimensionMismatch, "trajectory shape does not match schedule");
  }
  std::vector<std::int8_t> net(traj.s.size());
  for (int i = 0; i < schedule.num_slots(); ++i) net[i] = static_cast<std::int8_t>(traj.net(schedule, i));
  return net;
}

LayerKernel layer_kernel(const MeasurementStrength& ms, const Lattice& lattice, const Schedule& schedule,
                         const std::vector<std::int8_t>& net, int round) {
  LayerKernel k;
  k.round = round;
  k.tau = ms.tau;
  const int off = schedule.round_offset(round);
  const auto& bonds = schedule.round(round).bonds;
  k.nodes.reserve(bonds.size());
  for (std::size_t i = 0; i < bonds.size(); ++i) {
    const Bond& b = lattice.bond(bonds[i]);
    k.nodes.push_back({b.a, b.b, net[off + i]});
  }
  return k;
}

std::vector<LayerKernel> layer_kernels(const MeasurementStrength& ms, const Lattice& lattice,
                                       const Schedule& schedule, const std::vector<std::int8_t>& net) {
  if (static_cast<int>(net.size()) != schedule.num_slots()) {
    throw Error(ErrorKind::DimensionMismatch, "net field shape does not match schedule");
  }
  std::vector<LayerKernel> ks;
  for (int n = 0; n < schedule.num_rounds(); ++n) ks.push_back(layer_kernel(ms, lattice, schedule, net, n));
  return ks;
}

GaussianState evolve_net(const MeasurementStrength& ms, const Lattice& lattice, const Schedule& schedule,
                         const std::vector<std::int8_t>& net) {
  GaussianState state = GaussianState::maximally_mixed(lattice.num_sites());
  for (const auto& k : layer_kernels(ms, lattice, schedule, net)) apply_layer(state, k);
  return state;
}

TrajectoryResult run_trajectory(const MeasurementStrength& ms, const Lattice& lattice, const Schedule& schedule,
                                const GaugeTrajectory& traj, bool with_spectrum) {
  TrajectoryResult res;
  res.net = net_field(traj, schedule);
  const auto ks = layer_kernels(ms, lattice, schedule, res.net);
  res.state = GaussianState::maximally_mixed(lattice.num_sites());
  for (const auto& k : ks) apply_layer(res.state, k);
  res.log_w = res.state.log_weight;
  if (with_spectrum) res.spectrum = spectrum(ks, lattice.num_sites());
  return res;
}

double log_weight(const MeasurementStrength& ms, const Lattice& lattice, const Schedule& schedule,
                  const GaugeTrajectory& traj) {
  return evolve_net(ms, lattice, schedule, net_field(traj, schedule)).log_weight;
}

double log_normalization(const MeasurementStrength& ms, const Schedule& schedule) {
  return schedule.num_slots() * slot_log_norm(ms.tau);
}

GaugeTrajectory sample_uniform_trajectory(Rng& rng, const Schedule& schedule) {
  GaugeTrajectory g;
  g.s.resize(schedule.num_slots());
  g.u.resize(schedule.num_bonds());
  for (auto& x : g.s) x = coin(rng) ? 1 : -1;
  for (auto& x : g.u) x = coin(rng) ? 1 : -1;
  return g;
}

std::vector<std::int8_t> sample_born_net(const MeasurementStrength& ms, const Lattice& lattice,
                                         const Schedule& schedule, Rng& rng, GaussianState* final_state) {
  GaussianState state = GaussianState::maximally_mixed(lattice.num_sites());
  std::vector<std::int8_t> net(schedule.num_slots());
  const double th = std::tanh(0.5 * ms.tau);
  const double th_full = std::tanh(ms.tau);
  const double lc = 2.0 * std::log(std::cosh(0.5 * ms.tau));
  for (int k = 0; k < schedule.num_slots(); ++k) {
    const Bond& b = lattice.bond(schedule.slot(k).bond);
    const double p_plus = 0.5 * (1.0 + th_full * state.cov(b.a, b.b));
    net[k] = uniform01(rng) < p_plus ? 1 : -1;
    state.log_weight += lc + pair_update(state.cov, b.a, b.b, net[k] * th);
  }
  if (final_state) *final_state = std::move(state);
  return net;
}

int majorana_loop_sign(const std::vector<std::pair<int, int>>& factors) {
  // Each factor contributes a phase i and two Majoranas; bubble-sort the word,
  // counting transpositions, then cancel squares c^2 = 1.
  std::vector<int> word;
  for (auto [a, b] : factors) {
    word.push_back(a);
    word.push_back(b);
  }
  int sign = 1;
  for (std::size_t i = 0; i < word.size(); ++i) {
    for (std::size_t j = 0; j + 1 < word.size() - i; ++j) {
      if (word[j] > word[j + 1]) {
        std::swap(word[j], word[j + 1]);
        sign = -sign;
      }
    }
  }
  for (std::size_t i = 0; i < word.size(); i += 2) {
    if (i + 1 >= word.size() || word[i] != word[i + 1]) {
      throw Error(ErrorKind::InvalidArgument, "Majorana word does not close");
    }
  }
  // i^k with k = number of factors, which must be even for a closed loop.
  const int k = static_cast<int>(factors.size()) % 4;
  if (k % 2 != 0) throw Error(ErrorKind::InvalidArgument, "odd number of bilinears");
  return k == 2 ? -sign : sign;
}

int window_sign(const Lattice& lattice, const Schedule& schedule, const FluxWindow& window) {
  std::vector<std::pair<int, int>> second;
  std::vector<std::pair<int, int>> first;
  for (int slot : window.slots) {
    const Slot& sl = schedule.slot(slot);
    const Bond& b = lattice.bond(sl.bond);
    (sl.round == window.first_round ? first : second).emplace_back(b.a, b.b);
  }
  second.insert(second.end(), first.begin(), first.end());
  return majorana_loop_sign(second);
}

}  // namespace hfc
