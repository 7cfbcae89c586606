#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "hfc/binning.hpp"
#include "hfc/circuit.hpp"
#include "hfc/observables.hpp"

namespace hfc {

enum class OuterMode {
  Metropolis,  // single-slot flips with acceptance min(1, w'/w)
  Direct,      // independent draws from the sequential Born rule
};

struct CombConfig {
  int outer_sweeps = 2000;
  int burn_in = 500;
  int branch_interval = 100;
  int inner_sweeps = 1000;  // 0 disables branching
  int inner_burn_in = -1;   // -1: a tenth of inner_sweeps
  int chains = 1;
  std::uint64_t seed = 1;
  bool use_cache = true;
  OuterMode outer_mode = OuterMode::Metropolis;
  double flagged_limit = 1e-3;

  void validate() const;
  int effective_inner_burn_in() const { return inner_burn_in >= 0 ? inner_burn_in : inner_sweeps / 10; }
  int num_branches() const;
};

/// Metropolis chain over net fields with weight w(net) = Tr(K..K K..K).
class OuterChain {
 public:
  OuterChain(const MeasurementStrength& ms, const Lattice& lattice, const Schedule& schedule, Rng rng,
             std::vector<std::int8_t> net = {});

  /// One pass over all slots in round order, backed by cached environments.
  void sweep();
  /// Same proposals, each evaluated from scratch.
  void sweep_naive();
  /// Replace the state by an independent Born draw.
  void draw_direct();

  const std::vector<std::int8_t>& net() const { return net_; }
  double log_weight() const { return log_w_; }
  /// Final covariance of the current net field.
  const GaussianState& final_state() const { return final_; }
  Rng& rng() { return rng_; }
  const Rng& rng() const { return rng_; }

  std::int64_t proposals() const { return proposals_; }
  std::int64_t accepted() const { return accepted_; }
  /// Sweeps whose bookkeeping drifted or needed a regularized composition.
  std::int64_t flagged() const { return flagged_; }
  /// Largest |tracked - recomputed| log-weight seen at revalidation.
  double max_drift() const { return max_drift_; }

 private:
  void revalidate(double tracked);

  MeasurementStrength ms_;
  const Lattice* lat_;
  const Schedule* sch_;
  Rng rng_;
  std::vector<std::int8_t> net_;
  double log_w_ = 0.0;
  GaussianState final_;
  std::int64_t proposals_ = 0;
  std::int64_t accepted_ = 0;
  std::int64_t flagged_ = 0;
  double max_drift_ = 0.0;
};

/// Log ratio w(net with slot flipped) / w(net), given the state Z after the
/// slot's round and the environment E of the later rounds. `minv` is
/// (1 - G_E G_Z)^-1 and `h` is minv G_E.
double flip_log_ratio(const Covariance& z, const Mat& minv, const Mat& h, int a, int b, double tau, int eta);

/// Chain over the static gauge field u at fixed outcomes s.
class InnerChain {
 public:
  InnerChain(const MeasurementStrength& ms, const Lattice& lattice, const Schedule& schedule,
             std::vector<std::int8_t> s, Rng rng);

  /// Single-bond u flips (all slots of the bond at once, each bond offered
  /// with probability 1/2), then a random
  /// local gauge transformation, which leaves the weight unchanged.
  void sweep();

  const std::vector<std::int8_t>& u() const { return u_; }
  const std::vector<std::int8_t>& net() const { return net_; }
  double log_weight() const { return log_w_; }
  /// Final state of the current net field.
  const GaussianState& final_state();

  std::int64_t proposals() const { return proposals_; }
  std::int64_t accepted() const { return accepted_; }
  std::int64_t flagged() const { return flagged_; }

  /// Flip u on the three bonds of a site; exposed for testing.
  void gauge_flip(int site);
  /// Log ratio of flipping u_b, from the cached boundary states.
  double bond_flip_log_ratio(int bond);

 private:
  const GaussianState& forward(int n);   // state after rounds < n
  const GaussianState& backward(int n);  // operator of rounds >= n
  void invalidate(int first_round, int last_round);
  std::vector<std::int8_t> flipped_net(int bond) const;
  GaussianState propagate(const std::vector<std::int8_t>& net, int first_round, int last_round);

  MeasurementStrength ms_;
  const Lattice* lat_;
  const Schedule* sch_;
  Rng rng_;
  std::vector<std::int8_t> s_;
  std::vector<std::int8_t> u_;
  std::vector<std::int8_t> net_;
  double log_w_ = 0.0;
  std::vector<GaussianState> fwd_;
  std::vector<GaussianState> bwd_;
  int fwd_valid_ = 0;  // fwd_[n] valid for n <= fwd_valid_
  int bwd_valid_ = 0;  // bwd_[n] valid for n >= bwd_valid_
  std::vector<int> order_;  // bonds grouped by their first and last rounds
  std::int64_t proposals_ = 0;
  std::int64_t accepted_ = 0;
  std::int64_t flagged_ = 0;
};

/// Per-observable accumulators of one comb run.
struct CombStats {
  std::map<std::string, Binning> bins;
  std::int64_t outer_samples = 0;
  std::int64_t inner_samples = 0;
  std::int64_t flagged = 0;
  std::int64_t outer_proposals = 0;
  std::int64_t outer_accepted = 0;
  std::int64_t inner_proposals = 0;
  std::int64_t inner_accepted = 0;

  void merge(const CombStats& other);
};

struct ObservableResult {
  std::string name;
  BinnedStats stats;
};

struct CombResult {
  std::vector<ObservableResult> observables;  // in estimator order
  CombStats stats;
  bool equilibrated = true;  // flux cross-correlation within 4 sigma of tanh^6
  double equilibration_sigma = 0.0;

  const ObservableResult* find(const std::string& name) const;
};

/// State of one chain between outer sweeps: enough to resume bit-exactly.
struct ChainState {
  int sweep = 0;
  int branches = 0;
  std::vector<std::int8_t> net;
  std::string rng;
  CombStats stats;
};

struct CombCheckpoint {
  std::vector<ChainState> chains;
};

/// Called every `checkpoint_every` outer sweeps with the full state.
using CheckpointSink = std::function<void(const CombCheckpoint&)>;

struct CombControl {
  int checkpoint_every = 0;
  CheckpointSink sink;
  const CombCheckpoint* resume = nullptr;
};

CombResult run_comb(const CombConfig& cfg, const MeasurementStrength& ms, const Lattice& lattice,
                    const Schedule& schedule, const std::vector<EstimatorSpec>& estimators,
                    const CombControl& control = {});

/// Reduce per-chain statistics into results; flags disequilibrium.
CombResult finish_comb(const CombStats& stats, const MeasurementStrength& ms, const Schedule& schedule,
                       const std::vector<EstimatorSpec>& estimators);

}  // namespace hfc
