#include "hfc/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numbers>

#include "hfc/error.hpp"

namespace hfc {

void CombConfig::validate() const {
  if (outer_sweeps < 1) throw Error(ErrorKind::InvalidArgument, "outer_sweeps must be positive");
  if (burn_in < 0 || burn_in >= outer_sweeps) throw Error(ErrorKind::InvalidArgument, "need 0 <= burn_in < outer_sweeps");
  if (branch_interval < 1) throw Error(ErrorKind::InvalidArgument, "branch_interval must be >= 1");
  if (inner_sweeps < 0) throw Error(ErrorKind::InvalidArgument, "inner_sweeps must be >= 0");
  if (inner_sweeps > 0 && effective_inner_burn_in() >= inner_sweeps) {
    throw Error(ErrorKind::InvalidArgument, "inner_burn_in must be below inner_sweeps");
  }
  if (chains < 1) throw Error(ErrorKind::InvalidArgument, "chains must be >= 1");
}

int CombConfig::num_branches() const { return inner_sweeps > 0 ? (outer_sweeps - burn_in) / branch_interval : 0; }

// --- outer chain ---------------------------------------------------------------

namespace {

constexpr double kDriftTolerance = 1e-6;  // relative to |log w| once that exceeds 1
constexpr double kPoorRcond = 1e-13;
constexpr double kRefreshGrowth = 4.0;
constexpr double kFastRatioLimit = 100.0;  // max |(1 - G_E G_Z)^-1| for the closed-form flip ratio

Mat zeroed_column(const Covariance& g, int col, int a, int b) {
  Mat v = g.col(col);
  v(a) = 0.0;
  v(b) = 0.0;
  return v;
}

// (minv, h) after G_Z -> G_Z + delta, delta the change made by one pair update.
// Outside rows/cols a, b the change is rank two; the rows and columns add four.
void woodbury_pair(Mat& minv, Mat& h, const Covariance& old, const Covariance& now, int a, int b, double c) {
  const int n = static_cast<int>(old.rows());
  Mat x = Mat::Zero(n, 6);
  Mat y = Mat::Zero(n, 6);
  const Mat ra = zeroed_column(old.transpose(), a, a, b);
  const Mat rb = zeroed_column(old.transpose(), b, a, b);
  const Mat delta = now - old;
  x.col(0) = ra;
  x.col(1) = rb;
  x(a, 2) = 1.0;
  x(b, 3) = 1.0;
  x.col(4) = zeroed_column(delta, a, a, b);
  x.col(5) = zeroed_column(delta, b, a, b);
  y.col(0) = -c * rb;
  y.col(1) = c * ra;
  y.col(2) = delta.row(a).transpose();
  y.col(3) = delta.row(b).transpose();
  y(a, 4) = 1.0;
  y(b, 5) = 1.0;
  const Mat hx = h * x;
  const Mat s = Mat::Identity(6, 6) - y.transpose() * hx;
  const Eigen::PartialPivLU<Mat> lu(s);
  const Mat left = hx * lu.inverse();
  const Mat ym = y.transpose() * minv;
  const Mat yh = y.transpose() * h;
  minv.noalias() += left * ym;
  h.noalias() += left * yh;
}

}  // namespace

double flip_log_ratio(const Covariance& z, const Mat& minv, const Mat& h, int a, int b, double tau, int eta) {
  const double aa = eta * std::tanh(tau);
  const double reg = z.row(a).dot(minv.col(b)) + h(a, b);
  const Vec ga = zeroed_column(z, a, a, b);
  const Vec gb = zeroed_column(z, b, a, b);
  const int n = static_cast<int>(z.rows());
  Mat hu(n, 4);
  hu.col(0) = h.col(a);
  hu.col(1) = h.col(b);
  hu.col(2) = h * ga;
  hu.col(3) = h * gb;
  Eigen::Matrix4d c = Eigen::Matrix4d::Identity();
  c.row(0) -= 2.0 * (ga.transpose() * hu);
  c.row(1) -= 2.0 * (gb.transpose() * hu);
  c.row(2) += 2.0 * hu.row(a);
  c.row(3) += 2.0 * hu.row(b);
  // Tr(E P Z P) / Tr(E Z) >= 0 for positive E, Z
  const double overlap = std::sqrt(std::max(c.determinant(), 0.0));
  const double val = 1.0 - 2.0 * aa * reg + aa * aa * overlap;
  if (!(val > 0.0)) return -std::numeric_limits<double>::infinity();
  return 2.0 * std::log(std::cosh(tau)) + std::log(val);
}

OuterChain::OuterChain(const MeasurementStrength& ms, const Lattice& lattice, const Schedule& schedule, Rng rng,
                       std::vector<std::int8_t> net)
    : ms_(ms), lat_(&lattice), sch_(&schedule), rng_(std::move(rng)), net_(std::move(net)) {
  if (net_.empty()) net_.assign(schedule.num_slots(), 1);
  if (static_cast<int>(net_.size()) != schedule.num_slots()) {
    throw Error(ErrorKind::DimensionMismatch, "outer net field does not match schedule");
  }
  final_ = evolve_net(ms_, lattice, schedule, net_);
  log_w_ = final_.log_weight;
}

void OuterChain::revalidate(double tracked) {
  final_ = evolve_net(ms_, *lat_, *sch_, net_);
  const double drift = std::abs(tracked - final_.log_weight);
  max_drift_ = std::max(max_drift_, drift);
  if (!(drift <= kDriftTolerance * std::max(1.0, std::abs(final_.log_weight))) || final_.flagged) ++flagged_;
  log_w_ = final_.log_weight;
}

void OuterChain::sweep() {
  const int rounds = sch_->num_rounds();
  const int n = lat_->num_sites();
  const auto ks = layer_kernels(ms_, *lat_, *sch_, net_);
  // env[k]: covariance of the operator built from rounds after k
  std::vector<Covariance> env(rounds);
  {
    GaussianState e = GaussianState::maximally_mixed(n);
    env[rounds - 1] = e.cov;
    for (int k = rounds - 1; k >= 1; --k) {
      apply_layer(e, ks[k]);
      env[k - 1] = e.cov;
    }
  }
  const double th_full = std::tanh(ms_.tau);
  const double lc2 = 2.0 * std::log(std::cosh(ms_.tau));
  double tracked = log_w_;
  bool poor = false;
  GaussianState z = GaussianState::maximally_mixed(n);
  for (int k = 0; k < rounds; ++k) {
    apply_layer(z, ks[k]);
    const Mat& ge = env[k];
    Mat minv, h;
    double ref = 0.0;    // max |minv| at the last factorization
    double scale = 0.0;  // max |minv| now
    double overlap = std::numeric_limits<double>::quiet_NaN();  // ln Tr(E Z) part, when known
    // Exact (1 - G_E G_Z)^-1. Woodbury updates lose digits fast once it grows
    // or shrinks by a large factor, so those cases are refactored from scratch.
    auto refresh = [&] {
      const Eigen::PartialPivLU<Mat> lu(Mat::Identity(n, n) - ge * z.cov);
      if (!(lu.rcond() > kPoorRcond)) poor = true;
      minv = lu.inverse();
      h = minv * ge;
      ref = scale = minv.cwiseAbs().maxCoeff();
      overlap = log_trace_overlap(ge, z.cov);
    };
    refresh();
    const int off = sch_->round_offset(k);
    const int count = static_cast<int>(sch_->round(k).bonds.size());
    for (int i = 0; i < count; ++i) {
      const int slot = off + i;
      const Bond& bond = lat_->bond(sch_->slot(slot).bond);
      const int eta = net_[slot];
      const double t = -eta * th_full;
      double lr = 0.0;
      Covariance flipped;
      double flipped_overlap = 0.0;
      double ln_d = 0.0;
      if (scale <= kFastRatioLimit) {
        lr = flip_log_ratio(z.cov, minv, h, bond.a, bond.b, ms_.tau, eta);
      } else {
        // near-singular 1 - G_E G_Z: the closed form cancels, take the ratio of
        // the two overlaps instead
        if (std::isnan(overlap)) overlap = log_trace_overlap(ge, z.cov);
        flipped = z.cov;
        ln_d = pair_update(flipped, bond.a, bond.b, t);
        flipped_overlap = log_trace_overlap(ge, flipped);
        lr = lc2 + ln_d + flipped_overlap - overlap;
      }
      ++proposals_;
      const double x = uniform01(rng_);
      if (!(std::log(x) < lr)) continue;
      ++accepted_;
      const Covariance old = z.cov;
      if (flipped.size() > 0) {
        z.cov = std::move(flipped);
        overlap = flipped_overlap;
      } else {
        ln_d = pair_update(z.cov, bond.a, bond.b, t);
        overlap = std::numeric_limits<double>::quiet_NaN();
      }
      z.log_weight += lc2 + ln_d;
      net_[slot] = static_cast<std::int8_t>(-eta);
      tracked += lr;
      woodbury_pair(minv, h, old, z.cov, bond.a, bond.b, 2.0 * t / std::exp(ln_d));
      scale = minv.cwiseAbs().maxCoeff();
      if (!(scale < kRefreshGrowth * ref && scale * kRefreshGrowth > ref)) refresh();
    }
  }
  if (poor) ++flagged_;
  revalidate(tracked);
}

void OuterChain::sweep_naive() {
  for (int slot = 0; slot < sch_->num_slots(); ++slot) {
    net_[slot] = static_cast<std::int8_t>(-net_[slot]);
    const double lw = evolve_net(ms_, *lat_, *sch_, net_).log_weight;
    ++proposals_;
    const double x = uniform01(rng_);
    if (std::log(x) < lw - log_w_) {
      ++accepted_;
      log_w_ = lw;
    } else {
      net_[slot] = static_cast<std::int8_t>(-net_[slot]);
    }
  }
  revalidate(log_w_);
}

void OuterChain::draw_direct() {
  net_ = sample_born_net(ms_, *lat_, *sch_, rng_, &final_);
  log_w_ = final_.log_weight;
}

// --- inner chain ---------------------------------------------------------------

InnerChain::InnerChain(const MeasurementStrength& ms, const Lattice& lattice, const Schedule& schedule,
                       std::vector<std::int8_t> s, Rng rng)
    : ms_(ms), lat_(&lattice), sch_(&schedule), rng_(std::move(rng)), s_(std::move(s)) {
  if (static_cast<int>(s_.size()) != schedule.num_slots()) {
    throw Error(ErrorKind::DimensionMismatch, "outcome record does not match schedule");
  }
  u_.assign(schedule.num_bonds(), 1);
  net_ = s_;
  const int rounds = schedule.num_rounds();
  fwd_.assign(rounds + 1, GaussianState{});
  bwd_.assign(rounds + 1, GaussianState{});
  fwd_[0] = GaussianState::maximally_mixed(lattice.num_sites());
  bwd_[rounds] = GaussianState::maximally_mixed(lattice.num_sites());
  fwd_valid_ = 0;
  bwd_valid_ = rounds;
  for (int b = 0; b < schedule.num_bonds(); ++b)
    if (!schedule.slots_of_bond(b).empty()) order_.push_back(b);
  auto span = [&](int b) {
    const auto& sl = schedule.slots_of_bond(b);
    return std::pair<int, int>(schedule.slot(sl.front()).round, schedule.slot(sl.back()).round);
  };
  std::stable_sort(order_.begin(), order_.end(), [&](int x, int y) { return span(x) < span(y); });
  log_w_ = forward(rounds).log_weight;
}

const GaussianState& InnerChain::forward(int n) {
  while (fwd_valid_ < n) {
    GaussianState st = fwd_[fwd_valid_];
    apply_layer(st, layer_kernel(ms_, *lat_, *sch_, net_, fwd_valid_));
    fwd_[++fwd_valid_] = std::move(st);
  }
  return fwd_[n];
}

const GaussianState& InnerChain::backward(int n) {
  while (bwd_valid_ > n) {
    GaussianState st = bwd_[bwd_valid_];
    apply_layer(st, layer_kernel(ms_, *lat_, *sch_, net_, bwd_valid_ - 1));
    bwd_[--bwd_valid_] = std::move(st);
  }
  return bwd_[n];
}

void InnerChain::invalidate(int first_round, int last_round) {
  fwd_valid_ = std::min(fwd_valid_, first_round);
  bwd_valid_ = std::max(bwd_valid_, last_round + 1);
}

std::vector<std::int8_t> InnerChain::flipped_net(int bond) const {
  std::vector<std::int8_t> net = net_;
  for (int slot : sch_->slots_of_bond(bond)) net[slot] = static_cast<std::int8_t>(-net[slot]);
  return net;
}

GaussianState InnerChain::propagate(const std::vector<std::int8_t>& net, int first_round, int last_round) {
  GaussianState st = forward(first_round);
  for (int n = first_round; n <= last_round; ++n) apply_layer(st, layer_kernel(ms_, *lat_, *sch_, net, n));
  return st;
}

double InnerChain::bond_flip_log_ratio(int bond) {
  const auto& sl = sch_->slots_of_bond(bond);
  if (sl.empty()) return 0.0;
  const int n1 = sch_->slot(sl.front()).round;
  const int nk = sch_->slot(sl.back()).round;
  const GaussianState z = propagate(flipped_net(bond), n1, nk);
  const GaussianState& e = backward(nk + 1);
  const double half_n_ln2 = 0.5 * lat_->num_sites() * std::numbers::ln2;
  const double lw = e.log_weight + z.log_weight - half_n_ln2 + log_trace_overlap(e.cov, z.cov);
  return lw - log_w_;
}

void InnerChain::sweep() {
  for (int b : order_) {
    // Each bond is offered with probability 1/2. At full acceptance an ordered
    // pass flips every bond and keeps each plaquette product fixed.
    if (!coin(rng_)) continue;
    const double lr = bond_flip_log_ratio(b);
    ++proposals_;
    const double x = uniform01(rng_);
    if (!std::isfinite(lr) && !(lr < 0.0)) {
      ++flagged_;
      continue;
    }
    if (!(std::log(x) < lr)) continue;
    ++accepted_;
    const auto& sl = sch_->slots_of_bond(b);
    u_[b] = static_cast<std::int8_t>(-u_[b]);
    for (int slot : sl) net_[slot] = static_cast<std::int8_t>(-net_[slot]);
    invalidate(sch_->slot(sl.front()).round, sch_->slot(sl.back()).round);
    log_w_ += lr;
  }
  for (int site = 0; site < lat_->num_sites(); ++site)
    if (coin(rng_)) gauge_flip(site);
}

void InnerChain::gauge_flip(int site) {
  for (int b : lat_->bonds_at(site)) {
    u_[b] = static_cast<std::int8_t>(-u_[b]);
    for (int slot : sch_->slots_of_bond(b)) net_[slot] = static_cast<std::int8_t>(-net_[slot]);
  }
  // c_site -> -c_site on every cached operator
  auto flip = [site](GaussianState& st) {
    st.cov.row(site) *= -1.0;
    st.cov.col(site) *= -1.0;
  };
  for (int n = 0; n <= fwd_valid_; ++n) flip(fwd_[n]);
  for (int n = bwd_valid_; n < static_cast<int>(bwd_.size()); ++n) flip(bwd_[n]);
}

const GaussianState& InnerChain::final_state() { return forward(sch_->num_rounds()); }

// --- comb ----------------------------------------------------------------------

void CombStats::merge(const CombStats& other) {
  for (const auto& [name, b] : other.bins) bins[name].merge(b);
  outer_samples += other.outer_samples;
  inner_samples += other.inner_samples;
  flagged += other.flagged;
  outer_proposals += other.outer_proposals;
  outer_accepted += other.outer_accepted;
  inner_proposals += other.inner_proposals;
  inner_accepted += other.inner_accepted;
}

const ObservableResult* CombResult::find(const std::string& name) const {
  for (const auto& o : observables)
    if (o.name == name) return &o;
  return nullptr;
}

namespace {

NetSample make_sample(const MeasurementStrength& ms, const Lattice& lat, const Schedule& sch,
                      const EstimatorContext& ctx, const std::vector<std::int8_t>& net, const Covariance& cov,
                      bool need_spectrum, bool need_negativity) {
  NetSample s;
  s.net = &net;
  s.cov = &cov;
  if (need_spectrum) {
    s.thermal = thermal_quantities(spectrum(layer_kernels(ms, lat, sch, net), lat.num_sites()));
    s.has_thermal = true;
  }
  if (need_negativity) {
    s.negativity = negativity(cov, ctx.cut.in_a);
    s.has_negativity = true;
  }
  return s;
}

struct RunPlan {
  std::vector<const EstimatorSpec*> net_specs;
  std::vector<const EstimatorSpec*> replica_specs;
  bool outer_spectrum = false;
  bool inner_spectrum = false;
  bool negativity = false;
};

RunPlan plan_for(const std::vector<EstimatorSpec>& estimators) {
  RunPlan p;
  for (const auto& e : estimators) {
    if (e.cls == EstimatorClass::NetEnsemble) {
      p.net_specs.push_back(&e);
      p.outer_spectrum = p.outer_spectrum || e.needs_spectrum();
    } else {
      p.replica_specs.push_back(&e);
      if (e.needs_spectrum()) {
        p.outer_spectrum = true;
        p.inner_spectrum = true;
      }
    }
    p.negativity = p.negativity || e.needs_negativity();
  }
  return p;
}

void advance_chain(ChainState& state, int chain, int target, const CombConfig& cfg, const MeasurementStrength& ms,
                   const Lattice& lat, const Schedule& sch, const EstimatorContext& ctx, const RunPlan& plan) {
  Rng rng;
  load_rng(rng, state.rng);
  OuterChain oc(ms, lat, sch, std::move(rng), state.net);
  const bool branching = cfg.inner_sweeps > 0 && !plan.replica_specs.empty();
  const int inner_burn = cfg.effective_inner_burn_in();
  for (int sweep = state.sweep + 1; sweep <= target; ++sweep) {
    if (cfg.outer_mode == OuterMode::Direct) {
      oc.draw_direct();
    } else if (cfg.use_cache) {
      oc.sweep();
    } else {
      oc.sweep_naive();
    }
    if (sweep <= cfg.burn_in) continue;
    const NetSample outer =
        make_sample(ms, lat, sch, ctx, oc.net(), oc.final_state().cov, plan.outer_spectrum, plan.negativity);
    for (const auto* spec : plan.net_specs) state.stats.bins[spec->name].add(evaluate(*spec, ctx, outer));
    ++state.stats.outer_samples;
    if (!branching || (sweep - cfg.burn_in) % cfg.branch_interval != 0) continue;

    InnerChain ic(ms, lat, sch, oc.net(), make_rng(cfg.seed, static_cast<std::uint64_t>(chain),
                                                    1 + static_cast<std::uint64_t>(state.branches)));
    std::vector<double> sums(plan.replica_specs.size(), 0.0);
    double sum_e = 0.0;
    double sum_e2 = 0.0;
    double sum_var = 0.0;
    int count = 0;
    for (int k = 1; k <= cfg.inner_sweeps; ++k) {
      ic.sweep();
      if (k <= inner_burn) continue;
      const NetSample inner = make_sample(ms, lat, sch, ctx, ic.net(), ic.final_state().cov, plan.inner_spectrum, false);
      for (std::size_t i = 0; i < plan.replica_specs.size(); ++i) {
        if (plan.replica_specs[i]->kind == EstimatorKind::SpecificHeat) continue;
        sums[i] += evaluate(*plan.replica_specs[i], ctx, outer, ic.u(), inner);
      }
      if (inner.has_thermal) {
        sum_e += inner.thermal.E;
        sum_e2 += inner.thermal.E * inner.thermal.E;
        sum_var += inner.thermal.varE;
      }
      ++count;
    }
    for (std::size_t i = 0; i < plan.replica_specs.size(); ++i) {
      const auto& spec = *plan.replica_specs[i];
      const double v = spec.kind == EstimatorKind::SpecificHeat
                           ? specific_heat_branch(ctx, sum_e, sum_e2, sum_var, count)
                           : sums[i] / count;
      state.stats.bins[spec.name].add(v);
    }
    state.stats.inner_samples += count;
    state.stats.inner_proposals += ic.proposals();
    state.stats.inner_accepted += ic.accepted();
    state.stats.flagged += ic.flagged();
    ++state.branches;
  }
  state.stats.outer_proposals += oc.proposals();
  state.stats.outer_accepted += oc.accepted();
  state.stats.flagged += oc.flagged();
  state.net = oc.net();
  state.rng = save_rng(oc.rng());
  state.sweep = target;
}

}  // namespace

CombResult finish_comb(const CombStats& stats, const MeasurementStrength& ms, const Schedule& schedule,
                       const std::vector<EstimatorSpec>& estimators) {
  CombResult res;
  res.stats = stats;
  for (const auto& e : estimators) {
    ObservableResult o;
    o.name = e.name;
    auto it = stats.bins.find(e.name);
    if (it != stats.bins.end() && it->second.count() >= 8) {
      o.stats = it->second.result();
    } else {
      // too few samples for an error bar
      o.stats.n = it == stats.bins.end() ? 0 : it->second.count();
      o.stats.mean = it == stats.bins.end() ? std::nan("") : it->second.mean();
      o.stats.stderr_ = std::nan("");
      o.stats.tau_int = std::nan("");
    }
    res.observables.push_back(o);
  }
  if (const auto* fc = res.find("flux_cross"); fc && !schedule.final_windows().empty() && fc->stats.stderr_ > 0.0) {
    const double expect = std::pow(std::tanh(ms.tau), 6);
    res.equilibration_sigma = std::abs(fc->stats.mean - expect) / fc->stats.stderr_;
    res.equilibrated = !(res.equilibration_sigma > 4.0);
  }
  return res;
}

CombResult run_comb(const CombConfig& cfg, const MeasurementStrength& ms, const Lattice& lattice,
                    const Schedule& schedule, const std::vector<EstimatorSpec>& estimators,
                    const CombControl& control) {
  cfg.validate();
  const RunPlan plan = plan_for(estimators);
  const EstimatorContext ctx = EstimatorContext::make(lattice, schedule, plan.negativity);

  std::vector<ChainState> chains;
  if (control.resume) {
    chains = control.resume->chains;
    if (static_cast<int>(chains.size()) != cfg.chains) {
      throw Error(ErrorKind::ValidationError, "checkpoint chain count differs from config");
    }
  } else {
    for (int c = 0; c < cfg.chains; ++c) {
      ChainState st;
      st.net.assign(schedule.num_slots(), 1);
      st.rng = save_rng(make_rng(cfg.seed, static_cast<std::uint64_t>(c), 0));
      chains.push_back(std::move(st));
    }
  }

  int done = chains.front().sweep;
  for (const auto& c : chains)
    if (c.sweep != done) throw Error(ErrorKind::ValidationError, "checkpoint chains out of step");
  while (done < cfg.outer_sweeps) {
    int target = cfg.outer_sweeps;
    if (control.checkpoint_every > 0) target = std::min(target, done + control.checkpoint_every);
    std::vector<std::exception_ptr> errors(chains.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (int c = 0; c < static_cast<int>(chains.size()); ++c) {
      try {
        advance_chain(chains[c], c, target, cfg, ms, lattice, schedule, ctx, plan);
      } catch (...) {
        errors[c] = std::current_exception();
      }
    }
    for (const auto& e : errors)
      if (e) std::rethrow_exception(e);
    done = target;
    if (control.checkpoint_every > 0 && control.sink) control.sink(CombCheckpoint{chains});
  }

  CombStats total;
  for (const auto& c : chains) total.merge(c.stats);
  const double samples = static_cast<double>(cfg.outer_sweeps) * cfg.chains + static_cast<double>(total.inner_samples);
  if (total.flagged > cfg.flagged_limit * samples) {
    throw Error(ErrorKind::FlaggedSamples, "flagged samples " + std::to_string(total.flagged) + " of " +
                                               std::to_string(static_cast<std::int64_t>(samples)) +
                                               " exceed the limit; see the drift and conditioning diagnostics");
  }
  return finish_comb(total, ms, schedule, estimators);
}

}  // namespace hfc
