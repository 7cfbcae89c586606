#include "hfc/gaussian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>

#include "hfc/error.hpp"

namespace hfc {

namespace {

constexpr double kRegularization = 1e-12;
constexpr double kSingularRcond = 1e-14;
constexpr int kParallelThreshold = 128;

// ln(2 cosh x) without overflow.
double ln_2cosh(double x) {
  const double ax = std::abs(x);
  return ax + std::log1p(std::exp(-2.0 * ax));
}

template <bool Parallel>
double pair_update_impl(Covariance& g, int a, int b, double t) {
  const int n = static_cast<int>(g.rows());
  if (a < 0 || b < 0 || a >= n || b >= n || a == b) {
    throw Error(ErrorKind::DimensionMismatch, "pair update index out of range");
  }
  const double gab = g(a, b);
  // 1 + 2tg + t^2 as a sum of non-negative terms: stays positive when a
  // near-projective outcome contradicts a near-pure pair.
  const double d = std::max((1.0 + t * gab) * (1.0 + t * gab) + t * t * std::max(0.0, 1.0 - gab * gab),
                            std::numeric_limits<double>::min());
  const Vec ra = g.row(a).transpose();
  const Vec rb = g.row(b).transpose();
  const double c = 2.0 * t / d;
  // Outside the (a,b) rows and columns the update is rank two.
#pragma omp parallel for schedule(static) if (Parallel && n >= kParallelThreshold)
  for (int j = 0; j < n; ++j) {
    if (j == a || j == b) continue;
    const double raj = ra[j];
    const double rbj = rb[j];
    double* col = g.col(j).data();
    for (int i = 0; i < n; ++i) col[i] -= c * (ra[i] * rbj - rb[i] * raj);
  }
  const double shrink = (1.0 - t * t) / d;
  for (int j = 0; j < n; ++j) {
    if (j == a || j == b) continue;
    g(a, j) = ra[j] * shrink;
    g(j, a) = -g(a, j);
    g(b, j) = rb[j] * shrink;
    g(j, b) = -g(b, j);
  }
  g(a, b) = (gab * (1.0 + t * t) + 2.0 * t) / d;
  g(b, a) = -g(a, b);
  g(a, a) = 0.0;
  g(b, b) = 0.0;
  return std::log(d);
}

template <bool Parallel>
void apply_layer_impl(GaussianState& state, const LayerKernel& kernel) {
  const int n = state.size();
  const double th = std::tanh(0.5 * kernel.tau);
  const double lc = 2.0 * std::log(std::cosh(0.5 * kernel.tau));
  for (const auto& node : kernel.nodes) {
    if (node.a >= n || node.b >= n) throw Error(ErrorKind::DimensionMismatch, "layer node outside state");
    state.log_weight += lc + pair_update_impl<Parallel>(state.cov, node.a, node.b, node.eta * th);
  }
}

}  // namespace

GaussianState GaussianState::maximally_mixed(int n) {
  if (n <= 0 || n % 2 != 0) throw Error(ErrorKind::InvalidArgument, "Majorana count must be even and positive");
  GaussianState s;
  s.cov = Mat::Zero(n, n);
  s.log_weight = 0.5 * n * std::log(2.0);
  return s;
}

namespace {

// LU of m, regularized when numerically singular.
template <class M>
Eigen::PartialPivLU<M> guarded_lu(M m, bool* flagged) {
  Eigen::PartialPivLU<M> lu(m);
  if (!(lu.rcond() > kSingularRcond)) {
    m.diagonal().array() += kRegularization;
    lu.compute(m);
    if (!(lu.rcond() > kSingularRcond * 1e-2)) {
      throw Error(ErrorKind::SingularComposition, "1 - xy is singular beyond regularization");
    }
    if (flagged) *flagged = true;
  }
  return lu;
}

template <class M>
void check_pair(const M& x, const M& y) {
  if (x.rows() != x.cols() || y.rows() != y.cols()) throw Error(ErrorKind::DimensionMismatch, "compose needs square");
  if (x.rows() != y.rows()) throw Error(ErrorKind::DimensionMismatch, "compose size mismatch");
}

template <class M>
auto log_det(const Eigen::PartialPivLU<M>& lu) {
  using S = typename M::Scalar;
  S s = 0;
  for (int i = 0; i < lu.matrixLU().rows(); ++i) s += std::log(S(lu.matrixLU()(i, i)));
  return s;
}

}  // namespace

CMat compose(const CMat& x, const CMat& y, bool* flagged) {
  check_pair(x, y);
  const int n = static_cast<int>(x.rows());
  const CMat id = CMat::Identity(n, n);
  // With Gam = -iG the Hermitian-form product rule reads
  // Gam_xy = 1 - (1 - Gam_x)(1 + Gam_y Gam_x)^-1 (1 - Gam_y); expanded for G.
  const CMat minv = guarded_lu<CMat>(id - y * x, flagged).inverse();
  return x * minv + minv * y + std::complex<double>(0.0, 1.0) * (id - minv + x * minv * y);
}

CMat compose(const Covariance& x, const Covariance& y, bool* flagged) {
  return compose(CMat(x.cast<std::complex<double>>()), CMat(y.cast<std::complex<double>>()), flagged);
}

Covariance compose_real_part(const Covariance& x, const Covariance& y, bool* flagged) {
  check_pair(x, y);
  const int n = static_cast<int>(x.rows());
  const Mat minv = guarded_lu<Mat>(Mat::Identity(n, n) - x * y, flagged).inverse();
  return y * minv + minv * x;
}

Covariance sandwich(const Covariance& k, const Covariance& x, bool* flagged) {
  const CMat kc = k.cast<std::complex<double>>();
  const CMat z = compose(compose(kc, CMat(x.cast<std::complex<double>>()), flagged), kc, flagged);
  const Mat re = z.real();
  return 0.5 * (re - re.transpose());
}

double log_trace_overlap(const Covariance& x, const Covariance& y) {
  check_pair(x, y);
  const int n = static_cast<int>(x.rows());
  const Eigen::PartialPivLU<Mat> lu(Mat::Identity(n, n) - x * y);
  double s = 0.0;
  int sign = lu.permutationP().determinant();
  for (int i = 0; i < n; ++i) {
    const double d = lu.matrixLU()(i, i);
    if (d < 0) sign = -sign;
    s += std::log(std::abs(d));
  }
  if (sign < 0) return -std::numeric_limits<double>::infinity();
  return 0.5 * s;
}

std::complex<double> log_trace_overlap(const CMat& x, const CMat& y) {
  check_pair(x, y);
  const int n = static_cast<int>(x.rows());
  const Eigen::PartialPivLU<CMat> lu(CMat::Identity(n, n) - x * y);
  std::complex<double> s = log_det(lu);
  if (lu.permutationP().determinant() < 0) s += std::complex<double>(0.0, std::numbers::pi);
  return 0.5 * s;
}

double pair_update(Covariance& g, int a, int b, double t) { return pair_update_impl<true>(g, a, b, t); }
double pair_update_serial(Covariance& g, int a, int b, double t) { return pair_update_impl<false>(g, a, b, t); }

void apply_layer(GaussianState& state, const LayerKernel& kernel) { apply_layer_impl<true>(state, kernel); }
void apply_layer_serial(GaussianState& state, const LayerKernel& kernel) { apply_layer_impl<false>(state, kernel); }

Covariance layer_covariance(const LayerKernel& kernel, int n) {
  Covariance g = Mat::Zero(n, n);
  const double th = std::tanh(0.5 * kernel.tau);
  for (const auto& node : kernel.nodes) {
    g(node.a, node.b) = node.eta * th;
    g(node.b, node.a) = -node.eta * th;
  }
  return g;
}

double layer_log_trace(const LayerKernel& kernel, int n) {
  return 0.5 * n * std::log(2.0) + kernel.nodes.size() * std::log(std::cosh(0.5 * kernel.tau));
}

double slot_log_norm(double tau) { return ln_2cosh(tau); }

void apply_layer_by_composition(GaussianState& state, const LayerKernel& kernel) {
  const int n = state.size();
  const double half_ln2 = 0.5 * n * std::log(2.0);
  const CMat gl = layer_covariance(kernel, n).cast<std::complex<double>>();
  const double lk = layer_log_trace(kernel, n);
  bool flag = false;
  const CMat gx = state.cov.cast<std::complex<double>>();
  // K X, then (K X) K; both traces are real and positive.
  const CMat kx = compose(gl, gx, &flag);
  const std::complex<double> lw = lk + state.log_weight - half_ln2 + log_trace_overlap(gl, gx) + lk - half_ln2 +
                                  log_trace_overlap(kx, gl);
  const Mat z = compose(kx, gl, &flag).real();
  state.cov = 0.5 * (z - z.transpose());
  state.log_weight = lw.real();
  state.flagged = state.flagged || flag;
}

// ---------------------------------------------------------------------------

Vec jacobi_singular_values(const Mat& dv) {
  Mat a = dv.transpose();  // column-graded: relative accuracy for each column norm
  const int n = static_cast<int>(a.cols());
  const double tol = 4.0 * n * std::numeric_limits<double>::epsilon();
  Vec norms(n);
  for (int i = 0; i < n; ++i) norms[i] = a.col(i).stableNorm();
  for (int sweep = 0; sweep < 80; ++sweep) {
    bool rotated = false;
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double np = norms[p];
        const double nq = norms[q];
        if (np == 0.0 || nq == 0.0) continue;
        // Work with the cosine between columns so tiny norms never underflow.
        const double cosine = (a.col(p) / np).dot(a.col(q) / nq);
        if (std::abs(cosine) <= tol) continue;
        rotated = true;
        const double ratio = nq / np;
        const double zeta = (ratio - 1.0 / ratio) / (2.0 * cosine);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::hypot(1.0, zeta));
        const double c = 1.0 / std::hypot(1.0, t);
        const double s = c * t;
        for (int i = 0; i < a.rows(); ++i) {
          const double ap = a(i, p);
          const double aq = a(i, q);
          a(i, p) = c * ap - s * aq;
          a(i, q) = s * ap + c * aq;
        }
        norms[p] = a.col(p).stableNorm();
        norms[q] = a.col(q).stableNorm();
      }
    }
    if (!rotated) {
      std::sort(norms.data(), norms.data() + n, std::greater<>());
      return norms;
    }
  }
  throw Error(ErrorKind::NonConvergent, "one-sided Jacobi did not converge");
}

Spectrum spectrum(const std::vector<LayerKernel>& kernels, int n_majorana) {
  const int n = n_majorana;
  if (n <= 0 || n % 2 != 0) throw Error(ErrorKind::InvalidArgument, "Majorana count must be even and positive");
  Spectrum out;
  out.n_majorana = n;
  out.beta = static_cast<double>(kernels.size());
  if (kernels.empty()) throw Error(ErrorKind::InvalidArgument, "spectrum needs at least one layer");

  // Real basis (A sites unchanged, B sites times i): each node is the real
  // symmetric boost [[cosh tau, -eta sinh tau], [-eta sinh tau, cosh tau]].
  // Every layer is rescaled by exp(-tau) and the product kept as U diag(D) V.
  Mat u = Mat::Identity(n, n);
  Vec d = Vec::Ones(n);
  Mat v = Mat::Identity(n, n);
  double log_scale = 0.0;
  std::vector<char> covered(n);
  for (const auto& k : kernels) {
    const double e2 = std::exp(-2.0 * k.tau);
    const double c = 0.5 * (1.0 + e2);
    const double s = 0.5 * (1.0 - e2);
    const double idle = std::exp(-k.tau);
    out.ln_b += k.nodes.size() * ln_2cosh(k.tau);
    log_scale += k.tau;
    std::fill(covered.begin(), covered.end(), 0);
    Mat m = u * d.asDiagonal();
    for (const auto& node : k.nodes) {
      covered[node.a] = covered[node.b] = 1;
      const Eigen::RowVectorXd ra = m.row(node.a);
      const Eigen::RowVectorXd rb = m.row(node.b);
      m.row(node.a) = c * ra - node.eta * s * rb;
      m.row(node.b) = -node.eta * s * ra + c * rb;
    }
    for (int i = 0; i < n; ++i) {
      if (!covered[i]) m.row(i) *= idle;
    }
    Eigen::ColPivHouseholderQR<Mat> qr(m);
    const Mat r = qr.matrixR().triangularView<Eigen::Upper>();
    u = qr.householderQ();
    for (int i = 0; i < n; ++i) d[i] = std::max(std::abs(r(i, i)), std::numeric_limits<double>::min());
    Mat rp = r * qr.colsPermutation().transpose();
    v = d.cwiseInverse().asDiagonal() * rp * v;
  }
  const Vec sv = jacobi_singular_values(d.asDiagonal() * v);
  out.kappa.resize(n);
  for (int i = 0; i < n; ++i) out.kappa[i] = 2.0 * std::log(sv[i]) + 2.0 * log_scale;
  out.eps.resize(n / 2);
  for (int i = 0; i < n / 2; ++i) {
    out.eps[i] = -std::max(0.0, out.kappa[i]) / out.beta;
  }
  std::sort(out.eps.begin(), out.eps.end());
  return out;
}

double log_partition(const Spectrum& spec) {
  double s = 0.0;
  for (double e : spec.eps) s += ln_2cosh(0.5 * spec.beta * e);
  return s;
}

ThermalQuantities thermal_quantities(const Spectrum& spec) {
  ThermalQuantities q;
  const double beta = spec.beta;
  double lnz = 0.0;
  double gap = std::numeric_limits<double>::infinity();
  for (double e : spec.eps) {
    const double x = 0.5 * beta * e;
    const double th = std::tanh(x);
    lnz += ln_2cosh(x);
    q.E += -0.5 * e * th;
    q.varE += 0.25 * e * e * (1.0 - th * th);
    q.E0 += 0.5 * e;
    gap = std::min(gap, std::abs(e));
  }
  q.F = -lnz / beta;
  q.S_c = std::max(0.0, beta * (q.E - q.F));
  q.lambda0 = -q.E0 - spec.ln_b / beta;
  q.gap = spec.eps.empty() ? 0.0 : gap;
  return q;
}

// ---------------------------------------------------------------------------

CMat hermitian_form(const Covariance& g) { return std::complex<double>(0.0, -1.0) * g.cast<std::complex<double>>(); }

double negativity(const Covariance& g, const std::vector<char>& in_a) {
  const int n = static_cast<int>(g.rows());
  if (static_cast<int>(in_a.size()) != n) throw Error(ErrorKind::DimensionMismatch, "cut does not match covariance");
  using C = std::complex<double>;
  const CMat gamma = hermitian_form(g);
  CMat plus(n, n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      if (in_a[i] && in_a[j]) {
        plus(i, j) = -gamma(i, j);
      } else if (!in_a[i] && !in_a[j]) {
        plus(i, j) = gamma(i, j);
      } else {
        plus(i, j) = C(0.0, 1.0) * gamma(i, j);
      }
    }
  }
  const CMat minus = plus.adjoint();
  const CMat id = CMat::Identity(n, n);
  Eigen::PartialPivLU<CMat> lu(id + plus * minus);
  if (!(lu.rcond() > kSingularRcond)) throw Error(ErrorKind::SingularComposition, "1 + Gamma+ Gamma- is singular");
  CMat star = id - (id - minus) * lu.solve(id - plus);
  star = 0.5 * (star + star.adjoint()).eval();
  const Vec xi = Eigen::SelfAdjointEigenSolver<CMat>(star, Eigen::EigenvaluesOnly).eigenvalues();
  const Vec zeta = Eigen::SelfAdjointEigenSolver<CMat>(gamma, Eigen::EigenvaluesOnly).eigenvalues();
  // Each sum runs over all N eigenvalues, which come in pairs; halve it.
  double e = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = std::clamp(xi[i], -1.0, 1.0);
    e += 0.5 * std::log(std::sqrt(0.5 * (1.0 + x)) + std::sqrt(0.5 * (1.0 - x)));
    e += 0.25 * std::log(0.5 * (1.0 + zeta[i] * zeta[i]));
  }
  return e;
}

std::vector<ProfileBin> correlation_profile(const Covariance& g, const Lattice& lattice) {
  const int n = static_cast<int>(g.rows());
  if (n != lattice.num_sites()) throw Error(ErrorKind::DimensionMismatch, "profile size mismatch");
  std::map<long long, ProfileBin> bins;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double dist = lattice.distance(i, j);
      auto& bin = bins[std::llround(dist * 1e6)];
      bin.distance = dist;
      bin.mean_abs += std::abs(g(i, j));
      ++bin.pairs;
    }
  }
  std::vector<ProfileBin> out;
  for (auto& [key, bin] : bins) {
    bin.mean_abs /= bin.pairs;
    out.push_back(bin);
  }
  return out;
}

double antisymmetry_error(const Covariance& g) { return (g + g.transpose()).cwiseAbs().maxCoeff(); }

}  // namespace hfc
