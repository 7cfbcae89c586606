#include "hfc/binning.hpp"

#include <algorithm>
#include <cmath>

#include "hfc/error.hpp"

namespace hfc {

namespace {

constexpr std::int64_t kMinBins = 32;
constexpr int kPlateauLevels = 3;

void welford(Binning::Level& lv, double x) {
  ++lv.bins;
  const double d = x - lv.mean;
  lv.mean += d / static_cast<double>(lv.bins);
  lv.m2 += d * (x - lv.mean);
}

}  // namespace

void Binning::push(std::size_t level, double x) {
  if (levels_.size() <= level) levels_.resize(level + 1);
  Level& lv = levels_[level];
  welford(lv, x);
  if (lv.has_pending) {
    const double pair = 0.5 * (lv.pending + x);
    lv.has_pending = false;
    push(level + 1, pair);
  } else {
    lv.pending = x;
    lv.has_pending = true;
  }
}

void Binning::add(double x) { push(0, x); }

void Binning::merge(const Binning& other) {
  if (other.levels_.size() > levels_.size()) levels_.resize(other.levels_.size());
  for (std::size_t k = 0; k < other.levels_.size(); ++k) {
    Level& a = levels_[k];
    const Level& b = other.levels_[k];
    if (b.bins == 0) continue;
    const double na = static_cast<double>(a.bins);
    const double nb = static_cast<double>(b.bins);
    const double d = b.mean - a.mean;
    a.mean += d * nb / (na + nb);
    a.m2 += b.m2 + d * d * na * nb / (na + nb);
    a.bins += b.bins;
  }
}

double Binning::level_error(int level) const {
  const Level& lv = levels_.at(level);
  if (lv.bins < 2) return 0.0;
  const double n = static_cast<double>(lv.bins);
  return std::sqrt(std::max(0.0, lv.m2 / (n - 1.0)) / n);
}

BinnedStats Binning::result() const {
  if (count() < 8) throw Error(ErrorKind::SeriesTooShort, "binning needs at least 8 samples");
  BinnedStats out;
  out.n = count();
  out.mean = mean();
  // plateau: average over the last few levels that still hold kMinBins bins
  int top = 0;
  for (int k = 0; k < num_levels(); ++k)
    if (levels_[k].bins >= kMinBins) top = k;
  const int bottom = std::max(0, top - kPlateauLevels + 1);
  double se = 0.0;
  for (int k = bottom; k <= top; ++k) se += level_error(k);
  se /= (top - bottom + 1);
  out.stderr_ = se;
  const double se0 = level_error(0);
  out.tau_int = se0 > 0.0 ? 0.5 * (se / se0) * (se / se0) : 0.5;
  return out;
}

Binning Binning::from_levels(std::vector<Level> levels) {
  Binning b;
  b.levels_ = std::move(levels);
  return b;
}

BinnedStats binned(const std::vector<double>& series) {
  Binning b;
  for (double x : series) b.add(x);
  return b.result();
}

}  // namespace hfc
