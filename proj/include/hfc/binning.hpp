#pragma once

#include <cstdint>
#include <vector>

namespace hfc {

struct BinnedStats {
  double mean = 0.0;
  double stderr_ = 0.0;
  double tau_int = 0.5;
  std::int64_t n = 0;
};

/// Logarithmic binning of a correlated series. Level k holds bins of 2^k
/// consecutive samples; accumulators of independent chains merge.
class Binning {
 public:
  struct Level {
    std::int64_t bins = 0;
    double mean = 0.0;  // running mean of the bin averages
    double m2 = 0.0;    // sum of squared deviations (Welford)
    double pending = 0.0;
    bool has_pending = false;
  };

  void add(double x);
  /// Pool the completed bins of an independent series. Partial bins of
  /// `other` are dropped above level 0.
  void merge(const Binning& other);

  std::int64_t count() const { return levels_.empty() ? 0 : levels_[0].bins; }
  double mean() const { return levels_.empty() ? 0.0 : levels_[0].mean; }
  /// Standard error estimated from bins of 2^level samples.
  double level_error(int level) const;
  int num_levels() const { return static_cast<int>(levels_.size()); }

  /// Throws SeriesTooShort below 8 samples.
  BinnedStats result() const;

  const std::vector<Level>& levels() const { return levels_; }
  static Binning from_levels(std::vector<Level> levels);

 private:
  void push(std::size_t level, double x);
  std::vector<Level> levels_;
};

/// One-shot binning of a stored series.
BinnedStats binned(const std::vector<double>& series);

}  // namespace hfc
