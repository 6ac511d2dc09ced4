#pragma once

#include <cstddef>
#include <optional>
#include <span>

namespace lstmlrp {

/// Streaming sample correlation (Welford co-moments).
class PearsonAccumulator {
 public:
  void add(double x, double y);
  std::size_t count() const { return n_; }
  /// Empty when fewer than two samples or either variance is zero.
  std::optional<double> value() const;

 private:
  std::size_t n_ = 0;
  double mean_x_ = 0.0;
  double mean_y_ = 0.0;
  double m_xx_ = 0.0;
  double m_yy_ = 0.0;
  double m_xy_ = 0.0;
};

/// Sample Pearson correlation; empty when undefined. Throws ShapeError on
/// unequal lengths or fewer than two samples.
std::optional<double> pearson(std::span<const double> xs, std::span<const double> ys);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation, 0 for a single value
  std::size_t count = 0;
};

MeanStd mean_std(std::span<const double> values);

}  // namespace lstmlrp
