#include "lstmlrp/stats.hpp"

#include <cmath>
#include <string>

#include "lstmlrp/errors.hpp"

namespace lstmlrp {

void PearsonAccumulator::add(double x, double y) {
  ++n_;
  const double n = static_cast<double>(n_);
  const double dx = x - mean_x_;
  const double dy = y - mean_y_;
  mean_x_ += dx / n;
  mean_y_ += dy / n;
  m_xx_ += dx * (x - mean_x_);
  m_yy_ += dy * (y - mean_y_);
  m_xy_ += dx * (y - mean_y_);
}

std::optional<double> PearsonAccumulator::value() const {
  if (n_ < 2 || m_xx_ <= 0.0 || m_yy_ <= 0.0) return std::nullopt;
  double r = m_xy_ / std::sqrt(m_xx_ * m_yy_);
  if (r > 1.0) r = 1.0;
  if (r < -1.0) r = -1.0;
  return r;
}

std::optional<double> pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) {
    throw ShapeError("pearson: " + std::to_string(xs.size()) + " xs vs " +
                     std::to_string(ys.size()) + " ys");
  }
  if (xs.size() < 2) throw ShapeError("pearson needs at least two samples");
  PearsonAccumulator acc;
  for (std::size_t k = 0; k < xs.size(); ++k) acc.add(xs[k], ys[k]);
  return acc.value();
}

MeanStd mean_std(std::span<const double> values) {
  MeanStd out;
  out.count = values.size();
  if (values.empty()) return out;
  double sum = 0.0;
  for (double v : values) sum += v;
  out.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double sq = 0.0;
    for (double v : values) sq += (v - out.mean) * (v - out.mean);
    out.std = std::sqrt(sq / static_cast<double>(values.size() - 1));
  }
  return out;
}

}  // namespace lstmlrp
