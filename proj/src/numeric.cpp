#include "lstmlrp/numeric.hpp"

#include <cmath>
#include <string>

#include "lstmlrp/errors.hpp"

namespace lstmlrp {

Mat::Mat(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Mat::Mat(std::size_t rows, std::size_t cols, std::vector<double> row_major)
    : rows_(rows), cols_(cols), data_(std::move(row_major)) {
  if (data_.size() != rows * cols) {
    throw ShapeError("matrix " + std::to_string(rows) + "x" + std::to_string(cols) +
                     " given " + std::to_string(data_.size()) + " elements");
  }
}

Mat Mat::identity(std::size_t n) {
  Mat m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Vec matvec(const Mat& m, std::span<const double> v) {
  if (v.size() != m.cols()) {
    throw ShapeError("matvec: matrix has " + std::to_string(m.cols()) +
                     " columns but vector has length " + std::to_string(v.size()));
  }
  Vec out(m.rows(), 0.0);
  matvec_add(m, v, out);
  return out;
}

void matvec_add(const Mat& m, std::span<const double> v, std::span<double> out) {
  const std::size_t cols = m.cols();
  const double* p = m.flat().data();
  for (std::size_t r = 0; r < m.rows(); ++r, p += cols) {
    double acc = 0.0;
    for (std::size_t c = 0; c < cols; ++c) acc += p[c] * v[c];
    out[r] += acc;
  }
}

void matvec_transposed_add(const Mat& m, std::span<const double> v, std::span<double> out) {
  const std::size_t cols = m.cols();
  const double* p = m.flat().data();
  for (std::size_t r = 0; r < m.rows(); ++r, p += cols) {
    const double s = v[r];
    if (s == 0.0) continue;
    for (std::size_t c = 0; c < cols; ++c) out[c] += p[c] * s;
  }
}

void outer_add(std::span<const double> a, std::span<const double> b, Mat& m) {
  for (std::size_t r = 0; r < a.size(); ++r) {
    const double s = a[r];
    if (s == 0.0) continue;
    auto row = m.row(r);
    for (std::size_t c = 0; c < b.size(); ++c) row[c] += s * b[c];
  }
}

bool all_finite(std::span<const double> v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Activation::Activation(Kind k, double g) : kind(k), gain(g) {
  if (!(g > 0.0) || !std::isfinite(g)) {
    throw ConfigError("activation gain must be positive, got " + std::to_string(g));
  }
}

double Activation::apply(double x) const {
  switch (kind) {
    case Kind::sigmoid: return gain * lstmlrp::sigmoid(x);
    case Kind::tanh: return gain * std::tanh(x);
    case Kind::relu: return x > 0.0 ? gain * x : 0.0;
    case Kind::identity: return gain * x;
  }
  return 0.0;
}

double Activation::derivative(double x) const {
  switch (kind) {
    case Kind::sigmoid: {
      const double s = lstmlrp::sigmoid(x);
      return gain * s * (1.0 - s);
    }
    case Kind::tanh: {
      const double t = std::tanh(x);
      return gain * (1.0 - t * t);
    }
    case Kind::relu: return x > 0.0 ? gain : 0.0;
    case Kind::identity: return gain;
  }
  return 0.0;
}

std::string_view to_string(Activation::Kind kind) {
  switch (kind) {
    case Activation::Kind::sigmoid: return "sigmoid";
    case Activation::Kind::tanh: return "tanh";
    case Activation::Kind::relu: return "relu";
    case Activation::Kind::identity: return "identity";
  }
  return "?";
}

Activation::Kind activation_kind_from_string(std::string_view name) {
  if (name == "sigmoid") return Activation::Kind::sigmoid;
  if (name == "tanh") return Activation::Kind::tanh;
  if (name == "relu") return Activation::Kind::relu;
  if (name == "identity") return Activation::Kind::identity;
  throw ConfigError("unknown activation '" + std::string(name) + "'");
}

Vec apply_activation(const Activation& a, std::span<const double> v) {
  Vec out(v.size());
  for (std::size_t j = 0; j < v.size(); ++j) out[j] = a.apply(v[j]);
  return out;
}

Vec activation_derivative(const Activation& a, std::span<const double> v) {
  Vec out(v.size());
  for (std::size_t j = 0; j < v.size(); ++j) out[j] = a.derivative(v[j]);
  return out;
}

}  // namespace lstmlrp
