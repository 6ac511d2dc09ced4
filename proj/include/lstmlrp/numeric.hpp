#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace lstmlrp {

/// Dense vector of doubles. Length is fixed by the caller's construction.
using Vec = std::vector<double>;

/// Dense row-major matrix of doubles.
class Mat {
 public:
  Mat() = default;
  Mat(std::size_t rows, std::size_t cols, double fill = 0.0);
  Mat(std::size_t rows, std::size_t cols, std::vector<double> row_major);

  static Mat identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> flat() { return data_; }
  std::span<const double> flat() const { return data_; }
  const std::vector<double>& values() const { return data_; }

  friend bool operator==(const Mat&, const Mat&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// m · v. Throws ShapeError when v.size() != m.cols().
Vec matvec(const Mat& m, std::span<const double> v);

/// out += m · v, no allocation. Shapes are the caller's responsibility.
void matvec_add(const Mat& m, std::span<const double> v, std::span<double> out);

/// out += mᵀ · v, no allocation.
void matvec_transposed_add(const Mat& m, std::span<const double> v, std::span<double> out);

/// m += a ⊗ b (outer product).
void outer_add(std::span<const double> a, std::span<const double> b, Mat& m);

bool all_finite(std::span<const double> v);

/// Elementwise nonlinearity with a positive output gain.
struct Activation {
  enum class Kind { sigmoid, tanh, relu, identity };

  Kind kind = Kind::identity;
  double gain = 1.0;

  Activation() = default;
  /// Throws ConfigError when gain is not strictly positive.
  Activation(Kind kind, double gain = 1.0);

  static Activation sigmoid(double gain = 1.0) { return {Kind::sigmoid, gain}; }
  static Activation tanh(double gain = 1.0) { return {Kind::tanh, gain}; }
  static Activation relu(double gain = 1.0) { return {Kind::relu, gain}; }
  static Activation identity(double gain = 1.0) { return {Kind::identity, gain}; }

  double apply(double x) const;
  // relu' at exactly 0 is 0.
  double derivative(double x) const;

  friend bool operator==(const Activation&, const Activation&) = default;
};

std::string_view to_string(Activation::Kind kind);
/// Throws ConfigError on unknown names.
Activation::Kind activation_kind_from_string(std::string_view name);

Vec apply_activation(const Activation& a, std::span<const double> v);
Vec activation_derivative(const Activation& a, std::span<const double> v);

double sigmoid(double x);

}  // namespace lstmlrp
