#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lstmlrp/numeric.hpp"

namespace lstmlrp {

enum class Architecture { standard, nondecreasing, markov, gateless };

std::string_view to_string(Architecture a);
Architecture architecture_from_string(std::string_view name);

/// Which connections and gates an architecture uses.
struct Connectivity {
  bool w_i = true;
  bool w_o = true;
  bool u_z = true;
  bool input_gate = true;
  bool forget_gate = true;
  bool output_gate = true;
};

/// One of the four cell architectures plus its cell-input (g) and
/// cell-state (h) activations.
///
/// standard:      g = tanh, h = tanh, sigmoid gates, every connection.
/// nondecreasing: forget gate fixed at 1, g = a_g·sigmoid, h = a_h·tanh,
///                U_z = W_i = W_o = 0 (gates see only recurrent input).
/// markov:        nondecreasing without an output gate.
/// gateless:      cell input feeding a pure accumulator, y = a_h·tanh(c).
struct VariantSpec {
  Architecture architecture = Architecture::standard;
  Activation cell_input = Activation::tanh();
  Activation cell_state = Activation::tanh();

  static VariantSpec standard();
  static VariantSpec nondecreasing(double a_g = 2.0, double a_h = 1.0);
  static VariantSpec markov(double a_g = 2.0, double a_h = 1.0);
  static VariantSpec gateless(double a_g = 2.0, double a_h = 1.0);
  /// Factory by architecture; gains are ignored for `standard`.
  static VariantSpec make(Architecture a, double a_g = 2.0, double a_h = 1.0);

  Connectivity connectivity() const;
  /// Throws ConfigError when activations or gains do not fit the architecture.
  void validate() const;

  friend bool operator==(const VariantSpec&, const VariantSpec&) = default;
};

enum class ParamId : std::uint8_t {
  w_z, w_i, w_f, w_o,
  u_z, u_i, u_f, u_o,
  b_z, b_i, b_f, b_o,
  head_w, head_b,
};
inline constexpr std::size_t kParamSlots = 14;
inline constexpr std::array<ParamId, kParamSlots> kAllParams = {
    ParamId::w_z, ParamId::w_i, ParamId::w_f, ParamId::w_o,
    ParamId::u_z, ParamId::u_i, ParamId::u_f, ParamId::u_o,
    ParamId::b_z, ParamId::b_i, ParamId::b_f, ParamId::b_o,
    ParamId::head_w, ParamId::head_b};

std::string_view param_name(ParamId id);

/// Weights of a single-layer LSTM followed by a linear head.
/// All slots are allocated at full shape; slots the variant does not use
/// stay zero and are never read by the forward pass.
struct LSTMParams {
  Mat w_z, w_i, w_f, w_o;  // hidden × input
  Mat u_z, u_i, u_f, u_o;  // hidden × hidden
  Vec b_z, b_i, b_f, b_o;  // hidden
  Mat head_w;              // output × hidden
  std::optional<Vec> head_b;

  static LSTMParams zeros(std::size_t input_dim, std::size_t hidden, std::size_t output_dim,
                          bool head_bias);

  std::size_t input_dim() const { return w_z.cols(); }
  std::size_t hidden_size() const { return w_z.rows(); }
  std::size_t output_dim() const { return head_w.rows(); }

  /// Flat view of one parameter slot. head_b is empty when absent.
  std::span<double> slot(ParamId id);
  std::span<const double> slot(ParamId id) const;

  /// Throws ShapeError when any shape invariant is broken.
  void validate() const;

  friend bool operator==(const LSTMParams&, const LSTMParams&) = default;
};

bool is_active(const VariantSpec& variant, const LSTMParams& params, ParamId id);
std::vector<ParamId> active_params(const VariantSpec& variant, const LSTMParams& params);
/// Number of trainable scalars. 17 for the one-cell, two-input standard model without head bias.
std::size_t parameter_count(const VariantSpec& variant, const LSTMParams& params);

/// Uniform initialisation in [-scale, scale]. For the LRP-oriented variants the
/// cell-input and input-gate biases start at -3 and -2.
LSTMParams initialize_params(const VariantSpec& variant, std::size_t input_dim,
                             std::size_t hidden, std::size_t output_dim, bool head_bias,
                             std::mt19937_64& rng, double scale = 0.5);

/// Non-empty sequence of equally sized input vectors, stored T × D.
class Sequence {
 public:
  explicit Sequence(Mat rows);
  explicit Sequence(const std::vector<Vec>& rows);

  std::size_t length() const { return data_.rows(); }
  std::size_t dim() const { return data_.cols(); }
  std::span<const double> row(std::size_t t) const { return data_.row(t); }
  std::span<double> row(std::size_t t) { return data_.row(t); }
  const Mat& matrix() const { return data_; }

  friend bool operator==(const Sequence&, const Sequence&) = default;

 private:
  Mat data_;
};

/// Activations of one timestep. Absent gates report activation 1 and
/// pre-activation 0.
struct StepActivations {
  Vec pre_z, pre_i, pre_f, pre_o;
  Vec z, i, f, c, o, y;
};

/// Everything an explainer needs from a forward pass. Each matrix is T × H,
/// row t holding timestep t (0-based).
struct ActivationTrace {
  /// Allocates zeroed T × H storage for `input`.
  ActivationTrace(Sequence input, std::size_t hidden);

  Sequence input;
  Mat pre_z, pre_i, pre_f, pre_o;
  Mat z, i, f, c, o, y;
  Vec prediction;

  std::size_t length() const { return input.length(); }
  std::size_t hidden_size() const { return c.cols(); }
  /// c_{t-1} and y_{t-1}, with zero initial state for t = 0.
  std::span<const double> c_prev(std::size_t t) const;
  std::span<const double> y_prev(std::size_t t) const;

  friend bool operator==(const ActivationTrace&, const ActivationTrace&) = default;

 private:
  Vec zero_state_;
};

StepActivations forward_step(const LSTMParams& params, const VariantSpec& variant,
                             std::span<const double> x, std::span<const double> y_prev,
                             std::span<const double> c_prev);

/// Runs the recurrence from y_0 = c_0 = 0. Throws NumericError naming the
/// first timestep that produced a non-finite activation.
ActivationTrace forward_sequence(const LSTMParams& params, const VariantSpec& variant,
                                 const Sequence& seq);

Vec predict(const LSTMParams& params, const VariantSpec& variant, const Sequence& seq);

// Model documents. See docs in README for the field layout.
inline constexpr int kModelFormatVersion = 1;

struct Model {
  LSTMParams params;
  VariantSpec variant;
};

std::string serialize_model(const LSTMParams& params, const VariantSpec& variant);
/// Throws VersionMismatch, MissingField, DimensionError or ParseError.
Model deserialize_model(std::string_view document);

void save_model(const std::string& path, const LSTMParams& params, const VariantSpec& variant);
Model load_model(const std::string& path);

}  // namespace lstmlrp
