#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lstmlrp/dataset.hpp"
#include "lstmlrp/errors.hpp"
#include "lstmlrp/lstm.hpp"

namespace lstmlrp {

enum class LossKind { mse, softmax_cross_entropy };

/// Mean of squared componentwise differences.
double mse_loss(std::span<const double> pred, std::span<const double> target);
/// -log softmax(scores)[label].
double cross_entropy_loss(std::span<const double> scores, int label);

/// Loss of one example under `kind`; classification examples must carry a label.
double example_loss(std::span<const double> pred, const Example& ex, LossKind kind);

/// One gradient per trainable slot. Slots the variant does not train are absent.
class GradientSet {
 public:
  GradientSet() = default;
  static GradientSet zeros_like(const VariantSpec& variant, const LSTMParams& params);

  bool has(ParamId id) const { return slots_[index(id)].has_value(); }
  std::span<double> at(ParamId id);
  std::span<const double> at(ParamId id) const;
  std::vector<ParamId> present() const;

  /// Throws NumericError naming the first parameter with a non-finite entry.
  void check_finite() const;

 private:
  static std::size_t index(ParamId id) { return static_cast<std::size_t>(id); }
  std::array<std::optional<std::vector<double>>, kParamSlots> slots_;
};

/// Accumulates gradients of `d_pred · prediction` for one sequence into
/// `grads` (shaped like the model) and, when non-null, input gradients into
/// `input_grad` (T × D).
void backprop_sequence(const LSTMParams& params, const VariantSpec& variant,
                       const ActivationTrace& trace, std::span<const double> d_pred,
                       LSTMParams* grads, Mat* input_grad);

/// Gradient of the model output `d_pred · f(x)` w.r.t. every input entry.
Mat input_gradients(const LSTMParams& params, const VariantSpec& variant,
                    const ActivationTrace& trace, std::span<const double> d_pred);

double batch_loss(const LSTMParams& params, const VariantSpec& variant,
                  std::span<const Example> batch, LossKind kind = LossKind::mse);

/// Exact gradient of the mean batch loss. Throws NumericError on NaN.
GradientSet bptt_gradients(const LSTMParams& params, const VariantSpec& variant,
                           std::span<const Example> batch, LossKind kind = LossKind::mse);

/// Central-difference estimate of the same gradient.
GradientSet finite_diff_gradients(const LSTMParams& params, const VariantSpec& variant,
                                  std::span<const Example> batch, double step,
                                  LossKind kind = LossKind::mse);

enum class Optimizer { sgd, adam };

struct TrainConfig {
  double learning_rate = 5e-3;
  Optimizer optimizer = Optimizer::adam;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::size_t batch_size = 64;
  std::size_t max_epochs = 100;
  /// Success iff the best validation loss ends below this value.
  double success_threshold = 1e-4;
  /// Stop as soon as validation loss drops below this value (defaults to success_threshold).
  std::optional<double> stop_threshold;
  /// Stop after this many epochs without improvement; 0 disables.
  std::size_t patience = 0;
  /// Give up after this epoch when validation loss is still above `checkpoint_loss`; 0 disables.
  std::size_t checkpoint_epoch = 0;
  double checkpoint_loss = 0.0;
  LossKind loss = LossKind::mse;
  std::uint64_t seed = 0;

  /// Throws ConfigError.
  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double best_val_loss = 0.0;
};

struct TrainResult {
  LSTMParams params;  // parameters at the best validation epoch
  std::vector<EpochRecord> history;
  double best_val_loss = 0.0;
  std::size_t best_epoch = 0;
  bool success = false;
};

/// Raised when the loss becomes non-finite. Carries the history so far.
class TrainingError : public Error {
 public:
  TrainingError(const std::string& what, std::vector<EpochRecord> history)
      : Error(what), history_(std::move(history)) {}
  const std::vector<EpochRecord>& history() const { return history_; }

 private:
  std::vector<EpochRecord> history_;
};

TrainResult train_model(LSTMParams init, const VariantSpec& variant, const Dataset& train,
                        const Dataset& val, const TrainConfig& cfg);

/// Classification accuracy (argmax of the scores vs. label) over a dataset.
double accuracy(const LSTMParams& params, const VariantSpec& variant, const Dataset& data);

/// "epoch,train_mse,val_mse" CSV.
std::string history_csv(const std::vector<EpochRecord>& history);

}  // namespace lstmlrp
