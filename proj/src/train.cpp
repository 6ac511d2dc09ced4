#include "lstmlrp/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

namespace lstmlrp {

double mse_loss(std::span<const double> pred, std::span<const double> target) {
  if (pred.size() != target.size() || pred.empty()) {
    throw ShapeError("mse_loss: prediction length " + std::to_string(pred.size()) +
                     " vs target length " + std::to_string(target.size()));
  }
  double acc = 0.0;
  for (std::size_t k = 0; k < pred.size(); ++k) {
    const double d = pred[k] - target[k];
    acc += d * d;
  }
  return acc / static_cast<double>(pred.size());
}

double cross_entropy_loss(std::span<const double> scores, int label) {
  if (label < 0 || static_cast<std::size_t>(label) >= scores.size()) {
    throw ShapeError("cross_entropy_loss: label " + std::to_string(label) + " outside " +
                     std::to_string(scores.size()) + " classes");
  }
  const double m = *std::max_element(scores.begin(), scores.end());
  double z = 0.0;
  for (double s : scores) z += std::exp(s - m);
  return -(scores[static_cast<std::size_t>(label)] - m - std::log(z));
}

double example_loss(std::span<const double> pred, const Example& ex, LossKind kind) {
  if (kind == LossKind::mse) return mse_loss(pred, ex.target);
  if (!ex.label) throw ConfigError("cross-entropy loss needs labelled examples");
  return cross_entropy_loss(pred, *ex.label);
}

namespace {

// d loss / d prediction for one example, scaled by `scale`.
void loss_gradient(std::span<const double> pred, const Example& ex, LossKind kind, double scale,
                   Vec& out) {
  out.assign(pred.size(), 0.0);
  if (kind == LossKind::mse) {
    const double n = static_cast<double>(pred.size());
    for (std::size_t k = 0; k < pred.size(); ++k) {
      out[k] = scale * 2.0 * (pred[k] - ex.target[k]) / n;
    }
    return;
  }
  const double m = *std::max_element(pred.begin(), pred.end());
  double z = 0.0;
  for (std::size_t k = 0; k < pred.size(); ++k) {
    out[k] = std::exp(pred[k] - m);
    z += out[k];
  }
  for (std::size_t k = 0; k < pred.size(); ++k) {
    out[k] = scale * (out[k] / z - (static_cast<int>(k) == *ex.label ? 1.0 : 0.0));
  }
}

GradientSet extract(const VariantSpec& variant, const LSTMParams& dense) {
  GradientSet g = GradientSet::zeros_like(variant, dense);
  for (ParamId id : g.present()) {
    auto src = dense.slot(id);
    std::copy(src.begin(), src.end(), g.at(id).begin());
  }
  return g;
}

}  // namespace

GradientSet GradientSet::zeros_like(const VariantSpec& variant, const LSTMParams& params) {
  GradientSet g;
  for (ParamId id : active_params(variant, params)) {
    g.slots_[index(id)] = std::vector<double>(params.slot(id).size(), 0.0);
  }
  return g;
}

std::span<double> GradientSet::at(ParamId id) {
  auto& s = slots_[index(id)];
  if (!s) throw ConfigError("gradient for '" + std::string(param_name(id)) + "' is absent");
  return *s;
}

std::span<const double> GradientSet::at(ParamId id) const {
  return const_cast<GradientSet*>(this)->at(id);
}

std::vector<ParamId> GradientSet::present() const {
  std::vector<ParamId> out;
  for (ParamId id : kAllParams) {
    if (has(id)) out.push_back(id);
  }
  return out;
}

void GradientSet::check_finite() const {
  for (ParamId id : present()) {
    if (!all_finite(at(id))) {
      throw NumericError("non-finite gradient for parameter '" + std::string(param_name(id)) + "'");
    }
  }
}

void backprop_sequence(const LSTMParams& p, const VariantSpec& v, const ActivationTrace& tr,
                       std::span<const double> d_pred, LSTMParams* g, Mat* input_grad) {
  const Connectivity conn = v.connectivity();
  const std::size_t h = p.hidden_size();
  const std::size_t steps = tr.length();

  Vec dy(h, 0.0), dy_rec(h, 0.0), dc_carry(h, 0.0);
  Vec dpre_z(h), dpre_i(h), dpre_f(h), dpre_o(h);

  matvec_transposed_add(p.head_w, d_pred, dy);
  if (g) {
    outer_add(d_pred, tr.y.row(steps - 1), g->head_w);
    if (g->head_b) {
      for (std::size_t k = 0; k < d_pred.size(); ++k) (*g->head_b)[k] += d_pred[k];
    }
  }

  for (std::size_t t = steps; t-- > 0;) {
    auto z = tr.z.row(t), ig = tr.i.row(t), fg = tr.f.row(t), c = tr.c.row(t), og = tr.o.row(t);
    auto pre_z = tr.pre_z.row(t);
    auto c_prev = tr.c_prev(t);
    auto y_prev = tr.y_prev(t);
    auto x = tr.input.row(t);

    for (std::size_t j = 0; j < h; ++j) {
      const double hc = v.cell_state.apply(c[j]);
      dpre_o[j] = conn.output_gate ? dy[j] * hc * og[j] * (1.0 - og[j]) : 0.0;
      const double dc = dc_carry[j] + dy[j] * og[j] * v.cell_state.derivative(c[j]);
      dpre_f[j] = conn.forget_gate ? dc * c_prev[j] * fg[j] * (1.0 - fg[j]) : 0.0;
      dc_carry[j] = dc * fg[j];
      dpre_i[j] = conn.input_gate ? dc * z[j] * ig[j] * (1.0 - ig[j]) : 0.0;
      dpre_z[j] = dc * ig[j] * v.cell_input.derivative(pre_z[j]);
    }

    if (g) {
      outer_add(dpre_z, x, g->w_z);
      if (conn.u_z) outer_add(dpre_z, y_prev, g->u_z);
      for (std::size_t j = 0; j < h; ++j) g->b_z[j] += dpre_z[j];
      if (conn.input_gate) {
        if (conn.w_i) outer_add(dpre_i, x, g->w_i);
        outer_add(dpre_i, y_prev, g->u_i);
        for (std::size_t j = 0; j < h; ++j) g->b_i[j] += dpre_i[j];
      }
      if (conn.forget_gate) {
        outer_add(dpre_f, x, g->w_f);
        outer_add(dpre_f, y_prev, g->u_f);
        for (std::size_t j = 0; j < h; ++j) g->b_f[j] += dpre_f[j];
      }
      if (conn.output_gate) {
        if (conn.w_o) outer_add(dpre_o, x, g->w_o);
        outer_add(dpre_o, y_prev, g->u_o);
        for (std::size_t j = 0; j < h; ++j) g->b_o[j] += dpre_o[j];
      }
    }

    if (input_grad) {
      auto dx = input_grad->row(t);
      matvec_transposed_add(p.w_z, dpre_z, dx);
      if (conn.input_gate && conn.w_i) matvec_transposed_add(p.w_i, dpre_i, dx);
      if (conn.forget_gate) matvec_transposed_add(p.w_f, dpre_f, dx);
      if (conn.output_gate && conn.w_o) matvec_transposed_add(p.w_o, dpre_o, dx);
    }

    if (t == 0) break;
    std::fill(dy_rec.begin(), dy_rec.end(), 0.0);
    if (conn.u_z) matvec_transposed_add(p.u_z, dpre_z, dy_rec);
    if (conn.input_gate) matvec_transposed_add(p.u_i, dpre_i, dy_rec);
    if (conn.forget_gate) matvec_transposed_add(p.u_f, dpre_f, dy_rec);
    if (conn.output_gate) matvec_transposed_add(p.u_o, dpre_o, dy_rec);
    dy.swap(dy_rec);
  }
}

Mat input_gradients(const LSTMParams& params, const VariantSpec& variant,
                    const ActivationTrace& trace, std::span<const double> d_pred) {
  Mat out(trace.length(), trace.input.dim());
  backprop_sequence(params, variant, trace, d_pred, nullptr, &out);
  if (!all_finite(out.flat())) throw NumericError("non-finite input gradient");
  return out;
}

double batch_loss(const LSTMParams& params, const VariantSpec& variant,
                  std::span<const Example> batch, LossKind kind) {
  if (batch.empty()) throw ConfigError("batch must be non-empty");
  double acc = 0.0;
  for (const Example& ex : batch) {
    acc += example_loss(predict(params, variant, ex.input), ex, kind);
  }
  return acc / static_cast<double>(batch.size());
}

GradientSet bptt_gradients(const LSTMParams& params, const VariantSpec& variant,
                           std::span<const Example> batch, LossKind kind) {
  if (batch.empty()) throw ConfigError("batch must be non-empty");
  LSTMParams dense = LSTMParams::zeros(params.input_dim(), params.hidden_size(),
                                       params.output_dim(), params.head_b.has_value());
  const double scale = 1.0 / static_cast<double>(batch.size());
  Vec d_pred;
  for (const Example& ex : batch) {
    const ActivationTrace tr = forward_sequence(params, variant, ex.input);
    loss_gradient(tr.prediction, ex, kind, scale, d_pred);
    backprop_sequence(params, variant, tr, d_pred, &dense, nullptr);
  }
  GradientSet g = extract(variant, dense);
  g.check_finite();
  return g;
}

GradientSet finite_diff_gradients(const LSTMParams& params, const VariantSpec& variant,
                                  std::span<const Example> batch, double step, LossKind kind) {
  if (!(step > 0.0)) throw ConfigError("finite-difference step must be positive");
  GradientSet g = GradientSet::zeros_like(variant, params);
  LSTMParams probe = params;
  for (ParamId id : g.present()) {
    auto w = probe.slot(id);
    auto out = g.at(id);
    for (std::size_t k = 0; k < w.size(); ++k) {
      const double saved = w[k];
      w[k] = saved + step;
      const double up = batch_loss(probe, variant, batch, kind);
      w[k] = saved - step;
      const double down = batch_loss(probe, variant, batch, kind);
      w[k] = saved;
      out[k] = (up - down) / (2.0 * step);
    }
  }
  return g;
}

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning rate must be non-negative");
  }
  if (!(success_threshold > 0.0)) throw ConfigError("success threshold must be positive");
  if (stop_threshold && !(*stop_threshold > 0.0)) throw ConfigError("stop threshold must be positive");
  if (batch_size == 0) throw ConfigError("batch size must be positive");
  if (max_epochs == 0) throw ConfigError("max epochs must be positive");
  if (optimizer == Optimizer::adam &&
      (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0) || !(adam_epsilon > 0.0))) {
    throw ConfigError("adam requires beta1, beta2 in [0, 1) and epsilon > 0");
  }
}

namespace {

double mean_loss(const LSTMParams& params, const VariantSpec& variant, const Dataset& data,
                 LossKind kind) {
  return batch_loss(params, variant, data.items, kind);
}

}  // namespace

TrainResult train_model(LSTMParams params, const VariantSpec& variant, const Dataset& train,
                        const Dataset& val, const TrainConfig& cfg) {
  cfg.validate();
  variant.validate();
  params.validate();
  train.validate();
  val.validate();

  const std::vector<ParamId> slots = active_params(variant, params);
  LSTMParams grads = LSTMParams::zeros(params.input_dim(), params.hidden_size(),
                                       params.output_dim(), params.head_b.has_value());
  LSTMParams m1 = grads, m2 = grads;

  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> item_loss(train.size(), 0.0);

  TrainResult result;
  result.params = params;
  result.best_val_loss = std::numeric_limits<double>::infinity();
  const double stop_at = cfg.stop_threshold.value_or(cfg.success_threshold);
  std::uint64_t update = 0;
  Vec d_pred;

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const double scale = 1.0 / static_cast<double>(end - start);
      for (ParamId id : slots) {
        auto s = grads.slot(id);
        std::fill(s.begin(), s.end(), 0.0);
      }
      for (std::size_t k = start; k < end; ++k) {
        const Example& ex = train.items[order[k]];
        std::optional<ActivationTrace> traced;
        try {
          traced.emplace(forward_sequence(params, variant, ex.input));
        } catch (const NumericError& e) {
          throw TrainingError("training diverged at epoch " + std::to_string(epoch) + ": " +
                                  e.what(),
                              result.history);
        }
        const ActivationTrace& tr = *traced;
        item_loss[order[k]] = example_loss(tr.prediction, ex, cfg.loss);
        loss_gradient(tr.prediction, ex, cfg.loss, scale, d_pred);
        backprop_sequence(params, variant, tr, d_pred, &grads, nullptr);
      }
      ++update;
      const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(update));
      const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(update));
      for (ParamId id : slots) {
        auto w = params.slot(id);
        auto gr = grads.slot(id);
        if (cfg.optimizer == Optimizer::sgd) {
          for (std::size_t k = 0; k < w.size(); ++k) w[k] -= cfg.learning_rate * gr[k];
          continue;
        }
        auto a = m1.slot(id);
        auto b = m2.slot(id);
        for (std::size_t k = 0; k < w.size(); ++k) {
          a[k] = cfg.beta1 * a[k] + (1.0 - cfg.beta1) * gr[k];
          b[k] = cfg.beta2 * b[k] + (1.0 - cfg.beta2) * gr[k] * gr[k];
          w[k] -= cfg.learning_rate * (a[k] / bc1) / (std::sqrt(b[k] / bc2) + cfg.adam_epsilon);
        }
      }
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = std::accumulate(item_loss.begin(), item_loss.end(), 0.0) /
                     static_cast<double>(item_loss.size());
    try {
      rec.val_loss = mean_loss(params, variant, val, cfg.loss);
    } catch (const NumericError&) {
      rec.val_loss = std::numeric_limits<double>::quiet_NaN();
    }
    if (!std::isfinite(rec.train_loss) || !std::isfinite(rec.val_loss)) {
      throw TrainingError("training diverged at epoch " + std::to_string(epoch), result.history);
    }
    if (rec.val_loss < result.best_val_loss) {
      result.best_val_loss = rec.val_loss;
      result.best_epoch = epoch;
      result.params = params;
    }
    rec.best_val_loss = result.best_val_loss;
    result.history.push_back(rec);

    if (result.best_val_loss < stop_at) break;
    if (cfg.patience > 0 && epoch - result.best_epoch >= cfg.patience) break;
    if (cfg.checkpoint_epoch > 0 && epoch == cfg.checkpoint_epoch &&
        result.best_val_loss > cfg.checkpoint_loss) {
      break;
    }
  }
  result.success = result.best_val_loss < cfg.success_threshold;
  return result;
}

double accuracy(const LSTMParams& params, const VariantSpec& variant, const Dataset& data) {
  if (data.empty()) return 0.0;
  std::size_t hits = 0;
  for (const Example& ex : data.items) {
    if (!ex.label) throw ConfigError("accuracy needs labelled examples");
    const Vec scores = predict(params, variant, ex.input);
    const auto best = std::max_element(scores.begin(), scores.end()) - scores.begin();
    if (best == *ex.label) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

std::string history_csv(const std::vector<EpochRecord>& history) {
  std::ostringstream out;
  out.precision(17);
  out << "epoch,train_mse,val_mse\n";
  for (const EpochRecord& r : history) {
    out << r.epoch << ',' << r.train_loss << ',' << r.val_loss << '\n';
  }
  return out.str();
}

}  // namespace lstmlrp
