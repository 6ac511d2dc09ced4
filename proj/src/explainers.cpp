#include "lstmlrp/explainers.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lstmlrp/errors.hpp"
#include "lstmlrp/train.hpp"

namespace lstmlrp {

Vec softmax(std::span<const double> scores) {
  if (scores.empty()) return {};
  const double top = *std::max_element(scores.begin(), scores.end());
  Vec out(scores.size());
  double total = 0.0;
  for (std::size_t k = 0; k < scores.size(); ++k) {
    out[k] = std::exp(scores[k] - top);
    total += out[k];
  }
  for (double& p : out) p /= total;
  return out;
}

namespace {

void check_target(const LSTMParams& params, std::size_t target) {
  if (target >= params.output_dim()) {
    throw ShapeError("target output " + std::to_string(target) + " out of range for " +
                     std::to_string(params.output_dim()) + " outputs");
  }
}

}  // namespace

RelevanceTrace gradient_relevance(const ActivationTrace& trace, const LSTMParams& params,
                                  const VariantSpec& variant, std::size_t target, bool squared) {
  check_target(params, target);
  Vec seed(params.output_dim(), 0.0);
  seed[target] = 1.0;
  Mat grad = input_gradients(params, variant, trace, seed);
  if (!all_finite(grad.flat())) throw NumericError("non-finite input gradient");
  for (std::size_t t = 0; t < grad.rows(); ++t) {
    auto x = trace.input.row(t);
    auto g = grad.row(t);
    for (std::size_t d = 0; d < grad.cols(); ++d) g[d] = squared ? g[d] * g[d] : g[d] * x[d];
  }
  return relevance_from_matrix(squared ? "gradient" : "gradient_x_input", std::move(grad));
}

RelevanceTrace occlusion_relevance(const Sequence& seq, const LSTMParams& params,
                                   const VariantSpec& variant, std::size_t target,
                                   OcclusionMode mode) {
  check_target(params, target);
  if (mode == OcclusionMode::p_diff && params.output_dim() < 2) {
    throw ConfigError("probability occlusion needs a classification head");
  }
  auto score = [&](const Sequence& s) {
    const Vec out = predict(params, variant, s);
    return mode == OcclusionMode::f_diff ? out[target] : softmax(out)[target];
  };
  const double base = score(seq);
  Vec per_step(seq.length(), 0.0);
  Sequence work = seq;
  for (std::size_t t = 0; t < seq.length(); ++t) {
    auto row = work.row(t);
    std::fill(row.begin(), row.end(), 0.0);
    per_step[t] = base - score(work);
    auto src = seq.row(t);
    std::copy(src.begin(), src.end(), row.begin());
  }
  return relevance_from_steps(mode == OcclusionMode::f_diff ? "occlusion" : "occlusion_p",
                              std::move(per_step));
}

std::string ExplainerKind::name() const {
  switch (method) {
    case Method::gradient_squared: return "gradient";
    case Method::gradient_x_input: return "gradient_x_input";
    case Method::occlusion_f_diff: return "occlusion";
    case Method::occlusion_p_diff: return "occlusion_p";
    case Method::lrp: return "lrp-" + std::string(to_string(rule));
  }
  return "lrp-all";
}

ExplainerKind ExplainerKind::parse(std::string_view name) {
  if (name == "gradient") return {Method::gradient_squared};
  if (name == "gradient_x_input") return {Method::gradient_x_input};
  if (name == "occlusion") return {Method::occlusion_f_diff};
  if (name == "occlusion_p") return {Method::occlusion_p_diff};
  if (name.starts_with("lrp-")) return lrp_rule(product_rule_from_string(name.substr(4)));
  throw ConfigError("unknown explainer '" + std::string(name) + "'");
}

RelevanceTrace explain(const ExplainerKind& kind, const ActivationTrace& trace,
                       const LSTMParams& params, const VariantSpec& variant, std::size_t target,
                       const ExplainOptions& opts) {
  using Method = ExplainerKind::Method;
  switch (kind.method) {
    case Method::gradient_squared:
      return gradient_relevance(trace, params, variant, target, true);
    case Method::gradient_x_input:
      return gradient_relevance(trace, params, variant, target, false);
    case Method::occlusion_f_diff:
      return occlusion_relevance(trace.input, params, variant, target, OcclusionMode::f_diff);
    case Method::occlusion_p_diff:
      return occlusion_relevance(trace.input, params, variant, target, OcclusionMode::p_diff);
    case Method::lrp: {
      LRPConfig cfg = LRPConfig::defaults(kind.rule);
      cfg.epsilon_linear = opts.epsilon_linear;
      if (opts.epsilon_product) cfg.rule.epsilon = *opts.epsilon_product;
      cfg.target = target;
      return lrp_explain(trace, params, variant, cfg);
    }
  }
  throw ConfigError("unknown explainer");
}

RelevanceTrace explain(const ExplainerKind& kind, const Sequence& seq, const LSTMParams& params,
                       const VariantSpec& variant, std::size_t target,
                       const ExplainOptions& opts) {
  using Method = ExplainerKind::Method;
  if (kind.method == Method::occlusion_f_diff || kind.method == Method::occlusion_p_diff) {
    return occlusion_relevance(seq, params, variant, target,
                               kind.method == Method::occlusion_f_diff ? OcclusionMode::f_diff
                                                                       : OcclusionMode::p_diff);
  }
  return explain(kind, forward_sequence(params, variant, seq), params, variant, target, opts);
}

}  // namespace lstmlrp
