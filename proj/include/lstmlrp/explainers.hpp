#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "lstmlrp/lrp.hpp"
#include "lstmlrp/lstm.hpp"
#include "lstmlrp/relevance.hpp"

namespace lstmlrp {

/// Max-shifted softmax.
Vec softmax(std::span<const double> scores);

/// R_{t,d} = (∂f_target/∂x_{t,d})² when squared, otherwise ∂f_target/∂x_{t,d} · x_{t,d}.
RelevanceTrace gradient_relevance(const ActivationTrace& trace, const LSTMParams& params,
                                  const VariantSpec& variant, std::size_t target, bool squared);

enum class OcclusionMode { f_diff, p_diff };

/// R_t = f(x) − f(x with row t zeroed), on scores (f_diff) or softmax
/// probabilities (p_diff). p_diff needs at least two outputs.
RelevanceTrace occlusion_relevance(const Sequence& seq, const LSTMParams& params,
                                   const VariantSpec& variant, std::size_t target,
                                   OcclusionMode mode);

struct ExplainerKind {
  enum class Method { gradient_squared, gradient_x_input, occlusion_f_diff, occlusion_p_diff, lrp };

  Method method = Method::lrp;
  ProductRuleKind rule = ProductRuleKind::all;  // lrp only

  static ExplainerKind lrp_rule(ProductRuleKind rule) { return {Method::lrp, rule}; }

  /// "gradient", "gradient_x_input", "occlusion", "occlusion_p", "lrp-all", ...
  std::string name() const;
  static ExplainerKind parse(std::string_view name);

  friend bool operator==(const ExplainerKind&, const ExplainerKind&) = default;
};

/// Stabilisers for the LRP kinds; ignored by the others.
struct ExplainOptions {
  double epsilon_linear = 0.001;
  /// Defaults to the rule's own default (0.2 for prop).
  std::optional<double> epsilon_product;
};

RelevanceTrace explain(const ExplainerKind& kind, const Sequence& seq, const LSTMParams& params,
                       const VariantSpec& variant, std::size_t target,
                       const ExplainOptions& opts = {});

/// Same, reusing a forward trace already computed for `trace.input`.
RelevanceTrace explain(const ExplainerKind& kind, const ActivationTrace& trace,
                       const LSTMParams& params, const VariantSpec& variant, std::size_t target,
                       const ExplainOptions& opts = {});

}  // namespace lstmlrp
