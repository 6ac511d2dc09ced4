#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "lstmlrp/lstm.hpp"
#include "lstmlrp/relevance.hpp"

namespace lstmlrp {

/// How relevance arriving at a gate·signal product is split between the two.
///   all:  (0, R_p)
///   prop: shares z_g / (z_g + z_s) and z_s / (z_g + z_s), stabilised by ε·sign(z_g + z_s)
///   abs:  shares |z_g| / (|z_g| + |z_s|) and |z_s| / (...), stabilised by +ε
///   half: (R_p / 2, R_p / 2)
enum class ProductRuleKind { all, prop, abs, half };

std::string_view to_string(ProductRuleKind k);
ProductRuleKind product_rule_from_string(std::string_view name);

struct ProductRule {
  ProductRuleKind kind = ProductRuleKind::all;
  double epsilon = 0.001;

  /// Default stabiliser: 0.2 for prop, 0.001 otherwise.
  static ProductRule with_default_epsilon(ProductRuleKind kind);
};

struct LRPConfig {
  ProductRule rule;
  double epsilon_linear = 0.001;
  std::size_t target = 0;
  /// Relevance injected at the target output; defaults to the output's score.
  std::optional<double> output_relevance;

  static LRPConfig defaults(ProductRuleKind kind);
  static LRPConfig exact(ProductRuleKind kind);  // both stabilisers zero
};

/// Result of the epsilon rule over one weighted sum.
struct LinearSplit {
  Vec relevance;             // one entry per non-bias contributor
  double bias_relevance = 0.0;
  double absorbed = 0.0;
};

/// R_j = a_j w_j / (Σ + ε·sign(Σ)) · R_s, with sign(0) = +1. The bias (if
/// any) is one more contributor whose share is reported separately.
/// Throws DivisionHazard when Σ = 0, ε = 0 and R_s ≠ 0.
LinearSplit prop_linear_epsilon(std::span<const double> contributions, std::optional<double> bias,
                                double relevance, double epsilon);

/// A gate·signal product: pre-activations of both factors and the
/// relevance arriving at the product.
struct GatedTerm {
  double z_g = 0.0;
  double z_s = 0.0;
  double r_p = 0.0;
};

struct ProductSplit {
  double r_g = 0.0;
  double r_s = 0.0;
  double absorbed = 0.0;
};

/// Throws DivisionHazard for prop/abs with a zero denominator and ε = 0.
ProductSplit prop_product(const GatedTerm& term, const ProductRule& rule);

struct AccumulatorSplit {
  double r_product = 0.0;
  double r_carry = 0.0;
  double absorbed = 0.0;
  bool used_fallback = false;
};

/// Proportional split of R_c over c_t = i⊙z + f⊙c_{t-1} (no stabiliser).
/// An exactly zero sum falls back to the epsilon rule with `fallback_epsilon`.
AccumulatorSplit prop_sum_accumulator(double product_part, double carry_part, double relevance,
                                      double fallback_epsilon = 0.001);

/// Relevance passes unchanged through elementwise nonlinearities.
Vec prop_elementwise(std::span<const double> relevance);

/// Backward relevance pass over an unrolled forward trace. Per-dimension
/// input relevance lands in per_dim; per_step sums over dimensions.
/// Throws ShapeError when the trace does not belong to the model.
RelevanceTrace lrp_explain(const ActivationTrace& trace, const LSTMParams& params,
                           const VariantSpec& variant, const LRPConfig& cfg);

struct AuditSummary {
  Ledger ledger;
  /// output_relevance_in − (input_total + bias_trapped + gate_trapped + stabilizer_absorbed)
  double residual = 0.0;
};

/// Throws ConfigError on an empty relevance trace.
AuditSummary conservation_audit(const RelevanceTrace& rt);

}  // namespace lstmlrp
