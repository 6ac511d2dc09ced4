#include "lstmlrp/lrp.hpp"

#include <cmath>
#include <string>

#include "lstmlrp/errors.hpp"

namespace lstmlrp {

std::string_view to_string(ProductRuleKind k) {
  switch (k) {
    case ProductRuleKind::all: return "all";
    case ProductRuleKind::prop: return "prop";
    case ProductRuleKind::abs: return "abs";
    case ProductRuleKind::half: return "half";
  }
  return "all";
}

ProductRuleKind product_rule_from_string(std::string_view name) {
  if (name == "all") return ProductRuleKind::all;
  if (name == "prop") return ProductRuleKind::prop;
  if (name == "abs") return ProductRuleKind::abs;
  if (name == "half") return ProductRuleKind::half;
  throw ConfigError("unknown product rule '" + std::string(name) + "'");
}

ProductRule ProductRule::with_default_epsilon(ProductRuleKind kind) {
  return {kind, kind == ProductRuleKind::prop ? 0.2 : 0.001};
}

LRPConfig LRPConfig::defaults(ProductRuleKind kind) {
  LRPConfig cfg;
  cfg.rule = ProductRule::with_default_epsilon(kind);
  return cfg;
}

LRPConfig LRPConfig::exact(ProductRuleKind kind) {
  LRPConfig cfg;
  cfg.rule = {kind, 0.0};
  cfg.epsilon_linear = 0.0;
  return cfg;
}

namespace {

double sign_of(double x) { return x < 0.0 ? -1.0 : 1.0; }

/// R_s / (Σ + ε·sign(Σ)); zero when R_s is zero.
double linear_factor(double sum, double relevance, double epsilon) {
  if (relevance == 0.0) return 0.0;
  const double denom = sum + epsilon * sign_of(sum);
  if (denom == 0.0) {
    throw DivisionHazard("epsilon rule: contributions sum to zero with no stabilizer");
  }
  return relevance / denom;
}

void check_epsilon(double eps, const char* what) {
  if (!(eps >= 0.0) || !std::isfinite(eps)) {
    throw ConfigError(std::string(what) + " must be a finite non-negative number");
  }
}

}  // namespace

LinearSplit prop_linear_epsilon(std::span<const double> contributions, std::optional<double> bias,
                                double relevance, double epsilon) {
  check_epsilon(epsilon, "epsilon");
  LinearSplit out;
  out.relevance.assign(contributions.size(), 0.0);
  double sum = bias.value_or(0.0);
  for (double c : contributions) sum += c;
  const double factor = linear_factor(sum, relevance, epsilon);
  if (factor == 0.0) return out;
  double given = 0.0;
  for (std::size_t k = 0; k < contributions.size(); ++k) {
    out.relevance[k] = contributions[k] * factor;
    given += out.relevance[k];
  }
  if (bias) {
    out.bias_relevance = *bias * factor;
    given += out.bias_relevance;
  }
  out.absorbed = relevance - given;
  return out;
}

ProductSplit prop_product(const GatedTerm& term, const ProductRule& rule) {
  check_epsilon(rule.epsilon, "product epsilon");
  ProductSplit out;
  if (term.r_p == 0.0) return out;
  switch (rule.kind) {
    case ProductRuleKind::all:
      out.r_s = term.r_p;
      return out;
    case ProductRuleKind::half:
      out.r_g = term.r_p / 2.0;
      out.r_s = term.r_p / 2.0;
      return out;
    case ProductRuleKind::prop: {
      const double sum = term.z_g + term.z_s;
      const double denom = sum + rule.epsilon * sign_of(sum);
      if (denom == 0.0) throw DivisionHazard("prop product rule: z_g + z_s = 0 with no stabilizer");
      out.r_g = term.z_g / denom * term.r_p;
      out.r_s = term.z_s / denom * term.r_p;
      break;
    }
    case ProductRuleKind::abs: {
      const double denom = std::abs(term.z_g) + std::abs(term.z_s) + rule.epsilon;
      if (denom == 0.0) throw DivisionHazard("abs product rule: both factors zero with no stabilizer");
      out.r_g = std::abs(term.z_g) / denom * term.r_p;
      out.r_s = std::abs(term.z_s) / denom * term.r_p;
      break;
    }
  }
  out.absorbed = term.r_p - out.r_g - out.r_s;
  return out;
}

AccumulatorSplit prop_sum_accumulator(double product_part, double carry_part, double relevance,
                                      double fallback_epsilon) {
  AccumulatorSplit out;
  if (relevance == 0.0) return out;
  const double sum = product_part + carry_part;
  if (sum != 0.0) {
    out.r_product = product_part / sum * relevance;
    out.r_carry = carry_part / sum * relevance;
    out.absorbed = relevance - out.r_product - out.r_carry;
    return out;
  }
  out.used_fallback = true;
  const double factor = linear_factor(sum, relevance, fallback_epsilon);
  out.r_product = product_part * factor;
  out.r_carry = carry_part * factor;
  out.absorbed = relevance - out.r_product - out.r_carry;
  return out;
}

Vec prop_elementwise(std::span<const double> relevance) {
  return Vec(relevance.begin(), relevance.end());
}

namespace {

/// Spreads relevance on one pre-activation row j over x (through w),
/// y_prev (through u) and a bias. Input shares are added to r_x / r_y.
struct LinearNode {
  const Mat* w = nullptr;  // may be null when the connection is absent
  const Mat* u = nullptr;
  const Vec* b = nullptr;
};

void spread_linear(const LinearNode& node, std::size_t j, std::span<const double> x,
                   std::span<const double> y_prev, double relevance, double epsilon,
                   std::span<double> r_x, std::span<double> r_y, double& bias_sink,
                   double& absorbed) {
  if (relevance == 0.0) return;
  double sum = node.b ? (*node.b)[j] : 0.0;
  if (node.w) {
    auto row = node.w->row(j);
    for (std::size_t d = 0; d < x.size(); ++d) sum += row[d] * x[d];
  }
  if (node.u) {
    auto row = node.u->row(j);
    for (std::size_t k = 0; k < y_prev.size(); ++k) sum += row[k] * y_prev[k];
  }
  const double factor = linear_factor(sum, relevance, epsilon);
  double given = 0.0;
  if (node.w) {
    auto row = node.w->row(j);
    for (std::size_t d = 0; d < x.size(); ++d) {
      const double r = row[d] * x[d] * factor;
      r_x[d] += r;
      given += r;
    }
  }
  if (node.u) {
    auto row = node.u->row(j);
    for (std::size_t k = 0; k < y_prev.size(); ++k) {
      const double r = row[k] * y_prev[k] * factor;
      r_y[k] += r;
      given += r;
    }
  }
  if (node.b) {
    const double r = (*node.b)[j] * factor;
    bias_sink += r;
    given += r;
  }
  absorbed += relevance - given;
}

void check_trace(const ActivationTrace& trace, const LSTMParams& params, const LRPConfig& cfg) {
  params.validate();
  if (trace.input.dim() != params.input_dim()) {
    throw ShapeError("trace input dimension " + std::to_string(trace.input.dim()) +
                     " does not match model input dimension " + std::to_string(params.input_dim()));
  }
  if (trace.hidden_size() != params.hidden_size()) {
    throw ShapeError("trace hidden size " + std::to_string(trace.hidden_size()) +
                     " does not match model hidden size " + std::to_string(params.hidden_size()));
  }
  if (trace.prediction.size() != params.output_dim()) {
    throw ShapeError("trace prediction has " + std::to_string(trace.prediction.size()) +
                     " outputs, model has " + std::to_string(params.output_dim()));
  }
  if (cfg.target >= params.output_dim()) {
    throw ShapeError("target output " + std::to_string(cfg.target) + " out of range for " +
                     std::to_string(params.output_dim()) + " outputs");
  }
  check_epsilon(cfg.epsilon_linear, "linear epsilon");
  check_epsilon(cfg.rule.epsilon, "product epsilon");
}

}  // namespace

RelevanceTrace lrp_explain(const ActivationTrace& trace, const LSTMParams& params,
                           const VariantSpec& variant, const LRPConfig& cfg) {
  check_trace(trace, params, cfg);
  const Connectivity conn = variant.connectivity();
  const std::size_t steps = trace.length();
  const std::size_t h = params.hidden_size();
  const std::size_t dims = params.input_dim();
  const double eps = cfg.epsilon_linear;

  Ledger ledger;
  const double r_out = cfg.output_relevance.value_or(trace.prediction[cfg.target]);
  ledger.output_relevance_in = r_out;

  Mat r_input(steps, dims);
  Vec r_y(h, 0.0);      // relevance on y_t
  Vec r_c(h, 0.0);      // relevance carried onto c_t from step t+1
  Vec r_y_prev(h, 0.0);
  Vec r_c_prev(h, 0.0);

  {
    // Head: prediction[target] = head_w[target, :] · y_T + head_b[target].
    auto w = params.head_w.row(cfg.target);
    auto y_last = trace.y.row(steps - 1);
    double sum = params.head_b ? (*params.head_b)[cfg.target] : 0.0;
    for (std::size_t k = 0; k < h; ++k) sum += w[k] * y_last[k];
    const double factor = linear_factor(sum, r_out, eps);
    double given = 0.0;
    for (std::size_t k = 0; k < h; ++k) {
      r_y[k] = w[k] * y_last[k] * factor;
      given += r_y[k];
    }
    if (params.head_b) {
      const double r = (*params.head_b)[cfg.target] * factor;
      ledger.bias_trapped += r;
      given += r;
    }
    ledger.stabilizer_absorbed += r_out - given;
  }

  const LinearNode z_node{&params.w_z, conn.u_z ? &params.u_z : nullptr, &params.b_z};
  const LinearNode i_node{conn.w_i ? &params.w_i : nullptr, &params.u_i, &params.b_i};
  const LinearNode f_node{&params.w_f, &params.u_f, &params.b_f};
  const LinearNode o_node{conn.w_o ? &params.w_o : nullptr, &params.u_o, &params.b_o};

  for (std::size_t t = steps; t-- > 0;) {
    auto x = trace.input.row(t);
    auto y_prev = trace.y_prev(t);
    auto c_prev = trace.c_prev(t);
    auto r_x = r_input.row(t);
    std::fill(r_y_prev.begin(), r_y_prev.end(), 0.0);
    std::fill(r_c_prev.begin(), r_c_prev.end(), 0.0);

    for (std::size_t j = 0; j < h; ++j) {
      double r_cell = r_c[j];
      if (conn.output_gate) {
        const auto split =
            prop_product({trace.pre_o(t, j), trace.c(t, j), r_y[j]}, cfg.rule);
        ledger.stabilizer_absorbed += split.absorbed;
        r_cell += split.r_s;
        spread_linear(o_node, j, x, y_prev, split.r_g, eps, r_x, r_y_prev, ledger.gate_trapped,
                      ledger.stabilizer_absorbed);
      } else {
        r_cell += r_y[j];
      }

      const auto acc = prop_sum_accumulator(trace.i(t, j) * trace.z(t, j),
                                            trace.f(t, j) * c_prev[j], r_cell, eps);
      ledger.stabilizer_absorbed += acc.absorbed;

      if (conn.forget_gate) {
        const auto split = prop_product({trace.pre_f(t, j), c_prev[j], acc.r_carry}, cfg.rule);
        ledger.stabilizer_absorbed += split.absorbed;
        r_c_prev[j] += split.r_s;
        spread_linear(f_node, j, x, y_prev, split.r_g, eps, r_x, r_y_prev, ledger.gate_trapped,
                      ledger.stabilizer_absorbed);
      } else {
        r_c_prev[j] += acc.r_carry;
      }

      double r_z = acc.r_product;
      if (conn.input_gate) {
        const auto split =
            prop_product({trace.pre_i(t, j), trace.pre_z(t, j), acc.r_product}, cfg.rule);
        ledger.stabilizer_absorbed += split.absorbed;
        r_z = split.r_s;
        spread_linear(i_node, j, x, y_prev, split.r_g, eps, r_x, r_y_prev, ledger.gate_trapped,
                      ledger.stabilizer_absorbed);
      }

      spread_linear(z_node, j, x, y_prev, r_z, eps, r_x, r_y_prev, ledger.bias_trapped,
                    ledger.stabilizer_absorbed);
    }
    std::swap(r_y, r_y_prev);
    std::swap(r_c, r_c_prev);
  }

  // Whatever reached the zero initial state.
  for (std::size_t j = 0; j < h; ++j) ledger.gate_trapped += r_y[j] + r_c[j];

  RelevanceTrace rt = relevance_from_matrix("lrp-" + std::string(to_string(cfg.rule.kind)),
                                            std::move(r_input));
  const double input_total = rt.ledger.input_total;
  rt.ledger = ledger;
  rt.ledger.input_total = input_total;
  return rt;
}

AuditSummary conservation_audit(const RelevanceTrace& rt) {
  if (rt.per_step.empty()) throw ConfigError("conservation audit needs a non-empty relevance trace");
  AuditSummary s;
  s.ledger = rt.ledger;
  const Ledger& l = rt.ledger;
  s.residual = l.output_relevance_in -
               (l.input_total + l.bias_trapped + l.gate_trapped + l.stabilizer_absorbed);
  return s;
}

}  // namespace lstmlrp
