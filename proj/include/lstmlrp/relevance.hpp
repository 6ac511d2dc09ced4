#pragma once

#include <optional>
#include <string>

#include "lstmlrp/numeric.hpp"

namespace lstmlrp {

/// Where the output relevance went. Only LRP fills the absorption entries;
/// every other explainer leaves them at zero.
struct Ledger {
  double output_relevance_in = 0.0;
  double bias_trapped = 0.0;         // cell-input and head biases
  double gate_trapped = 0.0;         // gate biases and the zero initial state
  double stabilizer_absorbed = 0.0;  // epsilon terms in any denominator
  double input_total = 0.0;          // sum of all input relevances
};

/// Relevance per timestep and (when the method resolves it) per input dimension.
struct RelevanceTrace {
  std::string method;
  std::optional<Mat> per_dim;  // T × D
  Vec per_step;                // R_t
  Ledger ledger;

  std::size_t length() const { return per_step.size(); }
};

/// Builds per-step sums and input_total from a T × D relevance matrix.
RelevanceTrace relevance_from_matrix(std::string method, Mat per_dim);
/// Per-step-only relevance.
RelevanceTrace relevance_from_steps(std::string method, Vec per_step);

/// CSV with header "t,dim,relevance"; per-step-only traces use dim = -1.
/// A "# ledger" comment block follows the rows.
std::string relevance_to_csv(const RelevanceTrace& rt);
std::string relevance_to_json(const RelevanceTrace& rt);

}  // namespace lstmlrp
