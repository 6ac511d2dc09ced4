#pragma once

#include <string>
#include <utility>
#include <vector>

#include "lstmlrp/numeric.hpp"

namespace lstmlrp {

/// Local relevance model of a gated product: R(z_g, z_s) = gate(z_g)·signal(z_s)·c_p.
struct GatedRelevanceModel {
  Activation signal = Activation::tanh();
  Activation gate = Activation::sigmoid();
  double c_p = 1.0;
  double anchor_g = 0.0;
  double anchor_s = 0.0;
  /// Set when |gate·signal| at the anchor is below 1e-12; c_p is then 0.
  bool degenerate = false;

  /// c_p = R_p / (gate(z_g)·signal(z_s)).
  static GatedRelevanceModel calibrate(const Activation& signal, double z_g, double z_s,
                                       double r_p);
};

struct Point2 {
  double z_g = 0.0;
  double z_s = 0.0;
};

double eval_model(const GatedRelevanceModel& m, double z_g, double z_s);

/// (z_g, 0). Throws NoRootError for a signal with no zero (sigmoid).
Point2 nearest_root(const GatedRelevanceModel& m, Point2 anchor);

struct FirstOrderTerms {
  double r_g = 0.0;
  double r_s = 0.0;
};

/// Both first-order Taylor terms at the nearest root. For relu the slope at 0
/// is taken on the side of the anchor.
FirstOrderTerms first_order_terms(const GatedRelevanceModel& m, Point2 anchor);

/// model(anchor) − (model(root) + R_g_term + R_s_term).
double remainder(const GatedRelevanceModel& m, Point2 anchor);

struct DtdGridRow {
  double z_g = 0.0;
  double z_s = 0.0;
  double model_value = 0.0;
  double r_g_term = 0.0;
  double r_s_term = 0.0;
  double remainder = 0.0;
};

/// Evaluates a fixed-c_p model over an n_g × n_s grid of anchors.
std::vector<DtdGridRow> dtd_grid(const Activation& signal, double c_p, double g_min, double g_max,
                                 std::size_t n_g, double s_min, double s_max, std::size_t n_s);

/// Columns z_g, z_s, model_value, R_g_term, R_s_term, remainder.
std::string dtd_grid_csv(const std::vector<DtdGridRow>& rows);

}  // namespace lstmlrp
