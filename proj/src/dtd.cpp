#include "lstmlrp/dtd.hpp"

#include <cmath>
#include <sstream>

#include "lstmlrp/errors.hpp"

namespace lstmlrp {

GatedRelevanceModel GatedRelevanceModel::calibrate(const Activation& signal, double z_g,
                                                   double z_s, double r_p) {
  GatedRelevanceModel m;
  m.signal = signal;
  m.anchor_g = z_g;
  m.anchor_s = z_s;
  const double base = m.gate.apply(z_g) * signal.apply(z_s);
  if (std::abs(base) < 1e-12) {
    m.degenerate = true;
    m.c_p = 0.0;
  } else {
    m.c_p = r_p / base;
  }
  return m;
}

double eval_model(const GatedRelevanceModel& m, double z_g, double z_s) {
  return m.gate.apply(z_g) * m.signal.apply(z_s) * m.c_p;
}

Point2 nearest_root(const GatedRelevanceModel& m, Point2 anchor) {
  if (m.signal.kind == Activation::Kind::sigmoid) {
    throw NoRootError(
        "sigmoid signal never reaches zero; use the modified architecture instead of a root point");
  }
  return {anchor.z_g, 0.0};
}

namespace {

double signal_slope_at_root(const Activation& signal, double toward) {
  if (signal.kind == Activation::Kind::relu) return toward > 0.0 ? signal.gain : 0.0;
  return signal.derivative(0.0);
}

}  // namespace

FirstOrderTerms first_order_terms(const GatedRelevanceModel& m, Point2 anchor) {
  const Point2 root = nearest_root(m, anchor);
  FirstOrderTerms terms;
  terms.r_g = m.gate.derivative(root.z_g) * m.signal.apply(root.z_s) * m.c_p *
              (anchor.z_g - root.z_g);
  terms.r_s = m.gate.apply(root.z_g) * signal_slope_at_root(m.signal, anchor.z_s) * m.c_p *
              (anchor.z_s - root.z_s);
  return terms;
}

double remainder(const GatedRelevanceModel& m, Point2 anchor) {
  const Point2 root = nearest_root(m, anchor);
  const FirstOrderTerms terms = first_order_terms(m, anchor);
  return eval_model(m, anchor.z_g, anchor.z_s) -
         (eval_model(m, root.z_g, root.z_s) + terms.r_g + terms.r_s);
}

std::vector<DtdGridRow> dtd_grid(const Activation& signal, double c_p, double g_min, double g_max,
                                 std::size_t n_g, double s_min, double s_max, std::size_t n_s) {
  if (n_g == 0 || n_s == 0) throw ConfigError("dtd grid needs at least one point per axis");
  auto axis = [](double lo, double hi, std::size_t n, std::size_t k) {
    return n == 1 ? lo : lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n - 1);
  };
  GatedRelevanceModel m;
  m.signal = signal;
  m.c_p = c_p;
  std::vector<DtdGridRow> rows;
  rows.reserve(n_g * n_s);
  for (std::size_t a = 0; a < n_g; ++a) {
    for (std::size_t b = 0; b < n_s; ++b) {
      const Point2 p{axis(g_min, g_max, n_g, a), axis(s_min, s_max, n_s, b)};
      m.anchor_g = p.z_g;
      m.anchor_s = p.z_s;
      const FirstOrderTerms terms = first_order_terms(m, p);
      rows.push_back({p.z_g, p.z_s, eval_model(m, p.z_g, p.z_s), terms.r_g, terms.r_s,
                      remainder(m, p)});
    }
  }
  return rows;
}

std::string dtd_grid_csv(const std::vector<DtdGridRow>& rows) {
  std::ostringstream out;
  out.precision(17);
  out << "z_g,z_s,model_value,R_g_term,R_s_term,remainder\n";
  for (const DtdGridRow& r : rows) {
    out << r.z_g << ',' << r.z_s << ',' << r.model_value << ',' << r.r_g_term << ','
        << r.r_s_term << ',' << r.remainder << '\n';
  }
  return out.str();
}

}  // namespace lstmlrp
