#include "lstmlrp/lstm.hpp"

#include <cmath>
#include <string>

#include "lstmlrp/errors.hpp"

namespace lstmlrp {

std::string_view to_string(Architecture a) {
  switch (a) {
    case Architecture::standard: return "standard";
    case Architecture::nondecreasing: return "nondecreasing";
    case Architecture::markov: return "markov";
    case Architecture::gateless: return "gateless";
  }
  return "?";
}

Architecture architecture_from_string(std::string_view name) {
  if (name == "standard") return Architecture::standard;
  if (name == "nondecreasing") return Architecture::nondecreasing;
  if (name == "markov") return Architecture::markov;
  if (name == "gateless") return Architecture::gateless;
  throw ConfigError("unknown architecture '" + std::string(name) + "'");
}

VariantSpec VariantSpec::standard() { return {}; }

VariantSpec VariantSpec::nondecreasing(double a_g, double a_h) {
  VariantSpec v{Architecture::nondecreasing, Activation::sigmoid(a_g), Activation::tanh(a_h)};
  v.validate();
  return v;
}

VariantSpec VariantSpec::markov(double a_g, double a_h) {
  VariantSpec v{Architecture::markov, Activation::sigmoid(a_g), Activation::tanh(a_h)};
  v.validate();
  return v;
}

VariantSpec VariantSpec::gateless(double a_g, double a_h) {
  VariantSpec v{Architecture::gateless, Activation::sigmoid(a_g), Activation::tanh(a_h)};
  v.validate();
  return v;
}

VariantSpec VariantSpec::make(Architecture a, double a_g, double a_h) {
  switch (a) {
    case Architecture::standard: return standard();
    case Architecture::nondecreasing: return nondecreasing(a_g, a_h);
    case Architecture::markov: return markov(a_g, a_h);
    case Architecture::gateless: return gateless(a_g, a_h);
  }
  return standard();
}

Connectivity VariantSpec::connectivity() const {
  switch (architecture) {
    case Architecture::standard: return {};
    case Architecture::nondecreasing:
      return {.w_i = false, .w_o = false, .u_z = false,
              .input_gate = true, .forget_gate = false, .output_gate = true};
    case Architecture::markov:
      return {.w_i = false, .w_o = false, .u_z = false,
              .input_gate = true, .forget_gate = false, .output_gate = false};
    case Architecture::gateless:
      return {.w_i = false, .w_o = false, .u_z = false,
              .input_gate = false, .forget_gate = false, .output_gate = false};
  }
  return {};
}

void VariantSpec::validate() const {
  if (architecture == Architecture::standard) {
    if (cell_input != Activation::tanh() || cell_state != Activation::tanh()) {
      throw ConfigError("standard architecture uses g = h = tanh with unit gain");
    }
    return;
  }
  if (cell_input.kind != Activation::Kind::sigmoid || cell_state.kind != Activation::Kind::tanh) {
    throw ConfigError(std::string(to_string(architecture)) +
                      " architecture uses g = a_g*sigmoid and h = a_h*tanh");
  }
  const double a_g = cell_input.gain;
  const double a_h = cell_state.gain;
  if (a_g != 2.0 && a_g != 3.0 && a_g != 4.0) {
    throw ConfigError("cell input gain a_g must be one of {2, 3, 4}, got " + std::to_string(a_g));
  }
  if (a_h != 1.0 && a_h != 2.0 && a_h != 4.0) {
    throw ConfigError("cell state gain a_h must be one of {1, 2, 4}, got " + std::to_string(a_h));
  }
}

std::string_view param_name(ParamId id) {
  static constexpr std::array<std::string_view, kParamSlots> names = {
      "w_z", "w_i", "w_f", "w_o", "u_z", "u_i", "u_f",
      "u_o", "b_z", "b_i", "b_f", "b_o", "head_w", "head_b"};
  return names[static_cast<std::size_t>(id)];
}

LSTMParams LSTMParams::zeros(std::size_t input_dim, std::size_t hidden, std::size_t output_dim,
                             bool head_bias) {
  LSTMParams p;
  for (Mat* m : {&p.w_z, &p.w_i, &p.w_f, &p.w_o}) *m = Mat(hidden, input_dim);
  for (Mat* m : {&p.u_z, &p.u_i, &p.u_f, &p.u_o}) *m = Mat(hidden, hidden);
  for (Vec* b : {&p.b_z, &p.b_i, &p.b_f, &p.b_o}) b->assign(hidden, 0.0);
  p.head_w = Mat(output_dim, hidden);
  if (head_bias) p.head_b = Vec(output_dim, 0.0);
  return p;
}

std::span<double> LSTMParams::slot(ParamId id) {
  switch (id) {
    case ParamId::w_z: return w_z.flat();
    case ParamId::w_i: return w_i.flat();
    case ParamId::w_f: return w_f.flat();
    case ParamId::w_o: return w_o.flat();
    case ParamId::u_z: return u_z.flat();
    case ParamId::u_i: return u_i.flat();
    case ParamId::u_f: return u_f.flat();
    case ParamId::u_o: return u_o.flat();
    case ParamId::b_z: return b_z;
    case ParamId::b_i: return b_i;
    case ParamId::b_f: return b_f;
    case ParamId::b_o: return b_o;
    case ParamId::head_w: return head_w.flat();
    case ParamId::head_b: return head_b ? std::span<double>(*head_b) : std::span<double>();
  }
  return {};
}

std::span<const double> LSTMParams::slot(ParamId id) const {
  return const_cast<LSTMParams*>(this)->slot(id);
}

void LSTMParams::validate() const {
  const std::size_t h = hidden_size();
  const std::size_t d = input_dim();
  auto fail = [](const std::string& what) { throw ShapeError("LSTMParams: " + what); };
  if (h == 0 || d == 0 || output_dim() == 0) fail("empty dimension");
  for (const Mat* m : {&w_z, &w_i, &w_f, &w_o}) {
    if (m->rows() != h || m->cols() != d) fail("input matrices must all be hidden x input");
  }
  for (const Mat* m : {&u_z, &u_i, &u_f, &u_o}) {
    if (m->rows() != h || m->cols() != h) fail("recurrent matrices must be hidden x hidden");
  }
  for (const Vec* b : {&b_z, &b_i, &b_f, &b_o}) {
    if (b->size() != h) fail("bias length must equal hidden size");
  }
  if (head_w.cols() != h) {
    fail("head_w has " + std::to_string(head_w.cols()) + " columns, hidden size is " +
         std::to_string(h));
  }
  if (head_b && head_b->size() != head_w.rows()) fail("head_b length must equal output dim");
}

bool is_active(const VariantSpec& variant, const LSTMParams& params, ParamId id) {
  const Connectivity c = variant.connectivity();
  switch (id) {
    case ParamId::w_z:
    case ParamId::b_z:
    case ParamId::head_w: return true;
    case ParamId::head_b: return params.head_b.has_value();
    case ParamId::u_z: return c.u_z;
    case ParamId::w_i: return c.input_gate && c.w_i;
    case ParamId::u_i:
    case ParamId::b_i: return c.input_gate;
    case ParamId::w_f:
    case ParamId::u_f:
    case ParamId::b_f: return c.forget_gate;
    case ParamId::w_o: return c.output_gate && c.w_o;
    case ParamId::u_o:
    case ParamId::b_o: return c.output_gate;
  }
  return false;
}

std::vector<ParamId> active_params(const VariantSpec& variant, const LSTMParams& params) {
  std::vector<ParamId> out;
  for (ParamId id : kAllParams) {
    if (is_active(variant, params, id)) out.push_back(id);
  }
  return out;
}

std::size_t parameter_count(const VariantSpec& variant, const LSTMParams& params) {
  std::size_t n = 0;
  for (ParamId id : active_params(variant, params)) n += params.slot(id).size();
  return n;
}

LSTMParams initialize_params(const VariantSpec& variant, std::size_t input_dim,
                             std::size_t hidden, std::size_t output_dim, bool head_bias,
                             std::mt19937_64& rng, double scale) {
  LSTMParams p = LSTMParams::zeros(input_dim, hidden, output_dim, head_bias);
  std::uniform_real_distribution<double> uni(-scale, scale);
  for (ParamId id : active_params(variant, p)) {
    for (double& w : p.slot(id)) w = uni(rng);
  }
  if (variant.architecture != Architecture::standard) {
    p.b_z.assign(hidden, -3.0);
    if (variant.connectivity().input_gate) p.b_i.assign(hidden, -2.0);
  }
  return p;
}

Sequence::Sequence(Mat rows) : data_(std::move(rows)) {
  if (data_.rows() == 0 || data_.cols() == 0) throw ShapeError("sequence must be non-empty");
}

namespace {

Mat stack_rows(const std::vector<Vec>& rows) {
  if (rows.empty()) throw ShapeError("sequence must be non-empty");
  const std::size_t d = rows.front().size();
  Mat m(rows.size(), d);
  for (std::size_t t = 0; t < rows.size(); ++t) {
    if (rows[t].size() != d) {
      throw ShapeError("sequence rows must share one dimension: row 0 has " + std::to_string(d) +
                       ", row " + std::to_string(t) + " has " + std::to_string(rows[t].size()));
    }
    std::copy(rows[t].begin(), rows[t].end(), m.row(t).begin());
  }
  return m;
}

}  // namespace

Sequence::Sequence(const std::vector<Vec>& rows) : Sequence(stack_rows(rows)) {}

namespace {

struct StepOut {
  std::span<double> pre_z, pre_i, pre_f, pre_o, z, i, f, c, o, y;
};

// Shared kernel of forward_step and forward_sequence.
void step_into(const LSTMParams& p, const VariantSpec& v, const Connectivity& conn,
               std::span<const double> x, std::span<const double> y_prev,
               std::span<const double> c_prev, const StepOut& out) {
  const std::size_t h = p.hidden_size();
  for (std::size_t j = 0; j < h; ++j) {
    out.pre_z[j] = p.b_z[j];
    out.pre_i[j] = conn.input_gate ? p.b_i[j] : 0.0;
    out.pre_f[j] = conn.forget_gate ? p.b_f[j] : 0.0;
    out.pre_o[j] = conn.output_gate ? p.b_o[j] : 0.0;
  }
  matvec_add(p.w_z, x, out.pre_z);
  if (conn.u_z) matvec_add(p.u_z, y_prev, out.pre_z);
  if (conn.input_gate) {
    if (conn.w_i) matvec_add(p.w_i, x, out.pre_i);
    matvec_add(p.u_i, y_prev, out.pre_i);
  }
  if (conn.forget_gate) {
    matvec_add(p.w_f, x, out.pre_f);
    matvec_add(p.u_f, y_prev, out.pre_f);
  }
  if (conn.output_gate) {
    if (conn.w_o) matvec_add(p.w_o, x, out.pre_o);
    matvec_add(p.u_o, y_prev, out.pre_o);
  }
  for (std::size_t j = 0; j < h; ++j) {
    out.z[j] = v.cell_input.apply(out.pre_z[j]);
    out.i[j] = conn.input_gate ? sigmoid(out.pre_i[j]) : 1.0;
    out.f[j] = conn.forget_gate ? sigmoid(out.pre_f[j]) : 1.0;
    out.c[j] = out.i[j] * out.z[j] + out.f[j] * c_prev[j];
    out.o[j] = conn.output_gate ? sigmoid(out.pre_o[j]) : 1.0;
    out.y[j] = out.o[j] * v.cell_state.apply(out.c[j]);
  }
}

void check_dims(const LSTMParams& p, std::size_t input_dim) {
  if (input_dim != p.input_dim()) {
    throw ShapeError("input dimension " + std::to_string(input_dim) +
                     " does not match model input dimension " + std::to_string(p.input_dim()));
  }
}

}  // namespace

ActivationTrace::ActivationTrace(Sequence in, std::size_t hidden)
    : input(std::move(in)),
      pre_z(input.length(), hidden),
      pre_i(input.length(), hidden),
      pre_f(input.length(), hidden),
      pre_o(input.length(), hidden),
      z(input.length(), hidden),
      i(input.length(), hidden),
      f(input.length(), hidden),
      c(input.length(), hidden),
      o(input.length(), hidden),
      y(input.length(), hidden),
      zero_state_(hidden, 0.0) {}

std::span<const double> ActivationTrace::c_prev(std::size_t t) const {
  return t == 0 ? std::span<const double>(zero_state_) : c.row(t - 1);
}

std::span<const double> ActivationTrace::y_prev(std::size_t t) const {
  return t == 0 ? std::span<const double>(zero_state_) : y.row(t - 1);
}

StepActivations forward_step(const LSTMParams& params, const VariantSpec& variant,
                             std::span<const double> x, std::span<const double> y_prev,
                             std::span<const double> c_prev) {
  check_dims(params, x.size());
  const std::size_t h = params.hidden_size();
  if (y_prev.size() != h || c_prev.size() != h) {
    throw ShapeError("state vectors must have hidden size " + std::to_string(h));
  }
  StepActivations s;
  for (Vec* v : {&s.pre_z, &s.pre_i, &s.pre_f, &s.pre_o, &s.z, &s.i, &s.f, &s.c, &s.o, &s.y}) {
    v->assign(h, 0.0);
  }
  step_into(params, variant, variant.connectivity(), x, y_prev, c_prev,
            {s.pre_z, s.pre_i, s.pre_f, s.pre_o, s.z, s.i, s.f, s.c, s.o, s.y});
  return s;
}

ActivationTrace forward_sequence(const LSTMParams& params, const VariantSpec& variant,
                                 const Sequence& seq) {
  check_dims(params, seq.dim());
  const Connectivity conn = variant.connectivity();
  ActivationTrace tr(seq, params.hidden_size());
  for (std::size_t t = 0; t < seq.length(); ++t) {
    step_into(params, variant, conn, seq.row(t), tr.y_prev(t), tr.c_prev(t),
              {tr.pre_z.row(t), tr.pre_i.row(t), tr.pre_f.row(t), tr.pre_o.row(t), tr.z.row(t),
               tr.i.row(t), tr.f.row(t), tr.c.row(t), tr.o.row(t), tr.y.row(t)});
    if (!all_finite(tr.c.row(t)) || !all_finite(tr.y.row(t))) {
      throw NumericError("non-finite activation at timestep " + std::to_string(t));
    }
  }
  tr.prediction = params.head_b ? *params.head_b : Vec(params.output_dim(), 0.0);
  matvec_add(params.head_w, tr.y.row(seq.length() - 1), tr.prediction);
  if (!all_finite(tr.prediction)) throw NumericError("non-finite prediction");
  return tr;
}

Vec predict(const LSTMParams& params, const VariantSpec& variant, const Sequence& seq) {
  return forward_sequence(params, variant, seq).prediction;
}

}  // namespace lstmlrp
