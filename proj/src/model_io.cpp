#include <fstream>
#include <sstream>

#include "json.hpp"
#include "lstmlrp/errors.hpp"
#include "lstmlrp/lstm.hpp"

namespace lstmlrp {

using nlohmann::json;

namespace {

json matrix_to_json(const Mat& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    rows.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return rows;
}

const json& require(const json& obj, const char* key) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw MissingField(std::string("model document: missing field '") + key + "'");
  }
  return obj.at(key);
}

std::size_t require_dim(const json& dims, const char* key) {
  const json& v = require(dims, key);
  if (!v.is_number_unsigned() || v.get<std::size_t>() == 0) {
    throw DimensionError(std::string("model document: dims.") + key + " must be a positive integer");
  }
  return v.get<std::size_t>();
}

void read_matrix(const json& node, const std::string& name, Mat& m) {
  if (!node.is_array() || node.size() != m.rows()) {
    throw DimensionError("model document: " + name + " must have " + std::to_string(m.rows()) +
                         " rows");
  }
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const json& row = node[r];
    if (!row.is_array() || row.size() != m.cols()) {
      throw DimensionError("model document: " + name + " row " + std::to_string(r) + " must have " +
                           std::to_string(m.cols()) + " columns");
    }
    for (std::size_t c = 0; c < m.cols(); ++c) {
      if (!row[c].is_number()) throw ParseError("model document: non-numeric entry in " + name);
      m(r, c) = row[c].get<double>();
    }
  }
}

void read_vector(const json& node, const std::string& name, std::span<double> out) {
  if (!node.is_array() || node.size() != out.size()) {
    throw DimensionError("model document: " + name + " must have length " +
                         std::to_string(out.size()));
  }
  for (std::size_t k = 0; k < out.size(); ++k) {
    if (!node[k].is_number()) throw ParseError("model document: non-numeric entry in " + name);
    out[k] = node[k].get<double>();
  }
}

bool is_matrix_slot(ParamId id) {
  return id != ParamId::b_z && id != ParamId::b_i && id != ParamId::b_f && id != ParamId::b_o &&
         id != ParamId::head_b;
}

Mat& matrix_slot(LSTMParams& p, ParamId id) {
  switch (id) {
    case ParamId::w_z: return p.w_z;
    case ParamId::w_i: return p.w_i;
    case ParamId::w_f: return p.w_f;
    case ParamId::w_o: return p.w_o;
    case ParamId::u_z: return p.u_z;
    case ParamId::u_i: return p.u_i;
    case ParamId::u_f: return p.u_f;
    case ParamId::u_o: return p.u_o;
    default: return p.head_w;
  }
}

}  // namespace

std::string serialize_model(const LSTMParams& params, const VariantSpec& variant) {
  params.validate();
  json doc;
  doc["format_version"] = kModelFormatVersion;
  doc["variant"] = std::string(to_string(variant.architecture));
  doc["dims"] = {{"input", params.input_dim()},
                 {"hidden", params.hidden_size()},
                 {"output", params.output_dim()},
                 {"head_bias", params.head_b.has_value()}};
  doc["gains"] = {{"a_g", variant.cell_input.gain}, {"a_h", variant.cell_state.gain}};
  json weights = json::object();
  LSTMParams& mutable_params = const_cast<LSTMParams&>(params);
  for (ParamId id : active_params(variant, params)) {
    const std::string name(param_name(id));
    if (is_matrix_slot(id)) {
      weights[name] = matrix_to_json(matrix_slot(mutable_params, id));
    } else {
      auto s = params.slot(id);
      weights[name] = std::vector<double>(s.begin(), s.end());
    }
  }
  doc["weights"] = std::move(weights);
  return doc.dump(1);
}

Model deserialize_model(std::string_view document) {
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("model document: ") + e.what());
  }
  const json& version = require(doc, "format_version");
  if (!version.is_number_integer() || version.get<int>() != kModelFormatVersion) {
    throw VersionMismatch("model document: format_version " + version.dump() + ", expected " +
                          std::to_string(kModelFormatVersion));
  }
  const json& variant_name = require(doc, "variant");
  if (!variant_name.is_string()) throw ParseError("model document: variant must be a string");
  const json& gains = require(doc, "gains");
  const json& a_g = require(gains, "a_g");
  const json& a_h = require(gains, "a_h");
  if (!a_g.is_number() || !a_h.is_number()) throw ParseError("model document: gains must be numbers");

  VariantSpec variant;
  try {
    variant = VariantSpec::make(architecture_from_string(variant_name.get<std::string>()),
                                a_g.get<double>(), a_h.get<double>());
  } catch (const ConfigError& e) {
    throw ParseError(std::string("model document: ") + e.what());
  }

  const json& dims = require(doc, "dims");
  const std::size_t input = require_dim(dims, "input");
  const std::size_t hidden = require_dim(dims, "hidden");
  const std::size_t output = require_dim(dims, "output");
  const json& head_bias = require(dims, "head_bias");
  if (!head_bias.is_boolean()) throw ParseError("model document: dims.head_bias must be boolean");

  LSTMParams params = LSTMParams::zeros(input, hidden, output, head_bias.get<bool>());
  const json& weights = require(doc, "weights");
  for (ParamId id : active_params(variant, params)) {
    const std::string name(param_name(id));
    if (!weights.contains(name)) {
      throw MissingField("model document: missing weights." + name);
    }
    if (is_matrix_slot(id)) {
      read_matrix(weights.at(name), name, matrix_slot(params, id));
    } else {
      read_vector(weights.at(name), name, params.slot(id));
    }
  }
  return {std::move(params), variant};
}

void save_model(const std::string& path, const LSTMParams& params, const VariantSpec& variant) {
  std::ofstream out(path);
  if (!out) throw FileError("cannot open '" + path + "' for writing");
  out << serialize_model(params, variant) << '\n';
}

Model load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FileError("cannot open model file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize_model(buf.str());
}

}  // namespace lstmlrp
