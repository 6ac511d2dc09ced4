#include <numeric>
#include <sstream>

#include "json.hpp"
#include "lstmlrp/relevance.hpp"

namespace lstmlrp {

RelevanceTrace relevance_from_matrix(std::string method, Mat per_dim) {
  RelevanceTrace rt;
  rt.method = std::move(method);
  rt.per_step.assign(per_dim.rows(), 0.0);
  for (std::size_t t = 0; t < per_dim.rows(); ++t) {
    auto row = per_dim.row(t);
    rt.per_step[t] = std::accumulate(row.begin(), row.end(), 0.0);
  }
  rt.ledger.input_total = std::accumulate(rt.per_step.begin(), rt.per_step.end(), 0.0);
  rt.per_dim = std::move(per_dim);
  return rt;
}

RelevanceTrace relevance_from_steps(std::string method, Vec per_step) {
  RelevanceTrace rt;
  rt.method = std::move(method);
  rt.per_step = std::move(per_step);
  rt.ledger.input_total = std::accumulate(rt.per_step.begin(), rt.per_step.end(), 0.0);
  return rt;
}

std::string relevance_to_csv(const RelevanceTrace& rt) {
  std::ostringstream out;
  out.precision(17);
  out << "t,dim,relevance\n";
  if (rt.per_dim) {
    for (std::size_t t = 0; t < rt.per_dim->rows(); ++t) {
      for (std::size_t d = 0; d < rt.per_dim->cols(); ++d) {
        out << t << ',' << d << ',' << (*rt.per_dim)(t, d) << '\n';
      }
    }
  } else {
    for (std::size_t t = 0; t < rt.per_step.size(); ++t) {
      out << t << ",-1," << rt.per_step[t] << '\n';
    }
  }
  const Ledger& l = rt.ledger;
  out << "# ledger\n"
      << "# method," << rt.method << '\n'
      << "# output_relevance_in," << l.output_relevance_in << '\n'
      << "# bias_trapped," << l.bias_trapped << '\n'
      << "# gate_trapped," << l.gate_trapped << '\n'
      << "# stabilizer_absorbed," << l.stabilizer_absorbed << '\n'
      << "# input_total," << l.input_total << '\n';
  return out.str();
}

std::string relevance_to_json(const RelevanceTrace& rt) {
  nlohmann::json j;
  j["method"] = rt.method;
  j["per_step"] = rt.per_step;
  if (rt.per_dim) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t t = 0; t < rt.per_dim->rows(); ++t) {
      auto r = rt.per_dim->row(t);
      rows.push_back(std::vector<double>(r.begin(), r.end()));
    }
    j["per_dim"] = std::move(rows);
  }
  const Ledger& l = rt.ledger;
  j["ledger"] = {{"output_relevance_in", l.output_relevance_in},
                 {"bias_trapped", l.bias_trapped},
                 {"gate_trapped", l.gate_trapped},
                 {"stabilizer_absorbed", l.stabilizer_absorbed},
                 {"input_total", l.input_total}};
  return j.dump(1);
}

}  // namespace lstmlrp
