#include <fstream>
#include <sstream>

#include "json.hpp"
#include "lstmlrp/dataset.hpp"
#include "lstmlrp/errors.hpp"

namespace lstmlrp {

using nlohmann::json;

std::string_view to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "?";
}

namespace {

Split split_from_string(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "val") return Split::val;
  if (s == "test") return Split::test;
  throw ParseError("dataset: unknown split '" + s + "'");
}

json meta_to_json(const ExampleMeta& meta) {
  if (const auto* m = std::get_if<ArithmeticMeta>(&meta)) {
    return {{"a", m->a}, {"b", m->b}, {"n_a", m->n_a}, {"n_b", m->n_b}};
  }
  if (const auto* m = std::get_if<EpisodeMeta>(&meta)) return {{"return", m->episode_return}};
  if (const auto* m = std::get_if<ClassMeta>(&meta)) {
    return {{"tokens", m->tokens}, {"key_positions", m->key_positions}};
  }
  return json::object();
}

ExampleMeta meta_from_json(const json& j) {
  if (!j.is_object() || j.empty()) return std::monostate{};
  if (j.contains("a")) {
    return ArithmeticMeta{j.at("a").get<std::size_t>(), j.at("b").get<std::size_t>(),
                          j.at("n_a").get<double>(), j.at("n_b").get<double>()};
  }
  if (j.contains("return")) return EpisodeMeta{j.at("return").get<int>()};
  if (j.contains("tokens")) {
    return ClassMeta{j.at("tokens").get<std::vector<int>>(),
                     j.at("key_positions").get<std::vector<std::size_t>>()};
  }
  return std::monostate{};
}

}  // namespace

void Dataset::validate() const {
  if (items.empty()) throw ConfigError("dataset split '" + std::string(to_string(split)) + "' is empty");
  const std::size_t k = items.front().target.size();
  for (const Example& ex : items) {
    if (ex.target.size() != k) throw ConfigError("dataset targets must share one dimension");
  }
}

std::string dataset_to_jsonl(const Dataset& data) {
  std::ostringstream out;
  out << json{{"format_version", kDatasetFormatVersion}, {"split", to_string(data.split)}}.dump()
      << '\n';
  for (const Example& ex : data.items) {
    json rec;
    json rows = json::array();
    for (std::size_t t = 0; t < ex.input.length(); ++t) {
      auto r = ex.input.row(t);
      rows.push_back(std::vector<double>(r.begin(), r.end()));
    }
    rec["sequence"] = std::move(rows);
    rec["target"] = ex.target;
    if (ex.label) rec["label"] = *ex.label;
    rec["meta"] = meta_to_json(ex.meta);
    out << rec.dump() << '\n';
  }
  return out.str();
}

Dataset dataset_from_jsonl(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  Dataset data;
  bool header = false;
  std::size_t lineno = 0;
  try {
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      const json j = json::parse(line);
      if (!header) {
        if (!j.contains("format_version")) throw MissingField("dataset: missing header line");
        if (j.at("format_version").get<int>() != kDatasetFormatVersion) {
          throw VersionMismatch("dataset: format_version " + j.at("format_version").dump() +
                                ", expected " + std::to_string(kDatasetFormatVersion));
        }
        data.split = split_from_string(j.value("split", std::string("train")));
        header = true;
        continue;
      }
      if (!j.contains("sequence") || !j.contains("target")) {
        throw MissingField("dataset line " + std::to_string(lineno) + ": needs sequence and target");
      }
      std::vector<Vec> rows = j.at("sequence").get<std::vector<Vec>>();
      Example ex{Sequence(rows), j.at("target").get<Vec>(), std::nullopt,
                 meta_from_json(j.value("meta", json::object()))};
      if (j.contains("label")) ex.label = j.at("label").get<int>();
      data.items.push_back(std::move(ex));
    }
  } catch (const json::exception& e) {
    throw ParseError("dataset line " + std::to_string(lineno) + ": " + e.what());
  } catch (const ShapeError& e) {
    throw DimensionError("dataset line " + std::to_string(lineno) + ": " + e.what());
  }
  if (!header) throw ParseError("dataset: empty document");
  return data;
}

void save_dataset(const std::string& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw FileError("cannot open '" + path + "' for writing");
  out << dataset_to_jsonl(data);
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FileError("cannot open dataset file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return dataset_from_jsonl(buf.str());
}

}  // namespace lstmlrp
