#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "lstmlrp/dtd.hpp"
#include "lstmlrp/errors.hpp"
#include "lstmlrp/experiments.hpp"
#include "lstmlrp/explainers.hpp"
#include "lstmlrp/lrp.hpp"
#include "lstmlrp/tasks.hpp"
#include "lstmlrp/train.hpp"

namespace fs = std::filesystem;
using namespace lstmlrp;

namespace {

constexpr const char* kToolVersion = "1.0.0";
constexpr const char* kOutEnv = "LSTMLRP_OUT";

enum Exit { kOk = 0, kUsage = 2, kConfig = 3, kMissingFile = 4, kRuntime = 5 };

std::string one_line(std::string s) {
  for (char& c : s) {
    if (c == '\n' || c == '\r') c = ' ';
    if (c == '"') c = '\'';
  }
  return s;
}

int fail(const char* kind, int code, const std::string& message) {
  std::cerr << "error code=" << code << " kind=" << kind << " message=\"" << one_line(message)
            << "\"\n";
  return code;
}

struct Globals {
  std::uint64_t seed = 1;
  std::string out;
  std::size_t threads = 1;
};

std::string default_out() {
  const char* env = std::getenv(kOutEnv);
  return env && *env ? env : "lstmlrp_out";
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw FileError("cannot write " + path.string());
  f << text;
  if (!f) throw FileError("failed writing " + path.string());
}

std::string versions_stamp() {
  std::ostringstream s;
  s << "lstmlrp " << kToolVersion << '\n'
    << "model_format " << kModelFormatVersion << '\n'
    << "dataset_format " << kDatasetFormatVersion << '\n'
    << "cli11 " << CLI11_VERSION << '\n'
    << "nlohmann_json " << NLOHMANN_JSON_VERSION_MAJOR << '.' << NLOHMANN_JSON_VERSION_MINOR << '.'
    << NLOHMANN_JSON_VERSION_PATCH << '\n'
#if defined(__clang__)
    << "compiler clang " << __clang_major__ << '.' << __clang_minor__ << '\n';
#elif defined(__GNUC__)
    << "compiler gcc " << __GNUC__ << '.' << __GNUC_MINOR__ << '\n';
#else
    << "compiler unknown\n";
#endif
  return s.str();
}

/// Creates the output directory and writes the config echo and versions stamp.
fs::path prepare_out(const CLI::App& root, const Globals& g) {
  const fs::path dir(g.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw FileError("cannot create output directory " + dir.string() + ": " + ec.message());
  write_text(dir / "config.ini", root.config_to_str(true, false));
  write_text(dir / "versions.txt", versions_stamp());
  return dir;
}

void require_file(const std::string& path) {
  if (!fs::exists(path)) throw FileError("missing input file " + path);
}

LossKind loss_from_string(const std::string& s) {
  if (s == "mse") return LossKind::mse;
  if (s == "ce") return LossKind::softmax_cross_entropy;
  throw ConfigError("unknown loss '" + s + "'");
}

const std::vector<std::string> kRules{"all", "prop", "abs", "half"};
const std::vector<std::string> kMethods{"lrp", "gradient", "gradient_x_input", "occlusion",
                                        "occlusion_p"};

// ---------------------------------------------------------------------------

struct GenOpts {
  std::string task;
  std::optional<std::size_t> train_count, val_count, test_count;
  std::size_t episode_length = 20;
  std::string moneybag = "state";
};

void run_gen(const CLI::App& root, const Globals& g, const GenOpts& o) {
  auto counts = [&](std::size_t tr, std::size_t va, std::size_t te) {
    return std::array<std::size_t, 3>{o.train_count.value_or(tr), o.val_count.value_or(va),
                                      o.test_count.value_or(te)};
  };
  DatasetSplits splits;
  if (o.task == "addition" || o.task == "subtraction") {
    ArithmeticSpec spec;
    spec.mode = arithmetic_mode_from_string(o.task);
    spec.seed = g.seed;
    const auto c = counts(spec.train.count, spec.val.count, spec.test.count);
    spec.train.count = c[0];
    spec.val.count = c[1];
    spec.test.count = c[2];
    splits = gen_arithmetic(spec);
  } else if (o.task == "grid") {
    RedistributionConfig cfg;
    cfg.seed = g.seed;
    cfg.grid.episode_length = o.episode_length;
    cfg.grid.moneybag_event = o.moneybag == "event";
    const auto c = counts(cfg.train_episodes, cfg.val_episodes, cfg.test_episodes);
    cfg.train_episodes = c[0];
    cfg.val_episodes = c[1];
    cfg.test_episodes = c[2];
    splits = grid_datasets(cfg);
  } else {
    SelectivityCorpusSpec spec;
    spec.seed = g.seed;
    const auto c = counts(spec.train_count, spec.val_count, spec.test_count);
    spec.train_count = c[0];
    spec.val_count = c[1];
    spec.test_count = c[2];
    splits = gen_selectivity_corpus(spec).splits;
  }
  const fs::path dir = prepare_out(root, g);
  save_dataset((dir / "train.jsonl").string(), splits.train);
  save_dataset((dir / "val.jsonl").string(), splits.val);
  save_dataset((dir / "test.jsonl").string(), splits.test);
  std::cout << "wrote " << splits.train.size() << '/' << splits.val.size() << '/'
            << splits.test.size() << " items to " << dir.string() << '\n';
}

struct TrainOpts {
  std::string train, val;
  std::string variant = "standard";
  std::size_t hidden = 1;
  double a_g = 2.0, a_h = 1.0;
  bool head_bias = false;
  std::size_t epochs = 100;
  double lr = 5e-3;
  std::size_t batch = 64;
  std::string loss = "mse";
  double threshold = 1e-4;
};

void run_train(const CLI::App& root, const Globals& g, const TrainOpts& o) {
  require_file(o.train);
  require_file(o.val);
  const Dataset train = load_dataset(o.train);
  const Dataset val = load_dataset(o.val);
  train.validate();
  val.validate();
  const VariantSpec variant = VariantSpec::make(architecture_from_string(o.variant), o.a_g, o.a_h);
  TrainConfig tc;
  tc.max_epochs = o.epochs;
  tc.learning_rate = o.lr;
  tc.batch_size = o.batch;
  tc.loss = loss_from_string(o.loss);
  tc.success_threshold = o.threshold;
  tc.seed = derive_seed(g.seed, 1);
  tc.validate();
  std::mt19937_64 rng(derive_seed(g.seed, 0));
  LSTMParams init = initialize_params(variant, train.items.front().input.dim(), o.hidden,
                                      train.items.front().target.size(), o.head_bias, rng);
  const TrainResult r = train_model(std::move(init), variant, train, val, tc);
  const fs::path dir = prepare_out(root, g);
  save_model((dir / "model.json").string(), r.params, variant);
  write_text(dir / "history.csv", history_csv(r.history));
  std::cout << "best_val_loss=" << r.best_val_loss << " best_epoch=" << r.best_epoch
            << " success=" << (r.success ? 1 : 0) << '\n';
}

struct ExplainOpts {
  std::string model, data;
  std::size_t index = 0;
  std::string method = "lrp";
  std::string rule = "all";
  double eps = 0.001;
  std::optional<double> eps_product;
  std::optional<std::size_t> target;
};

ExplainerKind kind_of(const std::string& method, const std::string& rule) {
  return ExplainerKind::parse(method == "lrp" ? "lrp-" + rule : method);
}

const Example& pick(const Dataset& data, std::size_t index) {
  if (index >= data.size()) {
    throw ConfigError("item index " + std::to_string(index) + " out of range for " +
                      std::to_string(data.size()) + " items");
  }
  return data.items[index];
}

void run_explain(const CLI::App& root, const Globals& g, const ExplainOpts& o) {
  require_file(o.model);
  require_file(o.data);
  const Model m = load_model(o.model);
  const Dataset data = load_dataset(o.data);
  const Example& ex = pick(data, o.index);
  const std::size_t target = o.target.value_or(ex.label ? static_cast<std::size_t>(*ex.label) : 0);
  const RelevanceTrace rt = explain(kind_of(o.method, o.rule), ex.input, m.params, m.variant,
                                    target, ExplainOptions{o.eps, o.eps_product});
  const fs::path dir = prepare_out(root, g);
  write_text(dir / "relevance.csv", relevance_to_csv(rt));
  write_text(dir / "relevance.json", relevance_to_json(rt));
  std::cout << "method=" << rt.method << " steps=" << rt.length()
            << " input_total=" << rt.ledger.input_total << '\n';
}

struct AuditOpts {
  std::string model, data;
  std::string rule = "all";
  double eps = 0.001;
  std::optional<double> eps_product;
};

void run_audit(const CLI::App& root, const Globals& g, const AuditOpts& o) {
  require_file(o.model);
  require_file(o.data);
  const Model m = load_model(o.model);
  const Dataset data = load_dataset(o.data);
  LRPConfig cfg = LRPConfig::defaults(product_rule_from_string(o.rule));
  cfg.epsilon_linear = o.eps;
  if (o.eps_product) cfg.rule.epsilon = *o.eps_product;
  std::ostringstream csv;
  csv.precision(17);
  csv << "item,output_relevance_in,input_total,bias_trapped,gate_trapped,stabilizer_absorbed,"
         "residual\n";
  double worst = 0.0;
  for (std::size_t n = 0; n < data.size(); ++n) {
    const Example& ex = data.items[n];
    cfg.target = ex.label ? static_cast<std::size_t>(*ex.label) : 0;
    const AuditSummary s =
        conservation_audit(lrp_explain(forward_sequence(m.params, m.variant, ex.input), m.params,
                                       m.variant, cfg));
    const Ledger& l = s.ledger;
    csv << n << ',' << l.output_relevance_in << ',' << l.input_total << ',' << l.bias_trapped
        << ',' << l.gate_trapped << ',' << l.stabilizer_absorbed << ',' << s.residual << '\n';
    worst = std::max(worst, std::abs(s.residual));
  }
  const fs::path dir = prepare_out(root, g);
  write_text(dir / "audit.csv", csv.str());
  std::cout << "items=" << data.size() << " max_abs_residual=" << worst << '\n';
}

struct DtdOpts {
  std::string signal = "tanh";
  double c_p = 1.0;
  double g_min = -4.0, g_max = 4.0, s_min = -4.0, s_max = 4.0;
  std::size_t g_n = 41, s_n = 41;
};

void run_dtd(const CLI::App& root, const Globals& g, const DtdOpts& o) {
  const Activation signal(activation_kind_from_string(o.signal));
  const auto rows = dtd_grid(signal, o.c_p, o.g_min, o.g_max, o.g_n, o.s_min, o.s_max, o.s_n);
  const fs::path dir = prepare_out(root, g);
  write_text(dir / "dtd_grid.csv", dtd_grid_csv(rows));
  double worst = 0.0;
  for (const auto& r : rows) worst = std::max(worst, std::abs(r.remainder));
  std::cout << "points=" << rows.size() << " max_abs_remainder=" << worst << '\n';
}

struct FidelityOpts {
  std::string task = "addition";
  std::size_t models = 50;
  std::size_t max_attempts = 200;
  std::size_t epochs = 200;
  std::size_t hidden = 1;
  double threshold = 1e-4;
  double eps = 0.0;
  double eps_product = 0.0;
  std::optional<std::size_t> train_count, val_count, test_count;
};

void run_fidelity_cmd(const CLI::App& root, const Globals& g, const FidelityOpts& o) {
  FidelityConfig cfg = FidelityConfig::defaults();
  cfg.task.mode = arithmetic_mode_from_string(o.task);
  cfg.task.seed = g.seed;
  cfg.pool.model_count = o.models;
  cfg.pool.max_attempts = o.max_attempts;
  cfg.pool.train.max_epochs = o.epochs;
  cfg.pool.hidden = o.hidden;
  cfg.pool.train.success_threshold = o.threshold;
  cfg.pool.seed = g.seed;
  cfg.pool.threads = g.threads;
  cfg.explain = ExplainOptions{o.eps, o.eps_product};
  if (o.train_count) cfg.task.train.count = *o.train_count;
  if (o.val_count) cfg.task.val.count = *o.val_count;
  if (o.test_count) cfg.task.test.count = *o.test_count;
  const FidelityReport r = run_fidelity(cfg);
  const fs::path dir = prepare_out(root, g);
  write_text(dir / "fidelity.json", fidelity_to_json(r));
  write_text(dir / "fidelity.csv", fidelity_to_csv(r));
  std::cout << fidelity_to_csv(r);
}

struct CellsOpts {
  std::string task = "addition";
  std::vector<std::size_t> cells{1, 2, 4};
  std::size_t models = 5;
  std::size_t epochs = 200;
};

void run_cells(const CLI::App& root, const Globals& g, const CellsOpts& o) {
  std::ostringstream csv;
  csv << "cells,models,attempts,rho_a,rho_b,mass\n";
  for (std::size_t h : o.cells) {
    FidelityConfig cfg = FidelityConfig::defaults();
    cfg.task.mode = arithmetic_mode_from_string(o.task);
    cfg.task.seed = g.seed;
    cfg.explainers = {ExplainerKind::lrp_rule(ProductRuleKind::all)};
    cfg.pool.model_count = o.models;
    cfg.pool.max_attempts = o.models * 4;
    cfg.pool.train.max_epochs = o.epochs;
    cfg.pool.hidden = h;
    cfg.pool.seed = g.seed;
    cfg.pool.threads = g.threads;
    const FidelityReport r = run_fidelity(cfg);
    const FidelityRow& row = r.rows.front();
    csv << h << ',' << r.model_count << ',' << r.attempts << ',' << percent3(row.rho_a.mean) << ','
        << percent3(row.rho_b.mean) << ',' << percent3(row.mass.mean) << '\n';
  }
  const fs::path dir = prepare_out(root, g);
  write_text(dir / "cells.csv", csv.str());
  std::cout << csv.str();
}

struct SelectivityOpts {
  std::size_t hidden = 60;
  std::size_t epochs = 30;
  std::size_t random_runs = 10;
  std::size_t max_deletions = 5;
  std::size_t min_length = 10;
};

void run_selectivity_cmd(const CLI::App& root, const Globals& g, const SelectivityOpts& o) {
  SelectivityConfig cfg = SelectivityConfig::defaults();
  cfg.corpus.seed = g.seed;
  cfg.seed = g.seed;
  cfg.threads = g.threads;
  cfg.hidden = o.hidden;
  cfg.train.max_epochs = o.epochs;
  cfg.random_runs = o.random_runs;
  cfg.max_deletions = o.max_deletions;
  cfg.min_length = o.min_length;
  const SelectivityCorpus corpus = gen_selectivity_corpus(cfg.corpus);
  const TrainResult tr = train_classifier(corpus, cfg);
  const SelectivityReport r = run_selectivity(corpus, tr.params, selectivity_variant(), cfg);
  const fs::path dir = prepare_out(root, g);
  save_model((dir / "classifier.json").string(), tr.params, selectivity_variant());
  write_text(dir / "selectivity.json", selectivity_to_json(r));
  write_text(dir / "selectivity.csv", selectivity_to_csv(r));
  std::cout << "test_accuracy=" << r.test_accuracy << " correct=" << r.correct_items
            << " incorrect=" << r.incorrect_items << '\n';
}

struct RedistributeOpts {
  std::size_t hidden = 2;
  std::size_t train_episodes = 4000, val_episodes = 500, test_episodes = 200;
  std::size_t epochs = 300;
  double threshold = 0.05;
  std::string moneybag = "event";
};

void run_redistribute_cmd(const CLI::App& root, const Globals& g, const RedistributeOpts& o) {
  RedistributionConfig cfg = RedistributionConfig::defaults();
  cfg.seed = g.seed;
  cfg.threads = g.threads;
  cfg.hidden = o.hidden;
  cfg.train_episodes = o.train_episodes;
  cfg.val_episodes = o.val_episodes;
  cfg.test_episodes = o.test_episodes;
  cfg.train.max_epochs = o.epochs;
  cfg.threshold = o.threshold;
  cfg.grid.moneybag_event = o.moneybag == "event";
  const DatasetSplits data = grid_datasets(cfg);
  const PredictorFit fit = train_return_predictor(data, cfg);
  const VariantSpec variant = redistribution_variant(cfg);
  const RedistributionReport r = run_redistribution(data.test, fit.result.params, variant, cfg);
  const fs::path dir = prepare_out(root, g);
  save_model((dir / "return_model.json").string(), fit.result.params, variant);
  write_text(dir / "redistribution.json", redistribution_to_json(r));
  write_text(dir / "redistribution.csv", redistribution_to_csv(r));
  std::cout << "test_mse=" << r.test_mse << '\n';
  for (const RuleSummary& s : r.summaries) {
    std::cout << "rule=" << s.rule << " moneybag_share=" << s.mean_moneybag_share
              << " rewarded_share=" << s.mean_rewarded_share
              << " detection_rate=" << s.detection_rate
              << " zero_return_ratio=" << s.zero_return_ratio << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LSTM relevance propagation toolkit"};
  app.set_version_flag("--version", kToolVersion);
  app.set_config("--config", "", "TOML/INI config file; flags override it");
  app.require_subcommand(1);

  Globals g;
  g.out = default_out();
  g.threads = default_threads();
  app.add_option("--seed", g.seed, "Base seed for every random stream")->capture_default_str();
  app.add_option("--out", g.out, std::string("Output directory (default from ") + kOutEnv + ")")
      ->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads for experiments")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  GenOpts gen;
  auto* gen_cmd = app.add_subcommand("gen", "Generate a dataset (train/val/test JSONL)");
  gen_cmd->add_option("--task", gen.task, "Task to generate")
      ->required()
      ->check(CLI::IsMember({"addition", "subtraction", "grid", "selectivity"}));
  gen_cmd->add_option("--train-count", gen.train_count, "Training items");
  gen_cmd->add_option("--val-count", gen.val_count, "Validation items");
  gen_cmd->add_option("--test-count", gen.test_count, "Test items");
  gen_cmd->add_option("--episode-length", gen.episode_length, "Grid episode length")
      ->capture_default_str();
  gen_cmd->add_option("--moneybag-encoding", gen.moneybag, "Grid moneybag feature")
      ->check(CLI::IsMember({"state", "event"}))
      ->capture_default_str();

  TrainOpts tr;
  auto* train_cmd = app.add_subcommand("train", "Train a model on JSONL datasets");
  train_cmd->add_option("--train", tr.train, "Training JSONL")->required();
  train_cmd->add_option("--val", tr.val, "Validation JSONL")->required();
  train_cmd->add_option("--variant", tr.variant, "Cell architecture")
      ->check(CLI::IsMember({"standard", "nondecreasing", "markov", "gateless"}))
      ->capture_default_str();
  train_cmd->add_option("--hidden", tr.hidden, "Memory cells")->capture_default_str();
  train_cmd->add_option("--a-g", tr.a_g, "Cell input gain")->capture_default_str();
  train_cmd->add_option("--a-h", tr.a_h, "Cell state gain")->capture_default_str();
  train_cmd->add_flag("--head-bias", tr.head_bias, "Give the output layer a bias");
  train_cmd->add_option("--epochs", tr.epochs, "Maximum epochs")->capture_default_str();
  train_cmd->add_option("--lr", tr.lr, "Learning rate")->capture_default_str();
  train_cmd->add_option("--batch", tr.batch, "Minibatch size")->capture_default_str();
  train_cmd->add_option("--loss", tr.loss, "mse or ce (softmax cross-entropy)")
      ->check(CLI::IsMember({"mse", "ce"}))
      ->capture_default_str();
  train_cmd->add_option("--threshold", tr.threshold, "Validation loss counted as success")
      ->capture_default_str();

  ExplainOpts ex;
  auto* explain_cmd = app.add_subcommand("explain", "Relevance for one sequence of a dataset");
  explain_cmd->add_option("--model", ex.model, "Model JSON")->required();
  explain_cmd->add_option("--data", ex.data, "Dataset JSONL")->required();
  explain_cmd->add_option("--index", ex.index, "Item index in the dataset")->capture_default_str();
  explain_cmd->add_option("--method", ex.method, "Explainer")
      ->check(CLI::IsMember(kMethods))
      ->capture_default_str();
  explain_cmd->add_option("--rule", ex.rule, "LRP product rule")
      ->check(CLI::IsMember(kRules))
      ->capture_default_str();
  explain_cmd->add_option("--eps", ex.eps, "Linear-layer stabilizer")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  explain_cmd->add_option("--eps-product", ex.eps_product,
                          "Product-rule stabilizer (default 0.2 for prop, else 0.001)")
      ->check(CLI::NonNegativeNumber);
  explain_cmd->add_option("--target", ex.target, "Output to explain (default: label or 0)");

  DtdOpts dtd;
  auto* dtd_cmd = app.add_subcommand("dtd-grid", "Taylor terms of the gated relevance model");
  dtd_cmd->add_option("--signal", dtd.signal, "Signal activation")
      ->check(CLI::IsMember({"tanh", "identity", "relu", "sigmoid"}))
      ->capture_default_str();
  dtd_cmd->add_option("--c-p", dtd.c_p, "Proportionality constant")->capture_default_str();
  dtd_cmd->add_option("--g-min", dtd.g_min)->capture_default_str();
  dtd_cmd->add_option("--g-max", dtd.g_max)->capture_default_str();
  dtd_cmd->add_option("--g-n", dtd.g_n)->check(CLI::PositiveNumber)->capture_default_str();
  dtd_cmd->add_option("--s-min", dtd.s_min)->capture_default_str();
  dtd_cmd->add_option("--s-max", dtd.s_max)->capture_default_str();
  dtd_cmd->add_option("--s-n", dtd.s_n)->check(CLI::PositiveNumber)->capture_default_str();

  AuditOpts au;
  auto* audit_cmd = app.add_subcommand("audit", "Conservation ledger for every dataset item");
  audit_cmd->add_option("--model", au.model, "Model JSON")->required();
  audit_cmd->add_option("--data", au.data, "Dataset JSONL")->required();
  audit_cmd->add_option("--rule", au.rule, "LRP product rule")
      ->check(CLI::IsMember(kRules))
      ->capture_default_str();
  audit_cmd->add_option("--eps", au.eps, "Linear-layer stabilizer")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  audit_cmd->add_option("--eps-product", au.eps_product, "Product-rule stabilizer")
      ->check(CLI::NonNegativeNumber);

  auto* exp_cmd = app.add_subcommand("experiment", "Evaluation protocols");
  exp_cmd->require_subcommand(1);

  FidelityOpts fi;
  auto* fid_cmd = exp_cmd->add_subcommand("fidelity", "Correlation with the arithmetic ground truth");
  fid_cmd->add_option("--task", fi.task)
      ->check(CLI::IsMember({"addition", "subtraction"}))
      ->capture_default_str();
  fid_cmd->add_option("--models", fi.models, "Converged models to evaluate")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  fid_cmd->add_option("--max-attempts", fi.max_attempts, "Training attempts cap")
      ->capture_default_str();
  fid_cmd->add_option("--epochs", fi.epochs)->capture_default_str();
  fid_cmd->add_option("--hidden", fi.hidden, "Memory cells per model")->capture_default_str();
  fid_cmd->add_option("--threshold", fi.threshold, "Validation MSE a model must reach")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  fid_cmd->add_option("--eps", fi.eps)->check(CLI::NonNegativeNumber)->capture_default_str();
  fid_cmd->add_option("--eps-product", fi.eps_product)
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  fid_cmd->add_option("--train-count", fi.train_count, "Training items");
  fid_cmd->add_option("--val-count", fi.val_count, "Validation items");
  fid_cmd->add_option("--test-count", fi.test_count, "Test items");

  CellsOpts ce;
  auto* cells_cmd =
      exp_cmd->add_subcommand("cells", "Exploratory LRP-all fidelity sweep over memory cells");
  cells_cmd->add_option("--task", ce.task)
      ->check(CLI::IsMember({"addition", "subtraction"}))
      ->capture_default_str();
  cells_cmd->add_option("--cells", ce.cells, "Memory cell counts")->capture_default_str();
  cells_cmd->add_option("--models", ce.models)->check(CLI::PositiveNumber)->capture_default_str();
  cells_cmd->add_option("--epochs", ce.epochs)->capture_default_str();

  SelectivityOpts se;
  auto* sel_cmd = exp_cmd->add_subcommand("selectivity", "Deletion curves on the synthetic corpus");
  sel_cmd->add_option("--hidden", se.hidden)->capture_default_str();
  sel_cmd->add_option("--epochs", se.epochs)->capture_default_str();
  sel_cmd->add_option("--random-runs", se.random_runs)
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sel_cmd->add_option("--max-deletions", se.max_deletions)->capture_default_str();
  sel_cmd->add_option("--min-length", se.min_length)->capture_default_str();

  RedistributeOpts rd;
  auto* red_cmd = exp_cmd->add_subcommand("redistribute", "Reward redistribution on the grid world");
  red_cmd->add_option("--hidden", rd.hidden)->capture_default_str();
  red_cmd->add_option("--train-episodes", rd.train_episodes)->capture_default_str();
  red_cmd->add_option("--val-episodes", rd.val_episodes)->capture_default_str();
  red_cmd->add_option("--test-episodes", rd.test_episodes)->capture_default_str();
  red_cmd->add_option("--epochs", rd.epochs)->capture_default_str();
  red_cmd->add_option("--threshold", rd.threshold, "Detection share of total |R|")
      ->capture_default_str();
  red_cmd->add_option("--moneybag-encoding", rd.moneybag)
      ->check(CLI::IsMember({"state", "event"}))
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::FileError& e) {
    return fail("file", kMissingFile, e.what());
  } catch (const CLI::ConfigError& e) {
    return fail("config", kConfig, e.what());
  } catch (const CLI::ValidationError& e) {
    return fail("config", kConfig, e.what());
  } catch (const CLI::ConversionError& e) {
    return fail("config", kConfig, e.what());
  } catch (const CLI::ParseError& e) {
    return fail("usage", kUsage, e.what());
  }

  try {
    if (*gen_cmd) run_gen(app, g, gen);
    else if (*train_cmd) run_train(app, g, tr);
    else if (*explain_cmd) run_explain(app, g, ex);
    else if (*dtd_cmd) run_dtd(app, g, dtd);
    else if (*audit_cmd) run_audit(app, g, au);
    else if (*fid_cmd) run_fidelity_cmd(app, g, fi);
    else if (*cells_cmd) run_cells(app, g, ce);
    else if (*sel_cmd) run_selectivity_cmd(app, g, se);
    else if (*red_cmd) run_redistribute_cmd(app, g, rd);
  } catch (const FileError& e) {
    return fail("file", kMissingFile, e.what());
  } catch (const ConfigError& e) {
    return fail("config", kConfig, e.what());
  } catch (const ParseError& e) {
    return fail("config", kConfig, e.what());
  } catch (const NoRootError& e) {
    return fail("config", kConfig, e.what());
  } catch (const std::exception& e) {
    return fail("runtime", kRuntime, e.what());
  }
  return kOk;
}
