#include "lstmlrp/experiments.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "json.hpp"
#include "lstmlrp/errors.hpp"

namespace lstmlrp {

using nlohmann::json;

std::size_t default_threads() {
  const unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : n;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  // splitmix64 over a combination of both words
  std::uint64_t z = base * 0x9e3779b97f4a7c15ULL + index + 0x632be59bd9b4e019ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::string percent3(double fraction) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", fraction * 100.0);
  return buf;
}

namespace {

json mean_std_json(const MeanStd& m) {
  return {{"mean", m.mean}, {"std", m.std}, {"count", m.count}};
}

json percent_json(const MeanStd& m) {
  return {{"mean_percent", percent3(m.mean)}, {"std_percent", percent3(m.std)}, {"count", m.count}};
}

struct Attempt {
  std::optional<TrainResult> result;
};

}  // namespace

ModelPool train_model_pool(const DatasetSplits& data, const ModelPoolConfig& cfg) {
  data.train.validate();
  data.val.validate();
  if (cfg.model_count == 0) throw ConfigError("model count must be positive");
  if (cfg.max_attempts < cfg.model_count) {
    throw ConfigError("retry cap must be at least the model count");
  }
  const std::size_t input_dim = data.train.items.front().input.dim();
  const std::size_t output_dim = data.train.items.front().target.size();
  const std::size_t wave = std::max<std::size_t>(1, cfg.threads);

  ModelPool pool;
  while (pool.models.size() < cfg.model_count && pool.attempts < cfg.max_attempts) {
    const std::size_t first = pool.attempts;
    const std::size_t count = std::min(wave, cfg.max_attempts - first);
    std::vector<Attempt> results(count);
    parallel_for(count, cfg.threads, [&](std::size_t k) {
      const std::uint64_t seed = derive_seed(cfg.seed, first + k);
      std::mt19937_64 rng(seed);
      LSTMParams init =
          initialize_params(cfg.variant, input_dim, cfg.hidden, output_dim, cfg.head_bias, rng);
      TrainConfig tc = cfg.train;
      tc.seed = derive_seed(seed, 1);
      try {
        results[k].result = train_model(std::move(init), cfg.variant, data.train, data.val, tc);
      } catch (const TrainingError&) {
      }
    });
    pool.attempts += count;
    for (std::size_t k = 0; k < count && pool.models.size() < cfg.model_count; ++k) {
      if (results[k].result && results[k].result->success) {
        pool.models.push_back(std::move(results[k].result->params));
        pool.attempt_index.push_back(first + k);
        pool.best_val_loss.push_back(results[k].result->best_val_loss);
      }
    }
  }
  if (pool.models.size() < cfg.model_count) {
    throw ExperimentError("only " + std::to_string(pool.models.size()) + " of " +
                          std::to_string(cfg.model_count) + " models converged after " +
                          std::to_string(pool.attempts) + " attempts");
  }
  pool.attempts = pool.attempt_index.back() + 1;
  return pool;
}

// ---------------------------------------------------------------------------
// Fidelity
// ---------------------------------------------------------------------------

std::vector<ExplainerKind> default_fidelity_explainers() {
  using M = ExplainerKind::Method;
  return {{M::gradient_x_input},
          {M::occlusion_f_diff},
          ExplainerKind::lrp_rule(ProductRuleKind::prop),
          ExplainerKind::lrp_rule(ProductRuleKind::abs),
          ExplainerKind::lrp_rule(ProductRuleKind::half),
          ExplainerKind::lrp_rule(ProductRuleKind::all)};
}

FidelityConfig FidelityConfig::defaults() {
  FidelityConfig cfg;
  cfg.pool.train.max_epochs = 200;
  return cfg;
}

const FidelityRow* FidelityReport::find(std::string_view explainer) const {
  for (const FidelityRow& r : rows) {
    if (r.explainer == explainer) return &r;
  }
  return nullptr;
}

namespace {

struct ModelFidelity {
  std::vector<std::optional<double>> rho_a, rho_b;
  std::vector<double> mass;
  std::vector<std::size_t> skipped;
  double test_mse = 0.0;
};

}  // namespace

FidelityReport evaluate_fidelity(const FidelityConfig& cfg, const DatasetSplits& data,
                                 const ModelPool& pool) {
  if (cfg.explainers.empty()) throw ConfigError("fidelity needs at least one explainer");
  const Dataset& test = data.test;
  for (const Example& ex : test.items) {
    if (!std::holds_alternative<ArithmeticMeta>(ex.meta)) {
      throw ConfigError("fidelity needs arithmetic items with known positions");
    }
  }
  const std::size_t n_exp = cfg.explainers.size();
  std::vector<ModelFidelity> per_model(pool.models.size());

  parallel_for(pool.models.size(), cfg.pool.threads, [&](std::size_t m) {
    const LSTMParams& params = pool.models[m];
    std::vector<PearsonAccumulator> acc_a(n_exp), acc_b(n_exp);
    std::vector<double> mass_sum(n_exp, 0.0);
    std::vector<std::size_t> mass_n(n_exp, 0), skipped(n_exp, 0);
    double sq = 0.0;
    for (const Example& ex : test.items) {
      const auto& meta = std::get<ArithmeticMeta>(ex.meta);
      const ActivationTrace trace = forward_sequence(params, cfg.pool.variant, ex.input);
      const double err = trace.prediction[0] - ex.target[0];
      sq += err * err;
      for (std::size_t e = 0; e < n_exp; ++e) {
        const RelevanceTrace rt =
            explain(cfg.explainers[e], trace, params, cfg.pool.variant, 0, cfg.explain);
        const double r_a = rt.per_step[meta.a];
        const double r_b = rt.per_step[meta.b];
        acc_a[e].add(meta.n_a, r_a);
        acc_b[e].add(meta.n_b, r_b);
        double total = 0.0;
        for (double r : rt.per_step) total += std::abs(r);
        if (total > 0.0) {
          mass_sum[e] += (std::abs(r_a) + std::abs(r_b)) / total;
          ++mass_n[e];
        } else {
          ++skipped[e];
        }
      }
    }
    ModelFidelity& out = per_model[m];
    out.test_mse = sq / static_cast<double>(test.size());
    for (std::size_t e = 0; e < n_exp; ++e) {
      out.rho_a.push_back(acc_a[e].value());
      out.rho_b.push_back(acc_b[e].value());
      out.mass.push_back(mass_n[e] ? mass_sum[e] / static_cast<double>(mass_n[e]) : 0.0);
      out.skipped.push_back(skipped[e]);
    }
  });

  FidelityReport report;
  report.task = std::string(to_string(cfg.task.mode));
  report.model_count = pool.models.size();
  report.attempts = pool.attempts;
  report.hidden = pool.models.empty() ? 0 : pool.models.front().hidden_size();
  report.test_items = test.size();
  std::vector<double> mses;
  for (const ModelFidelity& m : per_model) mses.push_back(m.test_mse);
  report.test_mse = mean_std(mses);
  for (std::size_t e = 0; e < n_exp; ++e) {
    FidelityRow row;
    row.explainer = cfg.explainers[e].name();
    std::vector<double> a, b, mass;
    for (const ModelFidelity& m : per_model) {
      if (m.rho_a[e] && m.rho_b[e]) {
        a.push_back(*m.rho_a[e]);
        b.push_back(*m.rho_b[e]);
      } else {
        ++row.undefined_rho;
      }
      mass.push_back(m.mass[e]);
      row.skipped_items += m.skipped[e];
    }
    row.rho_a = mean_std(a);
    row.rho_b = mean_std(b);
    row.mass = mean_std(mass);
    report.rows.push_back(std::move(row));
  }
  return report;
}

FidelityReport run_fidelity(const FidelityConfig& cfg) {
  const DatasetSplits data = gen_arithmetic(cfg.task);
  const ModelPool pool = train_model_pool(data, cfg.pool);
  return evaluate_fidelity(cfg, data, pool);
}

std::string fidelity_to_json(const FidelityReport& r) {
  json j;
  j["task"] = r.task;
  j["model_count"] = r.model_count;
  j["attempts"] = r.attempts;
  j["hidden"] = r.hidden;
  j["test_items"] = r.test_items;
  j["test_mse"] = mean_std_json(r.test_mse);
  json rows = json::array();
  for (const FidelityRow& row : r.rows) {
    rows.push_back({{"explainer", row.explainer},
                    {"rho_a", percent_json(row.rho_a)},
                    {"rho_b", percent_json(row.rho_b)},
                    {"mass", percent_json(row.mass)},
                    {"undefined_rho", row.undefined_rho},
                    {"skipped_items", row.skipped_items}});
  }
  j["explainers"] = std::move(rows);
  return j.dump(1);
}

std::string fidelity_to_csv(const FidelityReport& r) {
  std::ostringstream out;
  out << "explainer,statistic,mean_percent,std_percent\n";
  for (const FidelityRow& row : r.rows) {
    out << row.explainer << ",rho_a," << percent3(row.rho_a.mean) << ','
        << percent3(row.rho_a.std) << '\n';
    out << row.explainer << ",rho_b," << percent3(row.rho_b.mean) << ','
        << percent3(row.rho_b.std) << '\n';
    out << row.explainer << ",mass," << percent3(row.mass.mean) << ',' << percent3(row.mass.std)
        << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Selectivity
// ---------------------------------------------------------------------------

SelectivityConfig SelectivityConfig::defaults() {
  using M = ExplainerKind::Method;
  SelectivityConfig cfg;
  cfg.train.loss = LossKind::softmax_cross_entropy;
  cfg.train.max_epochs = 30;
  cfg.train.success_threshold = 10.0;
  cfg.train.stop_threshold = 1e-3;
  cfg.train.patience = 5;
  cfg.explainers = {ExplainerKind::lrp_rule(ProductRuleKind::all),
                    ExplainerKind::lrp_rule(ProductRuleKind::half),
                    {M::gradient_squared},
                    {M::gradient_x_input},
                    {M::occlusion_f_diff},
                    {M::occlusion_p_diff}};
  return cfg;
}

const SelectivityCurve* SelectivityReport::find(std::string_view explainer,
                                                std::string_view order) const {
  for (const SelectivityCurve& c : curves) {
    if (c.explainer == explainer && c.order == order) return &c;
  }
  return nullptr;
}

VariantSpec selectivity_variant() { return VariantSpec::standard(); }

TrainResult train_classifier(const SelectivityCorpus& corpus, const SelectivityConfig& cfg) {
  const VariantSpec variant = selectivity_variant();
  std::mt19937_64 rng(derive_seed(cfg.seed, 0));
  LSTMParams init = initialize_params(variant, cfg.corpus.embedding_dim, cfg.hidden,
                                      cfg.corpus.classes, true, rng, 0.1);
  TrainConfig tc = cfg.train;
  tc.seed = derive_seed(cfg.seed, 1);
  return train_model(std::move(init), variant, corpus.splits.train, corpus.splits.val, tc);
}

namespace {

bool predicts(const LSTMParams& params, const VariantSpec& variant, const Sequence& seq,
              int label) {
  const Vec out = predict(params, variant, seq);
  const auto best = std::max_element(out.begin(), out.end()) - out.begin();
  return best == label;
}

/// Correct-after-k flags for k = 0..max, deleting order[0..k).
std::vector<char> deletion_outcomes(const LSTMParams& params, const VariantSpec& variant,
                                    const Example& ex, const std::vector<std::size_t>& order,
                                    std::size_t max_deletions) {
  std::vector<char> out(max_deletions + 1, 0);
  out[0] = predicts(params, variant, ex.input, *ex.label);
  for (std::size_t k = 1; k <= max_deletions; ++k) {
    const std::span<const std::size_t> drop(order.data(), k);
    out[k] = predicts(params, variant, delete_timesteps(ex.input, drop), *ex.label);
  }
  return out;
}

std::vector<std::size_t> relevance_order(const Vec& r, bool decreasing) {
  std::vector<std::size_t> idx(r.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return decreasing ? r[a] > r[b] : r[a] < r[b];
  });
  return idx;
}

}  // namespace

SelectivityReport run_selectivity(const SelectivityCorpus& corpus, const LSTMParams& params,
                                  const VariantSpec& variant, const SelectivityConfig& cfg) {
  if (cfg.random_runs == 0) throw ConfigError("selectivity needs at least one random run");
  if (cfg.min_length <= cfg.max_deletions) {
    throw ConfigError("minimum length must exceed the number of deletions");
  }
  const Dataset& test = corpus.splits.test;
  for (const Example& ex : test.items) {
    if (!ex.label) throw ConfigError("selectivity needs labelled items");
  }
  SelectivityReport report;
  report.test_accuracy = accuracy(params, variant, test);

  std::vector<const Example*> eligible;
  for (const Example& ex : test.items) {
    if (ex.input.length() >= cfg.min_length) eligible.push_back(&ex);
  }
  report.eligible_items = eligible.size();
  std::vector<char> correct(eligible.size());
  parallel_for(eligible.size(), cfg.threads, [&](std::size_t n) {
    correct[n] = predicts(params, variant, eligible[n]->input, *eligible[n]->label);
  });

  const std::size_t n_exp = cfg.explainers.size();
  const std::size_t kmax = cfg.max_deletions;
  // outcomes[item][explainer][k]
  std::vector<std::vector<std::vector<char>>> outcomes(eligible.size());
  // random_out[item][run][k]
  std::vector<std::vector<std::vector<char>>> random_out(eligible.size());

  parallel_for(eligible.size(), cfg.threads, [&](std::size_t n) {
    const Example& ex = *eligible[n];
    const bool decreasing = correct[n] != 0;
    const std::size_t target = static_cast<std::size_t>(*ex.label);
    const ActivationTrace trace = forward_sequence(params, variant, ex.input);
    for (std::size_t e = 0; e < n_exp; ++e) {
      const RelevanceTrace rt = explain(cfg.explainers[e], trace, params, variant, target, cfg.explain);
      outcomes[n].push_back(
          deletion_outcomes(params, variant, ex, relevance_order(rt.per_step, decreasing), kmax));
    }
    for (std::size_t run = 0; run < cfg.random_runs; ++run) {
      std::mt19937_64 rng(derive_seed(derive_seed(cfg.seed, 1000 + run), n));
      std::vector<std::size_t> order(ex.input.length());
      std::iota(order.begin(), order.end(), 0);
      std::shuffle(order.begin(), order.end(), rng);
      random_out[n].push_back(deletion_outcomes(params, variant, ex, order, kmax));
    }
  });

  for (char c : correct) (c ? report.correct_items : report.incorrect_items)++;

  auto cohort_accuracy = [&](bool want_correct, auto&& flag) {
    std::vector<double> acc(kmax + 1, 0.0);
    std::size_t members = 0;
    for (std::size_t n = 0; n < eligible.size(); ++n) {
      if ((correct[n] != 0) != want_correct) continue;
      ++members;
      for (std::size_t k = 0; k <= kmax; ++k) acc[k] += flag(n, k);
    }
    for (double& a : acc) a = members ? a / static_cast<double>(members) : 0.0;
    return acc;
  };

  for (std::size_t e = 0; e < n_exp; ++e) {
    for (bool cohort : {true, false}) {
      SelectivityCurve curve;
      curve.explainer = cfg.explainers[e].name();
      curve.order = cohort ? "decreasing" : "increasing";
      curve.accuracy =
          cohort_accuracy(cohort, [&](std::size_t n, std::size_t k) { return outcomes[n][e][k]; });
      report.curves.push_back(std::move(curve));
    }
  }
  for (bool cohort : {true, false}) {
    RandomCurve rc;
    rc.cohort = cohort ? "correct" : "incorrect";
    std::vector<std::vector<double>> runs;
    for (std::size_t run = 0; run < cfg.random_runs; ++run) {
      runs.push_back(cohort_accuracy(
          cohort, [&](std::size_t n, std::size_t k) { return random_out[n][run][k]; }));
    }
    for (std::size_t k = 0; k <= kmax; ++k) {
      std::vector<double> at_k;
      for (const auto& r : runs) at_k.push_back(r[k]);
      rc.accuracy.push_back(mean_std(at_k));
    }
    (cohort ? report.random_correct : report.random_incorrect) = std::move(rc);
  }
  return report;
}

std::string selectivity_to_json(const SelectivityReport& r) {
  json j;
  j["test_accuracy"] = r.test_accuracy;
  j["eligible_items"] = r.eligible_items;
  j["correct_items"] = r.correct_items;
  j["incorrect_items"] = r.incorrect_items;
  json curves = json::array();
  for (const SelectivityCurve& c : r.curves) {
    curves.push_back({{"explainer", c.explainer}, {"order", c.order}, {"accuracy", c.accuracy}});
  }
  j["curves"] = std::move(curves);
  for (const RandomCurve* rc : {&r.random_correct, &r.random_incorrect}) {
    json pts = json::array();
    for (const MeanStd& m : rc->accuracy) pts.push_back(mean_std_json(m));
    j["random"][rc->cohort] = std::move(pts);
  }
  return j.dump(1);
}

std::string selectivity_to_csv(const SelectivityReport& r) {
  std::ostringstream out;
  out.precision(17);
  out << "explainer,order,k,accuracy,std\n";
  for (const SelectivityCurve& c : r.curves) {
    for (std::size_t k = 0; k < c.accuracy.size(); ++k) {
      out << c.explainer << ',' << c.order << ',' << k << ',' << c.accuracy[k] << ",\n";
    }
  }
  for (const RandomCurve* rc : {&r.random_correct, &r.random_incorrect}) {
    const char* order = rc == &r.random_correct ? "decreasing" : "increasing";
    for (std::size_t k = 0; k < rc->accuracy.size(); ++k) {
      out << "random," << order << ',' << k << ',' << rc->accuracy[k].mean << ','
          << rc->accuracy[k].std << '\n';
    }
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Redistribution
// ---------------------------------------------------------------------------

RedistributionConfig RedistributionConfig::defaults() {
  RedistributionConfig cfg;
  cfg.grid.moneybag_event = true;
  cfg.train.max_epochs = 300;
  cfg.train.success_threshold = 0.05;
  cfg.train.stop_threshold = 1e-4;
  cfg.train.patience = 30;
  return cfg;
}

const RuleSummary* RedistributionReport::find(std::string_view rule) const {
  for (const RuleSummary& s : summaries) {
    if (s.rule == rule) return &s;
  }
  return nullptr;
}

VariantSpec redistribution_variant(const RedistributionConfig& cfg) {
  return VariantSpec::markov(cfg.a_g, cfg.a_h);
}

DatasetSplits grid_datasets(const RedistributionConfig& cfg) {
  const std::size_t len = cfg.grid.episode_length;
  auto make = [&](std::size_t count, std::uint64_t salt, Split split) {
    const auto eps = gen_gridworld(count, len, derive_seed(cfg.seed, salt), cfg.grid);
    return episodes_to_dataset(eps, split);
  };
  return {make(cfg.train_episodes, 11, Split::train), make(cfg.val_episodes, 12, Split::val),
          make(cfg.test_episodes, 13, Split::test)};
}

PredictorFit train_return_predictor(const DatasetSplits& data, const RedistributionConfig& cfg) {
  if (cfg.max_attempts == 0) throw ConfigError("return predictor needs at least one attempt");
  const VariantSpec variant = redistribution_variant(cfg);
  PredictorFit fit;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < cfg.max_attempts; ++k) {
    ++fit.attempts;
    std::mt19937_64 rng(derive_seed(cfg.seed, 100 + k));
    LSTMParams init = initialize_params(variant, kGridFeatures, cfg.hidden, 1, false, rng);
    TrainConfig tc = cfg.train;
    tc.seed = derive_seed(cfg.seed, 200 + k);
    try {
      TrainResult r = train_model(std::move(init), variant, data.train, data.val, tc);
      best = std::min(best, r.best_val_loss);
      if (r.best_val_loss < cfg.converge_threshold) {
        fit.result = std::move(r);
        return fit;
      }
    } catch (const TrainingError&) {
    }
  }
  throw ExperimentError("no return predictor reached validation MSE " +
                        std::to_string(cfg.converge_threshold) + " in " +
                        std::to_string(cfg.max_attempts) + " attempts (best " +
                        std::to_string(best) + ")");
}

RedistributionReport run_redistribution(const Dataset& episodes, const LSTMParams& params,
                                        const VariantSpec& variant,
                                        const RedistributionConfig& cfg) {
  if (cfg.rules.empty()) throw ConfigError("redistribution needs at least one product rule");
  if (!(cfg.threshold > 0.0 && cfg.threshold < 1.0)) {
    throw ConfigError("detection threshold must lie in (0, 1)");
  }
  RedistributionReport report;
  report.hidden = params.hidden_size();
  report.threshold = cfg.threshold;
  report.episodes.resize(episodes.size());

  parallel_for(episodes.size(), cfg.threads, [&](std::size_t n) {
    const GridEpisode ep = episode_from_example(episodes.items[n]);
    EpisodeRedistribution& out = report.episodes[n];
    out.episode_return = ep.episode_return;
    out.moneybag = ep.moneybag_step();
    out.coins = ep.coin_steps();
    out.rewarded_coins = ep.rewarded_coin_steps();
    const ActivationTrace trace = forward_sequence(params, variant, episodes.items[n].input);
    out.prediction = trace.prediction[0];
    for (ProductRuleKind rule : cfg.rules) {
      const RelevanceTrace rt =
          explain(ExplainerKind::lrp_rule(rule), trace, params, variant, 0, cfg.explain);
      out.rules.push_back({std::string(to_string(rule)), rt.per_step, rt.ledger});
    }
  });

  double sq = 0.0;
  for (std::size_t n = 0; n < episodes.size(); ++n) {
    const double err = report.episodes[n].prediction - episodes.items[n].target[0];
    sq += err * err;
  }
  report.test_mse = episodes.empty() ? 0.0 : sq / static_cast<double>(episodes.size());

  for (std::size_t r = 0; r < cfg.rules.size(); ++r) {
    RuleSummary s;
    s.rule = std::string(to_string(cfg.rules[r]));
    double mb = 0.0, rewarded = 0.0, detected = 0.0, pos_total = 0.0, zero_total = 0.0;
    for (const EpisodeRedistribution& ep : report.episodes) {
      const RuleRelevance& rr = ep.rules[r];
      s.max_gate_trapped = std::max(s.max_gate_trapped, std::abs(rr.ledger.gate_trapped));
      double total = 0.0;
      for (double v : rr.per_step) total += std::abs(v);
      if (ep.episode_return == 0) {
        ++s.zero_episodes;
        zero_total += total;
        continue;
      }
      if (ep.episode_return < 0 || !ep.moneybag) continue;
      ++s.positive_episodes;
      pos_total += total;
      if (total <= 0.0) continue;
      const double mb_share = std::abs(rr.per_step[*ep.moneybag]) / total;
      double coin = 0.0;
      for (std::size_t t : ep.rewarded_coins) coin += std::abs(rr.per_step[t]);
      mb += mb_share;
      rewarded += coin / total;
      if (mb_share > cfg.threshold) detected += 1.0;
    }
    if (s.positive_episodes) {
      const double np = static_cast<double>(s.positive_episodes);
      s.mean_moneybag_share = mb / np;
      s.mean_rewarded_share = rewarded / np;
      s.detection_rate = detected / np;
      if (s.zero_episodes && pos_total > 0.0) {
        s.zero_return_ratio =
            (zero_total / static_cast<double>(s.zero_episodes)) / (pos_total / np);
      }
    }
    report.summaries.push_back(std::move(s));
  }
  return report;
}

std::string redistribution_to_json(const RedistributionReport& r) {
  json j;
  j["hidden"] = r.hidden;
  j["threshold"] = r.threshold;
  j["test_mse"] = r.test_mse;
  json sums = json::array();
  for (const RuleSummary& s : r.summaries) {
    sums.push_back({{"rule", s.rule},
                    {"positive_episodes", s.positive_episodes},
                    {"zero_episodes", s.zero_episodes},
                    {"mean_moneybag_share", s.mean_moneybag_share},
                    {"mean_rewarded_share", s.mean_rewarded_share},
                    {"detection_rate", s.detection_rate},
                    {"zero_return_ratio", s.zero_return_ratio},
                    {"max_gate_trapped", s.max_gate_trapped}});
  }
  j["summaries"] = std::move(sums);
  json eps = json::array();
  for (const EpisodeRedistribution& ep : r.episodes) {
    json e;
    e["return"] = ep.episode_return;
    e["prediction"] = ep.prediction;
    e["moneybag"] = ep.moneybag ? json(*ep.moneybag) : json(nullptr);
    e["coins"] = ep.coins;
    e["rewarded_coins"] = ep.rewarded_coins;
    for (const RuleRelevance& rr : ep.rules) {
      e["relevance"][rr.rule] = rr.per_step;
      e["ledger"][rr.rule] = {{"output_relevance_in", rr.ledger.output_relevance_in},
                              {"bias_trapped", rr.ledger.bias_trapped},
                              {"gate_trapped", rr.ledger.gate_trapped},
                              {"stabilizer_absorbed", rr.ledger.stabilizer_absorbed},
                              {"input_total", rr.ledger.input_total}};
    }
    eps.push_back(std::move(e));
  }
  j["episodes"] = std::move(eps);
  return j.dump(1);
}

std::string redistribution_to_csv(const RedistributionReport& r) {
  std::ostringstream out;
  out.precision(17);
  out << "episode,rule,t,relevance,moneybag,coin,rewarded_coin\n";
  for (std::size_t n = 0; n < r.episodes.size(); ++n) {
    const EpisodeRedistribution& ep = r.episodes[n];
    for (const RuleRelevance& rr : ep.rules) {
      for (std::size_t t = 0; t < rr.per_step.size(); ++t) {
        const bool coin = std::find(ep.coins.begin(), ep.coins.end(), t) != ep.coins.end();
        const bool rewarded =
            std::find(ep.rewarded_coins.begin(), ep.rewarded_coins.end(), t) !=
            ep.rewarded_coins.end();
        out << n << ',' << rr.rule << ',' << t << ',' << rr.per_step[t] << ','
            << (ep.moneybag && *ep.moneybag == t) << ',' << coin << ',' << rewarded << '\n';
      }
    }
  }
  return out.str();
}

}  // namespace lstmlrp
