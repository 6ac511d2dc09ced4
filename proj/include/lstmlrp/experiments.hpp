#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "lstmlrp/explainers.hpp"
#include "lstmlrp/stats.hpp"
#include "lstmlrp/tasks.hpp"
#include "lstmlrp/train.hpp"

namespace lstmlrp {

std::size_t default_threads();

/// Runs fn(0..n-1) on up to `threads` workers. The first exception thrown by
/// any call is rethrown after all workers have stopped.
template <typename F>
void parallel_for(std::size_t n, std::size_t threads, F&& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads == 1) {
    for (std::size_t k = 0; k < n; ++k) fn(k);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto work = [&] {
    for (std::size_t k = next++; k < n; k = next++) {
      try {
        fn(k);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next = n;
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < threads; ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

/// Independent seed for item `index` of a run seeded with `base`.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

// ---------------------------------------------------------------------------
// Model pools
// ---------------------------------------------------------------------------

struct ModelPoolConfig {
  VariantSpec variant = VariantSpec::standard();
  std::size_t hidden = 1;
  bool head_bias = false;
  std::size_t model_count = 50;
  std::size_t max_attempts = 200;
  TrainConfig train;
  std::uint64_t seed = 1;
  std::size_t threads = 1;
};

struct ModelPool {
  std::vector<LSTMParams> models;
  std::vector<std::size_t> attempt_index;  // which attempt produced each model
  std::vector<double> best_val_loss;
  std::size_t attempts = 0;  // up to and including the last kept model
};

/// Trains attempt k from seed derive_seed(cfg.seed, k) until model_count
/// attempts succeed, keeping the first successes by attempt index. Throws
/// ExperimentError once max_attempts are spent.
ModelPool train_model_pool(const DatasetSplits& data, const ModelPoolConfig& cfg);

// ---------------------------------------------------------------------------
// Fidelity on the arithmetic tasks
// ---------------------------------------------------------------------------

std::vector<ExplainerKind> default_fidelity_explainers();

struct FidelityConfig {
  ArithmeticSpec task;
  ModelPoolConfig pool;
  std::vector<ExplainerKind> explainers = default_fidelity_explainers();
  ExplainOptions explain{0.0, 0.0};

  static FidelityConfig defaults();
};

struct FidelityRow {
  std::string explainer;
  MeanStd rho_a;  // over models, fractions in [-1, 1]
  MeanStd rho_b;
  MeanStd mass;
  std::size_t undefined_rho = 0;   // models whose correlation was undefined
  std::size_t skipped_items = 0;   // items with zero total relevance
};

struct FidelityReport {
  std::string task;
  std::size_t model_count = 0;
  std::size_t attempts = 0;
  std::size_t hidden = 0;
  std::size_t test_items = 0;
  MeanStd test_mse;
  std::vector<FidelityRow> rows;

  const FidelityRow* find(std::string_view explainer) const;
};

FidelityReport run_fidelity(const FidelityConfig& cfg);
/// Evaluation only, on models trained elsewhere.
FidelityReport evaluate_fidelity(const FidelityConfig& cfg, const DatasetSplits& data,
                                 const ModelPool& pool);

std::string fidelity_to_json(const FidelityReport& r);
/// explainer,statistic,mean_percent,std_percent
std::string fidelity_to_csv(const FidelityReport& r);

// ---------------------------------------------------------------------------
// Selectivity (deletion curves)
// ---------------------------------------------------------------------------

struct SelectivityConfig {
  SelectivityCorpusSpec corpus;
  std::size_t hidden = 60;
  TrainConfig train;
  std::vector<ExplainerKind> explainers;
  ExplainOptions explain;
  std::size_t max_deletions = 5;
  std::size_t random_runs = 10;
  std::size_t min_length = 10;
  std::uint64_t seed = 1;
  std::size_t threads = 1;

  static SelectivityConfig defaults();
};

struct SelectivityCurve {
  std::string explainer;
  std::string order;  // "decreasing" (correct cohort) or "increasing" (incorrect cohort)
  std::vector<double> accuracy;  // k = 0..max_deletions
};

struct RandomCurve {
  std::string cohort;  // "correct" or "incorrect"
  std::vector<MeanStd> accuracy;
};

struct SelectivityReport {
  double test_accuracy = 0.0;
  std::size_t eligible_items = 0;
  std::size_t correct_items = 0;
  std::size_t incorrect_items = 0;
  std::vector<SelectivityCurve> curves;
  RandomCurve random_correct;
  RandomCurve random_incorrect;

  const SelectivityCurve* find(std::string_view explainer, std::string_view order) const;
};

VariantSpec selectivity_variant();
TrainResult train_classifier(const SelectivityCorpus& corpus, const SelectivityConfig& cfg);
SelectivityReport run_selectivity(const SelectivityCorpus& corpus, const LSTMParams& params,
                                  const VariantSpec& variant, const SelectivityConfig& cfg);

std::string selectivity_to_json(const SelectivityReport& r);
/// explainer,order,k,accuracy,std (std only for the random rows)
std::string selectivity_to_csv(const SelectivityReport& r);

// ---------------------------------------------------------------------------
// Reward redistribution on the grid world
// ---------------------------------------------------------------------------

struct RedistributionConfig {
  GridConfig grid;
  std::size_t train_episodes = 4000;
  std::size_t val_episodes = 500;
  std::size_t test_episodes = 200;
  std::size_t hidden = 2;
  double a_g = 2.0;
  double a_h = 1.0;
  TrainConfig train;
  /// A predictor counts as converged below this validation MSE; attempts
  /// continue with fresh seeds up to max_attempts.
  double converge_threshold = 1e-3;
  std::size_t max_attempts = 10;
  std::vector<ProductRuleKind> rules{ProductRuleKind::all, ProductRuleKind::prop,
                                     ProductRuleKind::half};
  ExplainOptions explain;
  double threshold = 0.05;
  std::uint64_t seed = 1;
  std::size_t threads = 1;

  static RedistributionConfig defaults();
};

struct RuleRelevance {
  std::string rule;
  Vec per_step;
  Ledger ledger;
};

struct EpisodeRedistribution {
  int episode_return = 0;
  double prediction = 0.0;
  std::optional<std::size_t> moneybag;
  std::vector<std::size_t> coins;
  std::vector<std::size_t> rewarded_coins;
  std::vector<RuleRelevance> rules;
};

/// Shares are |R| fractions of Σ_t |R_t|, averaged over episodes with a
/// positive return.
struct RuleSummary {
  std::string rule;
  std::size_t positive_episodes = 0;
  std::size_t zero_episodes = 0;
  double mean_moneybag_share = 0.0;
  double mean_rewarded_share = 0.0;
  double detection_rate = 0.0;  // moneybag share above the threshold
  /// Mean Σ|R| over return-0 episodes divided by the mean over positive ones.
  double zero_return_ratio = 0.0;
  double max_gate_trapped = 0.0;
};

struct RedistributionReport {
  std::size_t hidden = 0;
  double threshold = 0.0;
  double test_mse = 0.0;
  std::vector<EpisodeRedistribution> episodes;
  std::vector<RuleSummary> summaries;

  const RuleSummary* find(std::string_view rule) const;
};

VariantSpec redistribution_variant(const RedistributionConfig& cfg);
/// Train/val/test episodes drawn from independent streams of cfg.seed.
DatasetSplits grid_datasets(const RedistributionConfig& cfg);
struct PredictorFit {
  TrainResult result;
  std::size_t attempts = 0;
};

/// First attempt whose validation MSE falls below cfg.converge_threshold.
/// Throws ExperimentError when none does.
PredictorFit train_return_predictor(const DatasetSplits& data, const RedistributionConfig& cfg);
RedistributionReport run_redistribution(const Dataset& episodes, const LSTMParams& params,
                                        const VariantSpec& variant,
                                        const RedistributionConfig& cfg);

std::string redistribution_to_json(const RedistributionReport& r);
/// episode,rule,t,relevance,moneybag,coin,rewarded_coin
std::string redistribution_to_csv(const RedistributionReport& r);

/// Percent with three decimals, as reported in the tables.
std::string percent3(double fraction);

}  // namespace lstmlrp
