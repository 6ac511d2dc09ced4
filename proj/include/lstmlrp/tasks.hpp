#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "lstmlrp/dataset.hpp"
#include "lstmlrp/lstm.hpp"

namespace lstmlrp {

// ---------------------------------------------------------------------------
// Arithmetic (adding problem with implicit markers)
// ---------------------------------------------------------------------------

enum class ArithmeticMode { addition_signed, subtraction_positive };

std::string_view to_string(ArithmeticMode m);
ArithmeticMode arithmetic_mode_from_string(std::string_view name);

struct SplitShape {
  std::size_t count = 0;
  std::size_t min_length = 0;
  std::size_t max_length = 0;
};

/// Rows carry [n_t, 0] at unmarked steps and [0, n_a] / [0, n_b] at the two
/// marked positions a < b. Addition draws |n_t| from [0.5, 1] with a random
/// sign, subtraction draws n_t from [0.5, 1].
struct ArithmeticSpec {
  ArithmeticMode mode = ArithmeticMode::addition_signed;
  SplitShape train{10000, 4, 10};
  SplitShape val{2500, 11, 12};
  SplitShape test{2500, 13, 14};
  std::uint64_t seed = 0;

  /// Throws ConfigError when a length range admits T < 2 or is inverted.
  void validate() const;
};

DatasetSplits gen_arithmetic(const ArithmeticSpec& spec);

// ---------------------------------------------------------------------------
// Moneybag / coins grid world
// ---------------------------------------------------------------------------

enum GridFeature : std::size_t { kMoneybagCollected = 0, kCoinCollected = 1, kActionLeft = 2,
                                 kActionRight = 3, kGridFeatures = 4 };

struct GridConfig {
  std::size_t grid_length = 11;
  std::size_t coins = 5;
  std::size_t episode_length = 20;
  /// false: moneybag_collected stays 1 from the collection step on.
  /// true: it is 1 only at the collection step.
  bool moneybag_event = false;
};

struct GridEpisode {
  Mat features;  // T × 4: moneybag_collected, coin_collected, action_left, action_right
  int episode_return = 0;

  /// First timestep with moneybag_collected = 1 (either encoding).
  std::optional<std::size_t> moneybag_step() const;
  std::vector<std::size_t> coin_steps() const;
  /// Coin steps at or after the moneybag step.
  std::vector<std::size_t> rewarded_coin_steps() const;
};

/// Uniform-random walk on a 1-D grid; the agent starts in the centre, the
/// moneybag and coins sit on distinct other cells. `max_t` overrides
/// cfg.episode_length.
std::vector<GridEpisode> gen_gridworld(std::size_t count, std::size_t max_t, std::uint64_t seed,
                                       const GridConfig& cfg = {});

Dataset episodes_to_dataset(std::span<const GridEpisode> episodes, Split split);
GridEpisode episode_from_example(const Example& ex);

// ---------------------------------------------------------------------------
// Synthetic five-class corpus for the deletion (selectivity) protocol
// ---------------------------------------------------------------------------

struct SelectivityCorpusSpec {
  std::size_t classes = 5;
  std::size_t embedding_dim = 60;
  std::size_t neutral_tokens = 40;
  std::size_t keys_per_polarity = 3;
  std::size_t min_length = 6;
  std::size_t max_length = 18;
  std::size_t max_keys = 3;
  std::size_t train_count = 6000;
  std::size_t val_count = 500;
  std::size_t test_count = 2000;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Token ids [0, neutral_tokens) are neutral; the rest are keys with
/// polarities -2, -1, +1, +2 (keys_per_polarity each).
struct SelectivityCorpus {
  DatasetSplits splits;
  Mat embeddings;             // vocabulary × embedding_dim
  std::vector<int> polarity;  // per token
};

/// Class of a polarity sum: <= -2 → 0, -1 → 1, 0 → 2 (neutral), +1 → 3, >= +2 → 4.
int label_from_polarity(int polarity_sum);
inline constexpr int kNeutralClass = 2;

SelectivityCorpus gen_selectivity_corpus(const SelectivityCorpusSpec& spec);

/// Sequence of the given token ids through the embedding table.
Sequence embed_tokens(const Mat& embeddings, std::span<const int> tokens);

/// Removes the given timesteps and concatenates what remains. Throws
/// ShapeError on out-of-range or repeated indices, or when nothing remains.
Sequence delete_timesteps(const Sequence& seq, std::span<const std::size_t> indices);

}  // namespace lstmlrp
