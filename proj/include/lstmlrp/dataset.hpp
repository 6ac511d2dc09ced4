#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "lstmlrp/lstm.hpp"

namespace lstmlrp {

enum class Split { train, val, test };

std::string_view to_string(Split s);

/// Ground truth of an arithmetic item. Positions are 0-based timesteps.
struct ArithmeticMeta {
  std::size_t a = 0;
  std::size_t b = 0;
  double n_a = 0.0;
  double n_b = 0.0;
};

/// Episode bookkeeping for grid-world return prediction.
struct EpisodeMeta {
  int episode_return = 0;
};

/// Planted key tokens of a classification sequence.
struct ClassMeta {
  std::vector<int> tokens;
  std::vector<std::size_t> key_positions;
};

using ExampleMeta = std::variant<std::monostate, ArithmeticMeta, EpisodeMeta, ClassMeta>;

struct Example {
  Sequence input;
  Vec target;
  std::optional<int> label;
  ExampleMeta meta;
};

struct Dataset {
  Split split = Split::train;
  std::vector<Example> items;

  std::size_t size() const { return items.size(); }
  bool empty() const { return items.empty(); }
  /// Throws ConfigError when empty or target dimensions differ.
  void validate() const;
};

struct DatasetSplits {
  Dataset train;
  Dataset val;
  Dataset test;
};

inline constexpr int kDatasetFormatVersion = 1;

/// One JSON record per line: {"sequence", "target", "label"?, "meta"}.
/// The first line is a header {"format_version", "split"}.
std::string dataset_to_jsonl(const Dataset& data);
Dataset dataset_from_jsonl(std::string_view text);

void save_dataset(const std::string& path, const Dataset& data);
Dataset load_dataset(const std::string& path);

}  // namespace lstmlrp
