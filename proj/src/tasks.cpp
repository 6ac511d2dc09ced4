#include "lstmlrp/tasks.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <string>

#include "lstmlrp/errors.hpp"

namespace lstmlrp {

namespace {

std::mt19937_64 stream(std::uint64_t seed, std::uint64_t salt) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(salt), static_cast<std::uint32_t>(salt >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace

std::string_view to_string(ArithmeticMode m) {
  return m == ArithmeticMode::addition_signed ? "addition" : "subtraction";
}

ArithmeticMode arithmetic_mode_from_string(std::string_view name) {
  if (name == "addition" || name == "addition_signed") return ArithmeticMode::addition_signed;
  if (name == "subtraction" || name == "subtraction_positive") {
    return ArithmeticMode::subtraction_positive;
  }
  throw ConfigError("unknown arithmetic task '" + std::string(name) + "'");
}

void ArithmeticSpec::validate() const {
  for (const SplitShape* s : {&train, &val, &test}) {
    if (s->min_length < 2) throw ConfigError("arithmetic sequences need T >= 2 to place a < b");
    if (s->max_length < s->min_length) throw ConfigError("arithmetic length range is inverted");
    if (s->count == 0) throw ConfigError("arithmetic split count must be positive");
  }
}

namespace {

Dataset arithmetic_split(const ArithmeticSpec& spec, const SplitShape& shape, Split split) {
  auto rng = stream(spec.seed, static_cast<std::uint64_t>(split) + 1);
  std::uniform_int_distribution<std::size_t> length(shape.min_length, shape.max_length);
  std::uniform_real_distribution<double> magnitude(0.5, 1.0);
  std::bernoulli_distribution negative(0.5);
  const bool signed_numbers = spec.mode == ArithmeticMode::addition_signed;

  Dataset data;
  data.split = split;
  data.items.reserve(shape.count);
  for (std::size_t n = 0; n < shape.count; ++n) {
    const std::size_t steps = length(rng);
    std::vector<double> numbers(steps);
    for (double& v : numbers) {
      v = magnitude(rng);
      if (signed_numbers && negative(rng)) v = -v;
    }
    // Uniform over pairs a < b.
    std::uniform_int_distribution<std::size_t> first(0, steps - 1);
    std::uniform_int_distribution<std::size_t> second(0, steps - 2);
    std::size_t a = first(rng);
    std::size_t b = second(rng);
    if (b >= a) ++b;
    if (a > b) std::swap(a, b);

    Mat rows(steps, 2);
    for (std::size_t t = 0; t < steps; ++t) {
      if (t == a || t == b) {
        rows(t, 1) = numbers[t];
      } else {
        rows(t, 0) = numbers[t];
      }
    }
    const double target = signed_numbers ? numbers[a] + numbers[b] : numbers[a] - numbers[b];
    data.items.push_back(Example{Sequence(std::move(rows)), Vec{target}, std::nullopt,
                                 ArithmeticMeta{a, b, numbers[a], numbers[b]}});
  }
  return data;
}

}  // namespace

DatasetSplits gen_arithmetic(const ArithmeticSpec& spec) {
  spec.validate();
  return {arithmetic_split(spec, spec.train, Split::train),
          arithmetic_split(spec, spec.val, Split::val),
          arithmetic_split(spec, spec.test, Split::test)};
}

std::optional<std::size_t> GridEpisode::moneybag_step() const {
  for (std::size_t t = 0; t < features.rows(); ++t) {
    if (features(t, kMoneybagCollected) > 0.5) return t;
  }
  return std::nullopt;
}

std::vector<std::size_t> GridEpisode::coin_steps() const {
  std::vector<std::size_t> out;
  for (std::size_t t = 0; t < features.rows(); ++t) {
    if (features(t, kCoinCollected) > 0.5) out.push_back(t);
  }
  return out;
}

std::vector<std::size_t> GridEpisode::rewarded_coin_steps() const {
  const auto bag = moneybag_step();
  std::vector<std::size_t> out;
  if (!bag) return out;
  for (std::size_t t : coin_steps()) {
    if (t >= *bag) out.push_back(t);
  }
  return out;
}

std::vector<GridEpisode> gen_gridworld(std::size_t count, std::size_t max_t, std::uint64_t seed,
                                       const GridConfig& cfg) {
  if (max_t < 2) throw ConfigError("grid episodes need at least 2 steps");
  if (cfg.grid_length < cfg.coins + 2) throw ConfigError("grid too small for moneybag and coins");
  auto rng = stream(seed, 0x6772696477ULL);
  const std::size_t start = cfg.grid_length / 2;
  std::bernoulli_distribution go_left(0.5);

  std::vector<std::size_t> free_cells;
  for (std::size_t x = 0; x < cfg.grid_length; ++x) {
    if (x != start) free_cells.push_back(x);
  }

  std::vector<GridEpisode> episodes;
  episodes.reserve(count);
  for (std::size_t e = 0; e < count; ++e) {
    std::vector<std::size_t> cells = free_cells;
    std::shuffle(cells.begin(), cells.end(), rng);
    const std::size_t bag_cell = cells[0];
    std::vector<bool> coin(cfg.grid_length, false);
    for (std::size_t k = 1; k <= cfg.coins; ++k) coin[cells[k]] = true;

    GridEpisode ep;
    ep.features = Mat(max_t, kGridFeatures);
    std::size_t pos = start;
    bool has_bag = false;
    for (std::size_t t = 0; t < max_t; ++t) {
      const bool left = go_left(rng);
      if (left && pos > 0) --pos;
      if (!left && pos + 1 < cfg.grid_length) ++pos;
      bool got_coin = false;
      const bool bag_now = !has_bag && pos == bag_cell;
      if (bag_now) has_bag = true;
      if (coin[pos]) {
        coin[pos] = false;
        got_coin = true;
        if (has_bag) ++ep.episode_return;
      }
      const bool flag = cfg.moneybag_event ? bag_now : has_bag;
      ep.features(t, kMoneybagCollected) = flag ? 1.0 : 0.0;
      ep.features(t, kCoinCollected) = got_coin ? 1.0 : 0.0;
      ep.features(t, kActionLeft) = left ? 1.0 : 0.0;
      ep.features(t, kActionRight) = left ? 0.0 : 1.0;
    }
    episodes.push_back(std::move(ep));
  }
  return episodes;
}

Dataset episodes_to_dataset(std::span<const GridEpisode> episodes, Split split) {
  Dataset data;
  data.split = split;
  for (const GridEpisode& ep : episodes) {
    data.items.push_back(Example{Sequence(ep.features),
                                 Vec{static_cast<double>(ep.episode_return)}, std::nullopt,
                                 EpisodeMeta{ep.episode_return}});
  }
  return data;
}

GridEpisode episode_from_example(const Example& ex) {
  if (ex.input.dim() != kGridFeatures) throw ShapeError("grid episodes have 4 features per step");
  GridEpisode ep;
  ep.features = ex.input.matrix();
  if (const auto* m = std::get_if<EpisodeMeta>(&ex.meta)) {
    ep.episode_return = m->episode_return;
  } else {
    ep.episode_return = static_cast<int>(std::lround(ex.target.at(0)));
  }
  return ep;
}

void SelectivityCorpusSpec::validate() const {
  if (classes != 5) throw ConfigError("the selectivity corpus has exactly five classes");
  if (embedding_dim == 0 || neutral_tokens == 0 || keys_per_polarity == 0) {
    throw ConfigError("selectivity corpus needs a non-empty vocabulary");
  }
  if (min_length < max_keys || max_length < min_length || min_length == 0) {
    throw ConfigError("selectivity corpus length range must fit the planted keys");
  }
  if (train_count == 0 || val_count == 0 || test_count == 0) {
    throw ConfigError("selectivity corpus split counts must be positive");
  }
}

int label_from_polarity(int s) {
  if (s <= -2) return 0;
  if (s >= 2) return 4;
  return s + 2;
}

Sequence embed_tokens(const Mat& embeddings, std::span<const int> tokens) {
  Mat rows(tokens.size(), embeddings.cols());
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    auto src = embeddings.row(static_cast<std::size_t>(tokens[t]));
    std::copy(src.begin(), src.end(), rows.row(t).begin());
  }
  return Sequence(std::move(rows));
}

SelectivityCorpus gen_selectivity_corpus(const SelectivityCorpusSpec& spec) {
  spec.validate();
  SelectivityCorpus corpus;
  const std::size_t vocab = spec.neutral_tokens + 4 * spec.keys_per_polarity;

  auto emb_rng = stream(spec.seed, 0x656d62ULL);
  std::normal_distribution<double> normal(0.0, 1.0);
  corpus.embeddings = Mat(vocab, spec.embedding_dim);
  for (double& v : corpus.embeddings.flat()) v = normal(emb_rng);
  corpus.polarity.assign(vocab, 0);
  static constexpr int kPolarities[4] = {-2, -1, 1, 2};
  for (std::size_t p = 0; p < 4; ++p) {
    for (std::size_t k = 0; k < spec.keys_per_polarity; ++k) {
      corpus.polarity[spec.neutral_tokens + p * spec.keys_per_polarity + k] = kPolarities[p];
    }
  }

  auto make_split = [&](std::size_t count, Split split) {
    auto rng = stream(spec.seed, static_cast<std::uint64_t>(split) + 1);
    std::uniform_int_distribution<std::size_t> length(spec.min_length, spec.max_length);
    std::uniform_int_distribution<std::size_t> n_keys(0, spec.max_keys);
    std::uniform_int_distribution<int> neutral(0, static_cast<int>(spec.neutral_tokens) - 1);
    std::uniform_int_distribution<int> key(static_cast<int>(spec.neutral_tokens),
                                           static_cast<int>(vocab) - 1);
    Dataset data;
    data.split = split;
    data.items.reserve(count);
    for (std::size_t n = 0; n < count; ++n) {
      const std::size_t steps = length(rng);
      std::vector<int> tokens(steps);
      for (int& tok : tokens) tok = neutral(rng);
      std::vector<std::size_t> positions(steps);
      std::iota(positions.begin(), positions.end(), 0);
      std::shuffle(positions.begin(), positions.end(), rng);
      positions.resize(n_keys(rng));
      std::sort(positions.begin(), positions.end());
      int sum = 0;
      for (std::size_t pos : positions) {
        tokens[pos] = key(rng);
        sum += corpus.polarity[static_cast<std::size_t>(tokens[pos])];
      }
      const int label = label_from_polarity(sum);
      Vec target(spec.classes, 0.0);
      target[static_cast<std::size_t>(label)] = 1.0;
      data.items.push_back(Example{embed_tokens(corpus.embeddings, tokens), std::move(target),
                                   label, ClassMeta{std::move(tokens), std::move(positions)}});
    }
    return data;
  };
  corpus.splits.train = make_split(spec.train_count, Split::train);
  corpus.splits.val = make_split(spec.val_count, Split::val);
  corpus.splits.test = make_split(spec.test_count, Split::test);
  return corpus;
}

Sequence delete_timesteps(const Sequence& seq, std::span<const std::size_t> indices) {
  std::vector<bool> drop(seq.length(), false);
  for (std::size_t idx : indices) {
    if (idx >= seq.length()) {
      throw ShapeError("delete_timesteps: index " + std::to_string(idx) +
                       " out of range for length " + std::to_string(seq.length()));
    }
    if (drop[idx]) throw ShapeError("delete_timesteps: index " + std::to_string(idx) + " repeated");
    drop[idx] = true;
  }
  const std::size_t kept = seq.length() - indices.size();
  if (kept == 0) throw ShapeError("delete_timesteps: deleting every timestep leaves no sequence");
  Mat rows(kept, seq.dim());
  std::size_t out = 0;
  for (std::size_t t = 0; t < seq.length(); ++t) {
    if (drop[t]) continue;
    auto src = seq.row(t);
    std::copy(src.begin(), src.end(), rows.row(out++).begin());
  }
  return Sequence(std::move(rows));
}

}  // namespace lstmlrp
