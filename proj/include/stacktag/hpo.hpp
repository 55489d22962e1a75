#pragma once

#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "stacktag/trainer.hpp"

namespace stacktag {

enum class SearchMode { Grid, Random };

struct SearchSpace {
  std::vector<double> lr{0.01, 0.05, 0.1};
  std::vector<int> batch{8, 16, 32};
  std::vector<int> hidden{256};
  std::vector<int> layers{1};
  double dropout_lo = 0.0;
  double dropout_hi = 0.0;
  SearchMode mode = SearchMode::Grid;
  int max_epochs = 20;  // per-trial cap

  // Throws EmptySpace if any choice set is empty or the interval inverted.
  void validate() const;

  // The first search: lr x batch with the paper's architecture fixed.
  static SearchSpace initial();
  // The second, sparser search around the best initial setting.
  static SearchSpace refined();

  // JSON object with optional keys mode, lr, batch, hidden, layers,
  // dropout ([lo, hi]), max_epochs; missing keys keep the defaults above.
  static SearchSpace from_json(const nlohmann::json& j);
};

struct TrialConfig {
  double lr = 0.1;
  int batch = 32;
  int hidden = 256;
  int layers = 1;
  double dropout = 0.0;

  bool operator==(const TrialConfig&) const = default;
};

struct TrialRecord {
  TrialConfig config;
  double dev_f1 = 0.0;
};

struct HpoResult {
  TrialConfig best;
  double best_dev_f1 = 0.0;
  std::vector<TrialRecord> trials;
};

// Grid mode enumerates the cartesian product (lr slowest, then batch,
// hidden, layers; dropout takes both interval ends unless they coincide)
// and truncates to `budget` when budget > 0. Random mode draws `budget`
// configs, dropout uniform on the interval.
std::vector<TrialConfig> enumerate_trials(const SearchSpace& space, int budget,
                                          std::uint64_t seed);

using TrialFn = std::function<double(const TrialConfig&, std::uint64_t seed)>;

// Runs every trial and keeps the first one with the highest score.
HpoResult hpo(const SearchSpace& space, int budget, std::uint64_t seed, const TrialFn& fn);

// Trains a fresh tagger per trial on `train_set`, scoring on `dev`.
HpoResult hpo(const SearchSpace& space, int budget, std::uint64_t seed,
              const std::vector<TaggedSentence>& train_set,
              const std::vector<TaggedSentence>& dev, EmbeddingStack& stack,
              const TaggerConfig& base = {});

std::string hpo_log(const HpoResult& result);

}  // namespace stacktag
