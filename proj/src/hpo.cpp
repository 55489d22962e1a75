#include "stacktag/hpo.hpp"

#include <sstream>

#include "stacktag/error.hpp"

namespace stacktag {

void SearchSpace::validate() const {
  if (lr.empty() || batch.empty() || hidden.empty() || layers.empty()) {
    throw Error(ErrorKind::EmptySpace, "search space has an empty choice set");
  }
  if (dropout_lo > dropout_hi) throw Error(ErrorKind::EmptySpace, "dropout interval is empty");
}

SearchSpace SearchSpace::initial() { return {}; }

SearchSpace SearchSpace::refined() {
  SearchSpace s;
  s.lr = {0.05, 0.1, 0.15};
  s.batch = {32};
  s.hidden = {256, 512};
  s.layers = {1, 2};
  s.dropout_hi = 0.5;
  s.mode = SearchMode::Random;
  return s;
}

SearchSpace SearchSpace::from_json(const nlohmann::json& j) {
  SearchSpace s;
  if (j.contains("mode")) {
    const std::string m = j.at("mode");
    if (m == "grid") s.mode = SearchMode::Grid;
    else if (m == "random") s.mode = SearchMode::Random;
    else throw Error(ErrorKind::InvalidFlag, "unknown search mode " + m);
  }
  if (j.contains("lr")) s.lr = j.at("lr").get<std::vector<double>>();
  if (j.contains("batch")) s.batch = j.at("batch").get<std::vector<int>>();
  if (j.contains("hidden")) s.hidden = j.at("hidden").get<std::vector<int>>();
  if (j.contains("layers")) s.layers = j.at("layers").get<std::vector<int>>();
  if (j.contains("dropout")) {
    const auto d = j.at("dropout").get<std::vector<double>>();
    if (d.size() != 2) throw Error(ErrorKind::InvalidFlag, "dropout must be [lo, hi]");
    s.dropout_lo = d[0];
    s.dropout_hi = d[1];
  }
  if (j.contains("max_epochs")) s.max_epochs = j.at("max_epochs");
  s.validate();
  return s;
}

std::vector<TrialConfig> enumerate_trials(const SearchSpace& space, int budget,
                                          std::uint64_t seed) {
  space.validate();
  std::vector<TrialConfig> out;
  if (space.mode == SearchMode::Grid) {
    std::vector<double> drops{space.dropout_lo};
    if (space.dropout_hi != space.dropout_lo) drops.push_back(space.dropout_hi);
    for (double lr : space.lr)
      for (int b : space.batch)
        for (int h : space.hidden)
          for (int l : space.layers)
            for (double d : drops) out.push_back({lr, b, h, l, d});
    if (budget > 0 && static_cast<std::size_t>(budget) < out.size()) out.resize(static_cast<std::size_t>(budget));
    return out;
  }
  if (budget < 1) throw Error(ErrorKind::InvalidFlag, "random search needs a budget >= 1");
  Rng rng(seed);
  for (int k = 0; k < budget; ++k) {
    TrialConfig c;
    c.lr = space.lr[rng.index(space.lr.size())];
    c.batch = space.batch[rng.index(space.batch.size())];
    c.hidden = space.hidden[rng.index(space.hidden.size())];
    c.layers = space.layers[rng.index(space.layers.size())];
    c.dropout = rng.uniform(space.dropout_lo, space.dropout_hi);
    out.push_back(c);
  }
  return out;
}

HpoResult hpo(const SearchSpace& space, int budget, std::uint64_t seed, const TrialFn& fn) {
  const auto trials = enumerate_trials(space, budget, seed);
  HpoResult result;
  result.best_dev_f1 = -1.0;
  for (std::size_t k = 0; k < trials.size(); ++k) {
    const double f1 = fn(trials[k], seed + k);
    result.trials.push_back({trials[k], f1});
    if (f1 > result.best_dev_f1) {
      result.best_dev_f1 = f1;
      result.best = trials[k];
    }
  }
  return result;
}

HpoResult hpo(const SearchSpace& space, int budget, std::uint64_t seed,
              const std::vector<TaggedSentence>& train_set,
              const std::vector<TaggedSentence>& dev, EmbeddingStack& stack,
              const TaggerConfig& base) {
  const auto labels = label_inventory(train_set);
  return hpo(space, budget, seed, [&](const TrialConfig& c, std::uint64_t trial_seed) {
    TaggerConfig tc = base;
    tc.hidden = c.hidden;
    tc.layers = c.layers;
    tc.dropout = c.dropout;
    Tagger tagger(stack.total_dim(), labels, tc);
    Rng rng(trial_seed);
    tagger.init(rng);
    TrainConfig cfg;
    cfg.lr = c.lr;
    cfg.batch = c.batch;
    cfg.max_epochs = space.max_epochs;
    cfg.seed = trial_seed;
    return train(train_set, dev, stack, std::move(tagger), cfg).best_dev_f1;
  });
}

std::string hpo_log(const HpoResult& result) {
  std::ostringstream out;
  out << "trial\tlr\tbatch\thidden\tlayers\tdropout\tdev_f1\n";
  for (std::size_t k = 0; k < result.trials.size(); ++k) {
    const auto& t = result.trials[k];
    out << k + 1 << '\t' << t.config.lr << '\t' << t.config.batch << '\t' << t.config.hidden
        << '\t' << t.config.layers << '\t' << t.config.dropout << '\t' << t.dev_f1 << '\n';
  }
  const auto& b = result.best;
  out << "best\t" << b.lr << '\t' << b.batch << '\t' << b.hidden << '\t' << b.layers << '\t'
      << b.dropout << '\t' << result.best_dev_f1 << '\n';
  return out.str();
}

}  // namespace stacktag
