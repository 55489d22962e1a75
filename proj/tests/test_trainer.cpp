#include <doctest.h>

#include <algorithm>
#include <memory>

#include "oracles.hpp"
#include "stacktag/hpo.hpp"
#include "stacktag/trainer.hpp"
#include "synthetic.hpp"

using namespace stacktag;

namespace {

// Straight transcription of "anneal after more than `patience` epochs
// without improvement".
std::vector<double> reference_trace(const std::vector<double>& scores, double lr, double factor,
                                    int patience, double min_lr) {
  std::vector<double> out;
  double best = -1e300;
  int since = 0;
  for (double s : scores) {
    if (s > best) {
      best = s;
      since = 0;
    } else if (++since == patience + 1) {
      lr *= factor;
      since = 0;
    }
    out.push_back(lr);
    if (lr < min_lr) break;
  }
  return out;
}

EmbeddingStack word_stack(const std::vector<TaggedSentence>& data, int dim, std::uint64_t seed) {
  EmbeddingStack stack;
  stack.add(std::make_unique<WordEmbedder>(synth::word_table(data, dim, seed)));
  return stack;
}

Tagger fresh(const std::vector<TaggedSentence>& data, int input_dim, int hidden) {
  TaggerConfig tc;
  tc.hidden = hidden;
  Tagger t(input_dim, label_inventory(data), tc);
  Rng rng(1);
  t.init(rng);
  return t;
}

}  // namespace

TEST_CASE("flat dev scores anneal every patience + 1 epochs") {
  TrainConfig cfg;
  const auto trace = simulate_schedule(std::vector<double>(9, 0.5), cfg);
  CHECK(trace == std::vector<double>{0.1, 0.1, 0.1, 0.1, 0.05, 0.05, 0.05, 0.05, 0.025});
}

TEST_CASE("scheduler state") {
  AnnealScheduler s(0.1, 0.5, 1, 1e-4);
  CHECK(s.step(0.2));
  CHECK_FALSE(s.step(0.2));
  CHECK(s.bad_epochs() == 1);
  CHECK(s.step(0.3));
  CHECK(s.bad_epochs() == 0);
  CHECK_FALSE(s.step(0.1));
  CHECK_FALSE(s.step(0.1));
  CHECK(s.lr() == 0.05);
  CHECK(s.bad_epochs() == 0);
  CHECK(s.best() == 0.3);
}

TEST_CASE("schedule agrees with a reference on random score sequences") {
  oracle::Gen g(12);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> scores;
    const int n = g.integer(1, 80);
    for (int k = 0; k < n; ++k) scores.push_back(g.integer(0, 6) / 6.0);
    TrainConfig cfg;
    cfg.patience = g.integer(0, 4);
    cfg.min_lr = g.coin() ? 1e-4 : 0.02;
    CHECK(simulate_schedule(scores, cfg) ==
          reference_trace(scores, cfg.lr, cfg.anneal_factor, cfg.patience, cfg.min_lr));
  }
}

TEST_CASE("training stops once the rate drops below the minimum") {
  TrainConfig cfg;
  cfg.patience = 0;
  cfg.min_lr = 0.02;
  // 0.1 -> 0.05 -> 0.025 -> 0.0125 < 0.02
  const auto trace = simulate_schedule(std::vector<double>(20, 1.0), cfg);
  CHECK(trace == std::vector<double>{0.1, 0.05, 0.025, 0.0125});
}

TEST_CASE("invalid training options") {
  TrainConfig cfg;
  cfg.anneal_factor = 1.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = {};
  cfg.batch = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("training fits a small corpus and is reproducible") {
  const auto data = synth::ner_document(20, 4).sentences;
  EmbeddingStack stack = word_stack(data, 10, 1);
  TrainConfig cfg;
  cfg.max_epochs = 30;
  cfg.batch = 1;
  std::vector<EpochRecord> seen;
  const auto r = train(data, {}, stack, fresh(data, 10, 8), cfg,
                       [&](const EpochRecord& e) { seen.push_back(e); });
  CHECK(seen.size() == r.history.size());
  CHECK(r.history.front().train_loss > r.history.back().train_loss);
  CHECK(r.best_dev_f1 >= 95.0);
  CHECK(entity_f1(r.best, stack, data) == doctest::Approx(r.best_dev_f1));

  // lr used during epoch k+1 is the schedule after k scores.
  std::vector<double> scores;
  for (const auto& e : r.history) scores.push_back(e.dev_f1);
  const auto trace = simulate_schedule(scores, cfg);
  for (std::size_t k = 1; k < r.history.size(); ++k) CHECK(r.history[k].lr == trace[k - 1]);

  const auto again = train(data, {}, stack, fresh(data, 10, 8), cfg);
  REQUIRE(again.history.size() == r.history.size());
  for (std::size_t k = 0; k < r.history.size(); ++k) {
    CHECK(again.history[k].train_loss == r.history[k].train_loss);
  }
}

TEST_CASE("empty training data") {
  EmbeddingStack stack = word_stack(synth::ner_document(2, 1).sentences, 4, 1);
  const std::vector<TaggedSentence> empty{TaggedSentence{}};
  Tagger t(4, {"O"}, TaggerConfig{});
  try {
    train(empty, {}, stack, t, TrainConfig{});
    FAIL("accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::EmptyDataset);
  }
}

TEST_CASE("grid search space") {
  const auto trials = enumerate_trials(SearchSpace::initial(), 0, 1);
  REQUIRE(trials.size() == 9);
  CHECK(trials[0] == TrialConfig{0.01, 8, 256, 1, 0.0});
  CHECK(trials[1] == TrialConfig{0.01, 16, 256, 1, 0.0});
  CHECK(trials[8] == TrialConfig{0.1, 32, 256, 1, 0.0});
  CHECK(enumerate_trials(SearchSpace::initial(), 4, 1).size() == 4);

  SearchSpace s;
  s.dropout_hi = 0.5;
  CHECK(enumerate_trials(s, 0, 1).size() == 18);
}

TEST_CASE("random search is seeded") {
  const auto s = SearchSpace::refined();
  CHECK(s.mode == SearchMode::Random);
  const auto a = enumerate_trials(s, 10, 3);
  CHECK(a == enumerate_trials(s, 10, 3));
  CHECK(a != enumerate_trials(s, 10, 4));
  for (const auto& t : a) {
    CHECK(t.batch == 32);
    CHECK(t.dropout >= 0.0);
    CHECK(t.dropout <= 0.5);
    CHECK((t.hidden == 256 || t.hidden == 512));
  }
  CHECK_THROWS_AS(enumerate_trials(s, 0, 1), Error);
}

TEST_CASE("search spaces validate") {
  SearchSpace s;
  s.lr.clear();
  try {
    s.validate();
    FAIL("accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::EmptySpace);
  }
  s = {};
  s.dropout_lo = 0.6;
  s.dropout_hi = 0.1;
  CHECK_THROWS_AS(s.validate(), Error);

  const auto j = nlohmann::json::parse(R"({"mode":"random","lr":[0.2],"dropout":[0.1,0.3],"max_epochs":3})");
  const auto parsed = SearchSpace::from_json(j);
  CHECK(parsed.mode == SearchMode::Random);
  CHECK(parsed.lr == std::vector<double>{0.2});
  CHECK(parsed.batch == std::vector<int>{8, 16, 32});
  CHECK(parsed.max_epochs == 3);
  CHECK_THROWS_AS(SearchSpace::from_json(nlohmann::json::parse(R"({"batch":[]})")), Error);
}

TEST_CASE("search keeps the first best trial and seeds trials in order") {
  std::vector<std::uint64_t> seeds;
  const auto r = hpo(SearchSpace::initial(), 0, 10, [&](const TrialConfig& c, std::uint64_t seed) {
    seeds.push_back(seed);
    return c.batch == 16 ? 50.0 : 10.0;
  });
  CHECK(r.trials.size() == 9);
  CHECK(r.best == TrialConfig{0.01, 16, 256, 1, 0.0});
  CHECK(r.best_dev_f1 == 50.0);
  CHECK(seeds == std::vector<std::uint64_t>{10, 11, 12, 13, 14, 15, 16, 17, 18});
  const std::string log = hpo_log(r);
  CHECK(log.rfind("trial\tlr\tbatch", 0) == 0);
  CHECK(log.find("best\t0.01\t16\t256\t1\t0\t50\n") != std::string::npos);

  const auto one = hpo(SearchSpace::initial(), 1, 1, [](const TrialConfig&, std::uint64_t) { return 1.0; });
  CHECK(one.trials.size() == 1);
}

TEST_CASE("search over real training") {
  const auto data = synth::ner_document(8, 2).sentences;
  EmbeddingStack stack = word_stack(data, 6, 1);
  SearchSpace s;
  s.lr = {0.05, 0.1};
  s.batch = {4};
  s.hidden = {4};
  s.max_epochs = 2;
  const auto r = hpo(s, 0, 1, data, {}, stack);
  CHECK(r.trials.size() == 2);
  for (const auto& t : r.trials) CHECK(t.dev_f1 >= 0.0);
}

