#pragma once

#include <functional>
#include <vector>

#include "stacktag/corpus.hpp"
#include "stacktag/stack.hpp"
#include "stacktag/tagger.hpp"

namespace stacktag {

struct TrainConfig {
  double lr = 0.1;
  int batch = 32;
  double anneal_factor = 0.5;
  int patience = 3;
  int max_epochs = 150;
  double min_lr = 1e-4;
  std::uint64_t seed = 1;
  bool shuffle = true;
  double clip = 5.0;  // global gradient norm; <= 0 disables

  void validate() const;
};

// Anneals the learning rate once the number of consecutive epochs without
// a dev improvement exceeds `patience`. The counter resets on improvement
// and on every anneal.
class AnnealScheduler {
 public:
  AnnealScheduler(double lr, double factor, int patience, double min_lr);

  // Records one epoch's dev score; returns true if it is a new best.
  bool step(double dev_score);

  double lr() const { return lr_; }
  int bad_epochs() const { return bad_epochs_; }
  double best() const { return best_; }
  bool finished() const { return lr_ < min_lr_; }

 private:
  double lr_;
  double factor_;
  int patience_;
  double min_lr_;
  double best_;
  int bad_epochs_ = 0;
};

// Learning rate after each epoch for a given dev-score sequence, stopping
// early once the rate falls below min_lr.
std::vector<double> simulate_schedule(const std::vector<double>& dev_scores,
                                      const TrainConfig& config);

struct EpochRecord {
  int epoch = 0;
  double lr = 0.0;  // rate used during the epoch
  double train_loss = 0.0;
  double dev_f1 = 0.0;
  bool improved = false;
};

struct TrainResult {
  Tagger best;
  double best_dev_f1 = 0.0;
  int best_epoch = 0;
  std::vector<EpochRecord> history;
};

// Entity-level micro F1 (percent) of the tagger's Viterbi output, mentions
// keyed by sentence and token index.
double entity_f1(const Tagger& tagger, EmbeddingStack& stack,
                 const std::vector<TaggedSentence>& sentences);

// Mini-batch SGD with annealing. `tagger` must already be initialised;
// when `dev` is empty the schedule follows training-set F1.
TrainResult train(const std::vector<TaggedSentence>& train_set,
                  const std::vector<TaggedSentence>& dev, EmbeddingStack& stack,
                  Tagger tagger, const TrainConfig& config,
                  const std::function<void(const EpochRecord&)>& on_epoch = {});

}  // namespace stacktag
