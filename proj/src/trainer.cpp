#include "stacktag/trainer.hpp"

#include <limits>
#include <numeric>

#include "stacktag/evaluate.hpp"

namespace stacktag {

void TrainConfig::validate() const {
  if (!(anneal_factor > 0.0 && anneal_factor < 1.0)) {
    throw Error(ErrorKind::InvalidFlag, "anneal factor must lie in (0, 1)");
  }
  if (patience < 0) throw Error(ErrorKind::InvalidFlag, "patience must be >= 0");
  if (batch < 1) throw Error(ErrorKind::InvalidFlag, "batch size must be >= 1");
  if (lr <= 0.0) throw Error(ErrorKind::InvalidFlag, "learning rate must be positive");
  if (max_epochs < 1) throw Error(ErrorKind::InvalidFlag, "max epochs must be >= 1");
}

AnnealScheduler::AnnealScheduler(double lr, double factor, int patience, double min_lr)
    : lr_(lr), factor_(factor), patience_(patience), min_lr_(min_lr),
      best_(-std::numeric_limits<double>::infinity()) {}

bool AnnealScheduler::step(double dev_score) {
  if (dev_score > best_) {
    best_ = dev_score;
    bad_epochs_ = 0;
    return true;
  }
  if (++bad_epochs_ > patience_) {
    lr_ *= factor_;
    bad_epochs_ = 0;
  }
  return false;
}

std::vector<double> simulate_schedule(const std::vector<double>& dev_scores,
                                      const TrainConfig& config) {
  AnnealScheduler sched(config.lr, config.anneal_factor, config.patience, config.min_lr);
  std::vector<double> trace;
  for (double s : dev_scores) {
    sched.step(s);
    trace.push_back(sched.lr());
    if (sched.finished()) break;
  }
  return trace;
}

double entity_f1(const Tagger& tagger, EmbeddingStack& stack,
                 const std::vector<TaggedSentence>& sentences) {
  std::vector<EntityMention> gold, pred;
  auto as_index_mentions = [](const std::vector<std::string>& tags, std::size_t sid,
                              std::vector<EntityMention>& out) {
    TaggedSentence s;
    s.tags = tags;
    for (std::size_t t = 0; t < tags.size(); ++t) s.tokens.push_back({"", t, t + 1});
    for (auto m : decode_bio(s)) {
      m.doc_id = std::to_string(sid);
      out.push_back(m);
    }
  };
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    const auto& s = sentences[i];
    if (s.tokens.empty()) continue;
    as_index_mentions(s.tags, i, gold);
    as_index_mentions(repair_bio(tagger.decode_tags(stack.embed(s.tokens))), i, pred);
  }
  return evaluate(gold, pred).micro.f1;
}

TrainResult train(const std::vector<TaggedSentence>& train_set,
                  const std::vector<TaggedSentence>& dev, EmbeddingStack& stack,
                  Tagger tagger, const TrainConfig& config,
                  const std::function<void(const EpochRecord&)>& on_epoch) {
  config.validate();
  std::vector<std::size_t> usable;
  for (std::size_t i = 0; i < train_set.size(); ++i) {
    if (!train_set[i].tokens.empty()) usable.push_back(i);
  }
  if (usable.empty()) throw Error(ErrorKind::EmptyDataset, "training set has no tokens");

  std::vector<std::vector<int>> gold(train_set.size());
  for (std::size_t i : usable) gold[i] = tagger.tag_ids(train_set[i].tags);

  // Static stacks are embedded once; pooled ones change as their memory
  // fills, so they are re-embedded every epoch in presentation order.
  std::vector<Matrix> cache(train_set.size());
  if (!stack.stateful()) {
    for (std::size_t i : usable) cache[i] = stack.embed(train_set[i].tokens);
  }

  Rng rng(config.seed);
  AnnealScheduler sched(config.lr, config.anneal_factor, config.patience, config.min_lr);
  TrainResult result;
  result.best = tagger;
  result.best_dev_f1 = -1.0;
  const auto params = tagger.params();
  const auto& scoring = dev.empty() ? train_set : dev;

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    stack.begin_epoch();
    if (config.shuffle) rng.shuffle(usable.begin(), usable.end());
    EpochRecord rec;
    rec.epoch = epoch;
    rec.lr = sched.lr();
    for (std::size_t b = 0; b < usable.size(); b += static_cast<std::size_t>(config.batch)) {
      const std::size_t e = std::min(usable.size(), b + static_cast<std::size_t>(config.batch));
      zero_grads(params);
      for (std::size_t k = b; k < e; ++k) {
        const std::size_t i = usable[k];
        const Matrix x = stack.stateful() ? stack.embed(train_set[i].tokens) : cache[i];
        rec.train_loss += tagger.loss_and_grad(x, gold[i], &rng);
      }
      const double scale = 1.0 / static_cast<double>(e - b);
      for (Tensor* p : params) p->grad *= scale;
      if (config.clip > 0.0) clip_grads(params, config.clip);
      sgd_step(params, sched.lr());
    }
    rec.train_loss /= static_cast<double>(usable.size());
    rec.dev_f1 = entity_f1(tagger, stack, scoring);
    rec.improved = sched.step(rec.dev_f1);
    if (rec.improved) {
      result.best = tagger;
      result.best_dev_f1 = rec.dev_f1;
      result.best_epoch = epoch;
    }
    result.history.push_back(rec);
    if (on_epoch) on_epoch(rec);
    if (sched.finished()) break;
  }
  return result;
}

}  // namespace stacktag
