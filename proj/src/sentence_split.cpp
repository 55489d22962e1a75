#include "stacktag/sentence_split.hpp"

#include <algorithm>
#include <cmath>

#include "stacktag/utf8.hpp"

namespace stacktag {

std::vector<EosCandidate> extract_candidates(std::u32string_view text,
                                             const std::u32string& candidates, int window) {
  std::vector<EosCandidate> out;
  const auto w = static_cast<std::size_t>(window);
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (candidates.find(text[i]) == std::u32string::npos) continue;
    EosCandidate cand;
    cand.position = i;
    cand.left.assign(w, kPadChar);
    cand.right.assign(w, kPadChar);
    for (std::size_t k = 0; k < w; ++k) {
      if (i >= w - k) cand.left[k] = text[i - (w - k)];
      if (i + 1 + k < text.size()) cand.right[k] = text[i + 1 + k];
    }
    out.push_back(std::move(cand));
  }
  return out;
}

EosModel::EosModel(CharVocab vocab, const EosConfig& config)
    : vocab_(std::move(vocab)),
      config_(config),
      embedding_("embedding", config.char_dim, static_cast<Eigen::Index>(vocab_.size())),
      lstm_("lstm.", config.char_dim, config.hidden),
      head_w_("head.w", 1, config.hidden),
      head_b_("head.b", 1, 1) {}

void EosModel::init(Rng& rng) {
  init_uniform(embedding_, 0.1, rng);
  lstm_.init(rng);
  init_uniform(head_w_, std::sqrt(1.0 / config_.hidden), rng);
  head_b_.value.setZero();
}

std::vector<int> EosModel::encode(const EosCandidate& cand, char32_t candidate_char) const {
  std::vector<int> ids;
  ids.reserve(cand.left.size() + cand.right.size() + 1);
  for (char32_t c : cand.left) ids.push_back(vocab_.id(c));
  ids.push_back(vocab_.id(candidate_char));
  for (char32_t c : cand.right) ids.push_back(vocab_.id(c));
  return ids;
}

double EosModel::classify(const EosCandidate& cand, char32_t candidate_char) const {
  const auto ids = encode(cand, candidate_char);
  Matrix x(config_.char_dim, static_cast<Eigen::Index>(ids.size()));
  for (std::size_t t = 0; t < ids.size(); ++t) {
    x.col(static_cast<Eigen::Index>(t)) = embedding_.value.col(ids[t]);
  }
  const Vector zero = Vector::Zero(config_.hidden);
  Vector h;
  lstm_infer(lstm_, x, zero, zero, &h);
  return sigmoid((head_w_.value * h)(0, 0) + head_b_.value(0, 0));
}

double EosModel::example_loss(const EosCandidate& cand, char32_t candidate_char, double label,
                              bool backprop) {
  const auto ids = encode(cand, candidate_char);
  const auto steps = static_cast<Eigen::Index>(ids.size());
  Matrix x(config_.char_dim, steps);
  for (Eigen::Index t = 0; t < steps; ++t) x.col(t) = embedding_.value.col(ids[static_cast<std::size_t>(t)]);
  const Vector zero = Vector::Zero(config_.hidden);
  const LstmTrace trace = lstm_forward(lstm_, x, zero, zero);
  const Vector h = trace.h.col(steps - 1);
  const double z = (head_w_.value * h)(0, 0) + head_b_.value(0, 0);
  const double loss = z > 0 ? (1.0 - label) * z + std::log1p(std::exp(-z))
                            : -label * z + std::log1p(std::exp(z));
  if (!backprop) return loss;
  const double dz = sigmoid(z) - label;
  head_w_.grad += dz * h.transpose();
  head_b_.grad(0, 0) += dz;
  Matrix dh = Matrix::Zero(config_.hidden, steps);
  dh.col(steps - 1) = dz * head_w_.value.transpose();
  const Matrix dx = lstm_backward(lstm_, trace, dh);
  for (Eigen::Index t = 0; t < steps; ++t) embedding_.grad.col(ids[static_cast<std::size_t>(t)]) += dx.col(t);
  return loss;
}

namespace {

struct LabeledText {
  std::u32string text;
  std::vector<std::size_t> sentence_ends;  // index of each sentence's last char
};

LabeledText join_sentences(const std::vector<std::string>& sentences) {
  LabeledText out;
  for (const auto& s : sentences) {
    std::u32string chars = utf8::decode(s);
    while (!chars.empty() && utf8::is_space(chars.back())) chars.pop_back();
    std::size_t lead = 0;
    while (lead < chars.size() && utf8::is_space(chars[lead])) ++lead;
    if (lead == chars.size()) continue;
    if (!out.text.empty()) out.text.push_back(U' ');
    out.text.append(chars, lead);
    out.sentence_ends.push_back(out.text.size() - 1);
  }
  return out;
}

struct Example {
  EosCandidate cand;
  char32_t ch;
  double label;
};

std::vector<Example> make_examples(const LabeledText& lt, const EosConfig& config) {
  std::vector<Example> out;
  for (auto& cand : extract_candidates(lt.text, config.candidates, config.window)) {
    const bool positive = std::binary_search(lt.sentence_ends.begin(), lt.sentence_ends.end(),
                                             cand.position);
    const char32_t ch = lt.text[cand.position];
    out.push_back({std::move(cand), ch, positive ? 1.0 : 0.0});
  }
  return out;
}

double accuracy(const EosModel& model, const std::vector<Example>& examples) {
  if (examples.empty()) return 1.0;
  std::size_t correct = 0;
  for (const auto& ex : examples) {
    const bool predicted = model.classify(ex.cand, ex.ch) >= model.threshold();
    if (predicted == (ex.label > 0.5)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(examples.size());
}

}  // namespace

EosTrainResult train_eos(const std::vector<std::string>& sentences, const EosConfig& config) {
  if (sentences.size() < 2) {
    throw Error(ErrorKind::InsufficientData,
                "sentence boundary training needs at least 2 sentences");
  }
  const std::size_t held = std::max<std::size_t>(1, sentences.size() / 10);
  const std::vector<std::string> train(sentences.begin(), sentences.end() - static_cast<long>(held));
  const std::vector<std::string> test(sentences.end() - static_cast<long>(held), sentences.end());

  const LabeledText train_text = join_sentences(train);
  std::vector<Example> examples = make_examples(train_text, config);
  if (examples.empty()) {
    throw Error(ErrorKind::InsufficientData, "training text contains no candidate characters");
  }

  std::u32string alphabet = train_text.text;
  alphabet.push_back(kPadChar);
  alphabet += config.candidates;
  Rng rng(config.seed);
  EosTrainResult result;
  result.model = EosModel(CharVocab(alphabet), config);
  result.model.init(rng);
  const TensorRefs params = result.model.params();
  Adam adam(config.lr);

  constexpr std::size_t kBatch = 16;
  std::vector<std::size_t> order(examples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order.begin(), order.end());
    for (std::size_t b = 0; b < order.size(); b += kBatch) {
      const std::size_t e = std::min(order.size(), b + kBatch);
      zero_grads(params);
      for (std::size_t k = b; k < e; ++k) {
        const auto& ex = examples[order[k]];
        result.model.example_loss(ex.cand, ex.ch, ex.label, true);
      }
      for (Tensor* p : params) p->grad /= static_cast<double>(e - b);
      clip_grads(params, 5.0);
      adam.step(params);
    }
  }
  result.train_accuracy = accuracy(result.model, examples);
  result.heldout_accuracy = eos_accuracy(result.model, test);
  return result;
}

double eos_accuracy(const EosModel& model, const std::vector<std::string>& sentences) {
  return accuracy(model, make_examples(join_sentences(sentences), model.config()));
}

namespace {

std::vector<Span> spans_from_breaks(const std::u32string& chars,
                                    const std::vector<std::size_t>& breaks) {
  std::vector<Span> spans;
  std::size_t begin = 0;
  auto emit = [&](std::size_t from, std::size_t to) {
    while (from < to && utf8::is_space(chars[from])) ++from;
    while (to > from && utf8::is_space(chars[to - 1])) --to;
    if (from < to) spans.emplace_back(from, to);
  };
  for (std::size_t b : breaks) {
    emit(begin, b + 1);
    begin = b + 1;
  }
  emit(begin, chars.size());
  return spans;
}

}  // namespace

std::vector<Span> split_sentences(std::string_view text, const EosModel& model) {
  const std::u32string chars = utf8::decode(text);
  std::vector<std::size_t> breaks;
  for (const auto& cand : extract_candidates(chars, model.config().candidates,
                                             model.config().window)) {
    if (model.classify(cand, chars[cand.position]) >= model.threshold()) {
      breaks.push_back(cand.position);
    }
  }
  return spans_from_breaks(chars, breaks);
}

std::vector<Span> split_sentences_rule(std::string_view text) {
  const std::u32string chars = utf8::decode(text);
  std::vector<std::size_t> breaks;
  for (std::size_t i = 0; i + 2 < chars.size(); ++i) {
    if (chars[i] != U'.' && chars[i] != U'?' && chars[i] != U'!') continue;
    std::size_t j = i + 1;
    if (!utf8::is_space(chars[j])) continue;
    while (j < chars.size() && utf8::is_space(chars[j])) ++j;
    if (j < chars.size() && utf8::is_upper(chars[j])) breaks.push_back(i);
  }
  return spans_from_breaks(chars, breaks);
}

}  // namespace stacktag
