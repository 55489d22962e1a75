#include "stacktag/charlm.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "stacktag/utf8.hpp"

namespace stacktag {

std::string_view to_string(Direction d) { return d == Direction::Forward ? "fwd" : "bwd"; }

Direction parse_direction(std::string_view s) {
  if (s == "fwd" || s == "forward") return Direction::Forward;
  if (s == "bwd" || s == "backward") return Direction::Backward;
  throw Error(ErrorKind::InvalidFlag, "direction must be fwd or bwd, got " + std::string(s));
}

std::string_view to_string(PoolOp op) {
  switch (op) {
    case PoolOp::Min: return "min";
    case PoolOp::Max: return "max";
    case PoolOp::Mean: return "mean";
  }
  return "mean";
}

PoolOp parse_pool(std::string_view s) {
  if (s == "min") return PoolOp::Min;
  if (s == "max") return PoolOp::Max;
  if (s == "mean") return PoolOp::Mean;
  throw Error(ErrorKind::InvalidFlag, "pooling must be min, max or mean, got " + std::string(s));
}

// ---------------------------------------------------------------- vocab

CharVocab::CharVocab(const std::u32string& corpus) {
  std::set<char32_t> seen(corpus.begin(), corpus.end());
  seen.insert(U'\n');
  seen.insert(U' ');
  *this = CharVocab(std::vector<char32_t>(seen.begin(), seen.end()));
}

CharVocab::CharVocab(std::vector<char32_t> chars) : chars_(std::move(chars)) {
  for (std::size_t i = 0; i < chars_.size(); ++i) {
    index_.emplace(chars_[i], static_cast<int>(i) + 1);
  }
}

int CharVocab::id(char32_t c) const {
  auto it = index_.find(c);
  return it == index_.end() ? 0 : it->second;
}

// ---------------------------------------------------------------- model

CharLM::CharLM(CharVocab vocab, int char_dim, int hidden, Direction direction)
    : vocab_(std::move(vocab)),
      direction_(direction),
      embedding_("embedding", char_dim, static_cast<Eigen::Index>(vocab_.size())),
      lstm_("lstm.", char_dim, hidden),
      proj_w_("proj.w", static_cast<Eigen::Index>(vocab_.size()), hidden),
      proj_b_("proj.b", static_cast<Eigen::Index>(vocab_.size()), 1) {}

void CharLM::init(Rng& rng) {
  init_uniform(embedding_, 0.1, rng);
  lstm_.init(rng);
  init_uniform(proj_w_, std::sqrt(1.0 / hidden_dim()), rng);
  proj_b_.value.setZero();
}

std::vector<int> CharLM::encode(std::u32string_view text) const {
  std::vector<int> ids(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) ids[i] = vocab_.id(text[i]);
  if (direction_ == Direction::Backward) std::reverse(ids.begin(), ids.end());
  return ids;
}

Matrix CharLM::embed(const std::vector<int>& ids, std::size_t count) const {
  Matrix x(char_dim(), static_cast<Eigen::Index>(count));
  for (std::size_t t = 0; t < count; ++t) {
    x.col(static_cast<Eigen::Index>(t)) = embedding_.value.col(ids[t]);
  }
  return x;
}

double CharLM::window_loss(const std::vector<int>& ids, Vector& h, Vector& c, bool backprop) {
  if (ids.size() < 2) return 0.0;
  const std::size_t steps = ids.size() - 1;
  const Matrix x = embed(ids, steps);
  const LstmTrace trace = lstm_forward(lstm_, x, h, c);
  Matrix logits = proj_w_.value * trace.h;
  logits.colwise() += proj_b_.value.col(0);

  double loss = 0.0;
  Matrix d_logits(logits.rows(), logits.cols());
  for (Eigen::Index t = 0; t < logits.cols(); ++t) {
    const double lse = log_sum_exp(logits.col(t));
    const int target = ids[static_cast<std::size_t>(t) + 1];
    loss += lse - logits(target, t);
    d_logits.col(t) = (logits.col(t).array() - lse).exp().matrix();
    d_logits(target, t) -= 1.0;
  }
  h = trace.h.col(trace.h.cols() - 1);
  c = trace.c.col(trace.c.cols() - 1);
  if (!backprop) return loss;

  proj_w_.grad.noalias() += d_logits * trace.h.transpose();
  proj_b_.grad.col(0) += d_logits.rowwise().sum();
  const Matrix dh = proj_w_.value.transpose() * d_logits;
  const Matrix dx = lstm_backward(lstm_, trace, dh);
  for (std::size_t t = 0; t < steps; ++t) {
    embedding_.grad.col(ids[t]) += dx.col(static_cast<Eigen::Index>(t));
  }
  return loss;
}

Matrix CharLM::hidden_states(const std::vector<int>& ids) const {
  const Vector zero = Vector::Zero(hidden_dim());
  return lstm_infer(lstm_, embed(ids, ids.size()), zero, zero);
}

Vector CharLM::next_distribution(const std::vector<int>& ids) const {
  const Vector zero = Vector::Zero(hidden_dim());
  Vector h = zero;
  if (!ids.empty()) lstm_infer(lstm_, embed(ids, ids.size()), zero, zero, &h);
  Vector logits = proj_w_.value * h + proj_b_.value.col(0);
  const double lse = log_sum_exp(logits);
  return (logits.array() - lse).exp();
}

double CharLM::perplexity(std::u32string_view text) const {
  const std::vector<int> ids = encode(text);
  if (ids.size() < 2) return 1.0;
  const Matrix states = hidden_states(ids);
  double nll = 0.0;
  for (std::size_t t = 0; t + 1 < ids.size(); ++t) {
    Vector logits = proj_w_.value * states.col(static_cast<Eigen::Index>(t)) + proj_b_.value.col(0);
    nll += log_sum_exp(logits) - logits(ids[t + 1]);
  }
  return std::exp(nll / static_cast<double>(ids.size() - 1));
}

CharLmTrainResult train_char_lm(std::string_view corpus, const CharLmConfig& config,
                                Direction direction) {
  const std::u32string chars = utf8::decode(corpus);
  if (config.seq_len < 2 || chars.size() < 2 * static_cast<std::size_t>(config.seq_len)) {
    throw Error(ErrorKind::InsufficientData,
                "character LM needs at least 2*seq_len=" + std::to_string(2 * config.seq_len) +
                    " characters, got " + std::to_string(chars.size()));
  }
  Rng rng(config.seed);
  CharLmTrainResult result;
  result.model = CharLM(CharVocab(chars), config.char_dim, config.hidden, direction);
  CharLM& model = result.model;
  model.init(rng);
  const std::vector<int> ids = model.encode(chars);
  const TensorRefs params = model.params();
  Adam adam(config.lr);

  const std::size_t seq = static_cast<std::size_t>(config.seq_len);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    Vector h = Vector::Zero(config.hidden), c = Vector::Zero(config.hidden);
    double total = 0.0;
    std::size_t predictions = 0;
    // Windows overlap by one character so every transition is predicted.
    for (std::size_t begin = 0; begin + 1 < ids.size(); begin += seq) {
      const std::size_t end = std::min(ids.size(), begin + seq + 1);
      const std::vector<int> window(ids.begin() + static_cast<long>(begin),
                                    ids.begin() + static_cast<long>(end));
      zero_grads(params);
      const double loss = model.window_loss(window, h, c, true);
      const double n = static_cast<double>(window.size() - 1);
      for (Tensor* p : params) p->grad /= n;
      clip_grads(params, config.clip);
      adam.step(params);
      total += loss;
      predictions += window.size() - 1;
    }
    result.epoch_loss.push_back(total / static_cast<double>(predictions));
  }
  result.final_perplexity = model.perplexity(chars);
  return result;
}

// ---------------------------------------------------------------- CSE

std::u32string render_sentence(const std::vector<Token>& tokens,
                               std::vector<std::pair<std::size_t, std::size_t>>* spans) {
  std::u32string text;
  if (spans) spans->clear();
  for (std::size_t k = 0; k < tokens.size(); ++k) {
    if (k > 0) text.push_back(U' ');
    const std::size_t start = text.size();
    text += utf8::decode(tokens[k].surface);
    if (spans) spans->emplace_back(start, text.size());
  }
  return text;
}

Matrix extract_cse(const std::vector<Token>& tokens, const CharLM& fwd, const CharLM& bwd) {
  const int hf = fwd.hidden_dim();
  const int hb = bwd.hidden_dim();
  Matrix out(hf + hb, static_cast<Eigen::Index>(tokens.size()));
  if (tokens.empty()) return out;
  std::vector<std::pair<std::size_t, std::size_t>> spans;
  const std::u32string text = render_sentence(tokens, &spans);
  const std::size_t n = text.size();

  // Forward stream "\n" + text: character i of text sits at index i + 1.
  std::u32string fwd_text = U"\n" + text;
  const Matrix fwd_states = fwd.hidden_states(fwd.encode(fwd_text));
  // Backward stream is reverse(text + "\n") = "\n" + reverse(text):
  // character i of text sits at index n - i.
  std::u32string bwd_text = text + U"\n";
  const Matrix bwd_states = bwd.hidden_states(bwd.encode(bwd_text));

  for (std::size_t k = 0; k < tokens.size(); ++k) {
    const auto [start, end] = spans[k];
    const auto col = static_cast<Eigen::Index>(k);
    out.col(col).head(hf) = fwd_states.col(static_cast<Eigen::Index>(end));  // last char: (end-1)+1
    out.col(col).tail(hb) = bwd_states.col(static_cast<Eigen::Index>(n - start));
  }
  return out;
}

// ---------------------------------------------------------------- PCE

void PceMemory::update(const std::string& word, const Vector& v) {
  auto& agg = words_[word];
  if (agg.count == 0) {
    agg.sum = v;
    agg.compensation = Vector::Zero(v.size());
    agg.min = v;
    agg.max = v;
  } else {
    // Kahan-compensated running sum.
    const Vector y = v - agg.compensation;
    const Vector t = agg.sum + y;
    agg.compensation = (t - agg.sum) - y;
    agg.sum = t;
    agg.min = agg.min.cwiseMin(v);
    agg.max = agg.max.cwiseMax(v);
  }
  ++agg.count;
}

const PceMemory::Aggregate* PceMemory::find(const std::string& word) const {
  auto it = words_.find(word);
  return it == words_.end() ? nullptr : &it->second;
}

Vector PceMemory::pooled(const std::string& word, PoolOp op) const {
  const Aggregate* agg = find(word);
  if (agg == nullptr) return {};
  switch (op) {
    case PoolOp::Min: return agg->min;
    case PoolOp::Max: return agg->max;
    case PoolOp::Mean: return agg->sum / static_cast<double>(agg->count);
  }
  return {};
}

Matrix pce_embed(const std::vector<Token>& tokens, const Matrix& cse, PceMemory& memory,
                 PoolOp op) {
  const Eigen::Index d = cse.rows();
  Matrix out(2 * d, cse.cols());
  for (std::size_t k = 0; k < tokens.size(); ++k) {
    const auto col = static_cast<Eigen::Index>(k);
    const Vector current = cse.col(col);
    memory.update(tokens[k].surface, current);
    out.col(col).head(d) = current;
    out.col(col).tail(d) = memory.pooled(tokens[k].surface, op);
  }
  return out;
}

}  // namespace stacktag
