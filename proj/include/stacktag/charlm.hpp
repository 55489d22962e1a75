#pragma once

#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "stacktag/corpus.hpp"
#include "stacktag/nn.hpp"

namespace stacktag {

enum class Direction { Forward, Backward };

std::string_view to_string(Direction d);
Direction parse_direction(std::string_view s);

struct CharLmConfig {
  int hidden = 128;
  int char_dim = 32;
  int seq_len = 64;
  double lr = 0.01;  // Adam step size
  int epochs = 10;
  double clip = 5.0;
  std::uint64_t seed = 1;
};

// Character vocabulary; id 0 is the unknown character.
class CharVocab {
 public:
  CharVocab() = default;
  explicit CharVocab(const std::u32string& corpus);
  explicit CharVocab(std::vector<char32_t> chars);

  int id(char32_t c) const;
  std::size_t size() const { return chars_.size() + 1; }
  const std::vector<char32_t>& chars() const { return chars_; }

 private:
  std::vector<char32_t> chars_;
  std::unordered_map<char32_t, int> index_;
};

class CharLM {
 public:
  CharLM() = default;
  CharLM(CharVocab vocab, int char_dim, int hidden, Direction direction);

  void init(Rng& rng);

  Direction direction() const { return direction_; }
  int hidden_dim() const { return lstm_.hidden_dim(); }
  int char_dim() const { return static_cast<int>(embedding_.value.rows()); }
  const CharVocab& vocab() const { return vocab_; }
  TensorRefs params() {
    return {&embedding_, &lstm_.wx, &lstm_.wh, &lstm_.b, &proj_w_, &proj_b_};
  }
  ConstTensorRefs params() const {
    return {&embedding_, &lstm_.wx, &lstm_.wh, &lstm_.b, &proj_w_, &proj_b_};
  }

  // Cross-entropy summed over next-character predictions of `ids`
  // (inputs ids[0..n-2], targets ids[1..n-1]); adds gradients to the
  // parameters when `backprop`. State is carried through h/c (updated).
  double window_loss(const std::vector<int>& ids, Vector& h, Vector& c, bool backprop);

  // Softmax distribution over the next character after consuming `ids`.
  Vector next_distribution(const std::vector<int>& ids) const;

  // Per-character perplexity of `text` read in this model's direction.
  double perplexity(std::u32string_view text) const;

  // Hidden state after each character of `ids` (hidden x n).
  Matrix hidden_states(const std::vector<int>& ids) const;

  // Encodes text, reversed for backward models.
  std::vector<int> encode(std::u32string_view text) const;

 private:
  Matrix embed(const std::vector<int>& ids, std::size_t count) const;

  CharVocab vocab_;
  Direction direction_ = Direction::Forward;
  Tensor embedding_;  // char_dim x |V|
  Lstm lstm_;
  Tensor proj_w_;  // |V| x hidden
  Tensor proj_b_;  // |V| x 1
};

struct CharLmTrainResult {
  CharLM model;
  std::vector<double> epoch_loss;
  double final_perplexity = 0.0;
};

// Truncated BPTT over consecutive seq_len windows of the (direction-ordered)
// character stream, Adam updates, global-norm clipping.
CharLmTrainResult train_char_lm(std::string_view corpus, const CharLmConfig& config,
                                Direction direction);

// Tokens joined by single spaces; each token's [start, end) in the
// rendered string is returned alongside.
std::u32string render_sentence(const std::vector<Token>& tokens,
                               std::vector<std::pair<std::size_t, std::size_t>>* spans);

// Per-token contextual string embeddings (h_fwd + h_bwd) x T: forward state
// at the token's last character, backward state at its first character.
// Both models read a leading newline as sentence-start context.
Matrix extract_cse(const std::vector<Token>& tokens, const CharLM& fwd, const CharLM& bwd);

enum class PoolOp { Min, Max, Mean };

std::string_view to_string(PoolOp op);
PoolOp parse_pool(std::string_view s);

// Per-word aggregates over every contextual instance seen so far.
class PceMemory {
 public:
  struct Aggregate {
    std::size_t count = 0;
    Vector sum;
    Vector compensation;  // Kahan residual of sum
    Vector min;
    Vector max;
  };

  void update(const std::string& word, const Vector& v);
  Vector pooled(const std::string& word, PoolOp op) const;
  const Aggregate* find(const std::string& word) const;
  std::size_t size() const { return words_.size(); }
  void reset() { words_.clear(); }

 private:
  std::unordered_map<std::string, Aggregate> words_;
};

// For each token: fold its vector into the memory, then emit
// concat(current, pooled over all instances including the current one).
Matrix pce_embed(const std::vector<Token>& tokens, const Matrix& cse, PceMemory& memory,
                 PoolOp op);

}  // namespace stacktag
