#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "stacktag/charlm.hpp"
#include "stacktag/nn.hpp"

namespace stacktag {

struct EosConfig {
  std::u32string candidates = U".?!:;";
  int window = 5;
  int char_dim = 16;
  int hidden = 32;
  double threshold = 0.5;
  double lr = 0.01;
  int epochs = 5;
  std::uint64_t seed = 1;
};

// Reserved padding character for windows running off the text.
inline constexpr char32_t kPadChar = 0x0;

struct EosCandidate {
  std::size_t position = 0;
  std::u32string left;   // exactly `window` chars, left-padded
  std::u32string right;  // exactly `window` chars, right-padded
};

std::vector<EosCandidate> extract_candidates(std::u32string_view text,
                                             const std::u32string& candidates, int window);

// Character-window LSTM binary classifier. The sequence read is the left
// window, the candidate character, then the right window.
class EosModel {
 public:
  EosModel() = default;
  EosModel(CharVocab vocab, const EosConfig& config);

  void init(Rng& rng);

  double classify(const EosCandidate& cand, char32_t candidate_char) const;

  // Binary cross-entropy for one example; accumulates gradients if asked.
  double example_loss(const EosCandidate& cand, char32_t candidate_char, double label,
                      bool backprop);

  const EosConfig& config() const { return config_; }
  const CharVocab& vocab() const { return vocab_; }
  TensorRefs params() { return {&embedding_, &lstm_.wx, &lstm_.wh, &lstm_.b, &head_w_, &head_b_}; }
  ConstTensorRefs params() const {
    return {&embedding_, &lstm_.wx, &lstm_.wh, &lstm_.b, &head_w_, &head_b_};
  }
  double threshold() const { return config_.threshold; }
  void set_threshold(double t) { config_.threshold = t; }

 private:
  std::vector<int> encode(const EosCandidate& cand, char32_t candidate_char) const;

  CharVocab vocab_;
  EosConfig config_;
  Tensor embedding_;
  Lstm lstm_;
  Tensor head_w_;  // 1 x hidden
  Tensor head_b_;  // 1 x 1
};

struct EosTrainResult {
  EosModel model;
  double train_accuracy = 0.0;
  double heldout_accuracy = 0.0;
};

// Sentences are joined by single spaces; a candidate is positive iff it is
// the final character of a sentence. The last tenth of the sentences (at
// least one) is held out for the reported accuracy.
EosTrainResult train_eos(const std::vector<std::string>& sentences, const EosConfig& config);

// Candidate-level accuracy on text built from `sentences` as in training.
double eos_accuracy(const EosModel& model, const std::vector<std::string>& sentences);

using Span = std::pair<std::size_t, std::size_t>;

std::vector<Span> split_sentences(std::string_view text, const EosModel& model);

// Fallback: break after '.', '?' or '!' followed by whitespace and an
// uppercase letter.
std::vector<Span> split_sentences_rule(std::string_view text);

}  // namespace stacktag
