#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "stacktag/error.hpp"
#include "stacktag/nn.hpp"

namespace stacktag {

using Corpus = std::vector<std::vector<std::string>>;

class Vocab {
 public:
  // Keeps words with count >= min_count; ids ordered by descending count,
  // ties broken lexicographically.
  static Vocab build(const Corpus& corpus, std::size_t min_count);
  static Vocab from_words(std::vector<std::string> words,
                          std::vector<std::size_t> counts = {});

  std::optional<int> id(std::string_view word) const;
  const std::string& word(int id) const { return words_[static_cast<std::size_t>(id)]; }
  std::size_t count(int id) const { return counts_[static_cast<std::size_t>(id)]; }
  std::size_t size() const { return words_.size(); }
  std::size_t total_tokens() const { return total_; }
  bool empty() const { return words_.empty(); }
  const std::vector<std::string>& words() const { return words_; }
  const std::vector<std::size_t>& counts() const { return counts_; }

 private:
  std::vector<std::string> words_;
  std::vector<std::size_t> counts_;
  std::unordered_map<std::string, int> index_;
  std::size_t total_ = 0;
};

enum class EmbeddingVariant { Plain, Structured, Subword };

std::string_view to_string(EmbeddingVariant v);
EmbeddingVariant parse_variant(std::string_view s);

// Defaults follow the reference word2vec/fastText command-line tools for
// skip-gram with negative sampling.
struct SkipGramConfig {
  int dim = 300;
  int window = 5;
  int negatives = 5;
  int epochs = 5;
  double lr = 0.025;
  std::size_t min_count = 5;
  double subsample_t = 1e-3;
  std::uint64_t seed = 1;
  double ns_power = 0.75;
  // Subword options.
  int min_n = 3;
  int max_n = 6;
  std::size_t buckets = 0;  // 0 = exact n-gram dictionary

  void validate() const;
  std::map<std::string, std::string> metadata() const;
};

// Character n-grams of "<word>" for n in [min_n, max_n], in order of start
// position then length. Lengths count Unicode scalar values.
std::vector<std::string> extract_ngrams(std::string_view word, int min_n = 3,
                                        int max_n = 6);
std::size_t ngram_count(std::size_t wrapped_length, int min_n = 3, int max_n = 6);

struct SubwordIndex {
  int min_n = 3;
  int max_n = 6;
  std::size_t buckets = 0;
  std::unordered_map<std::string, int> ids;  // exact mode only
  std::vector<std::string> ngrams;           // exact mode only
  Matrix vectors;                            // dim x |N|

  std::size_t size() const { return static_cast<std::size_t>(vectors.cols()); }
  // Ids of the known n-grams of `word`; unknown n-grams are skipped.
  std::vector<int> lookup(std::string_view word) const;
  std::string sidecar() const;
};

struct EmbeddingTable {
  Vocab vocab;
  int dim = 0;
  EmbeddingVariant variant = EmbeddingVariant::Plain;
  Matrix input;  // dim x |V|; for subword tables these are whole-word units
  std::optional<SubwordIndex> subwords;
  std::map<std::string, std::string> metadata;
  std::vector<double> epoch_loss;

  // In-vocab: stored (composed, for subword) vector. OOV: n-gram sum for
  // subword tables, zero otherwise. An OOV word with no known n-gram yields
  // zero and an OovAllUnknown warning.
  Vector lookup(std::string_view word, Warnings* warnings = nullptr) const;
};

// Structured skip-gram state kept after training: one dim x |V| output
// matrix per signed offset, ordered -window..-1, +1..+window.
struct PositionalOutputs {
  int window = 0;
  std::vector<Matrix> outputs;

  int slot(int offset) const { return offset < 0 ? offset + window : window + offset - 1; }
  // Logit of `context` appearing at `offset` from `center`.
  double score(const EmbeddingTable& table, int center, int context, int offset) const;
};

Matrix init_input_matrix(int dim, std::size_t n, Rng& rng);

// Pairwise logistic loss for one input vector against k output columns with
// 0/1 labels: -sum_k [label_k log s(u_k.v) + (1-label_k) log s(-u_k.v)].
// Gradients are written (not accumulated) when the pointers are non-null.
double negative_sampling_loss(const Vector& input, const Matrix& outputs,
                              const std::vector<int>& labels, Vector* d_input,
                              Matrix* d_outputs);

EmbeddingTable train_skipgram(const Corpus& corpus, const SkipGramConfig& config);
EmbeddingTable train_structured_skipgram(const Corpus& corpus, const SkipGramConfig& config,
                                         PositionalOutputs* outputs = nullptr);
EmbeddingTable train_subword_skipgram(const Corpus& corpus, const SkipGramConfig& config);

// word2vec text format: "count dim" header then "word v1 ... vdim" rows.
std::string save_word2vec(const Vocab& vocab, const Matrix& vectors);
std::string save_word2vec(const EmbeddingTable& table);
EmbeddingTable load_word2vec(std::string_view content);

// Subword tables persist as three texts: materialised word vectors, the
// "ngram<TAB>id" sidecar, and n-gram vectors in word2vec format.
struct SubwordFiles {
  std::string words;
  std::string ngram_ids;
  std::string ngram_vectors;
};
SubwordFiles save_subword(const EmbeddingTable& table);
EmbeddingTable load_subword(const SubwordFiles& files);

}  // namespace stacktag
