#pragma once

#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "stacktag/embeddings.hpp"

namespace stacktag::bpe {

// Word-initial marker carried by the first piece of every word.
inline constexpr std::string_view kMarker = "_";

using Pair = std::pair<std::string, std::string>;

struct MergeTable {
  std::vector<Pair> merges;  // learning order
  std::size_t target_vocab_size = 0;
  std::size_t base_symbols = 0;

  std::string save() const;
  static MergeTable load(std::string_view content);
};

// Symbols a word starts from: lowercased code points, marker fused onto
// the first one ("_a", "m", "o", ...).
std::vector<std::string> initial_symbols(std::string_view word);

// Merges the most frequent adjacent pair (ties: lexicographically smallest
// pair) until |base symbols| + |merges| reaches the target or no pair occurs
// at least twice.
MergeTable learn(const std::map<std::string, std::size_t>& word_freq,
                 std::size_t target_vocab_size);

std::map<std::string, std::size_t> word_frequencies(const Corpus& corpus);

class Segmenter {
 public:
  explicit Segmenter(const MergeTable& table);

  // Applies merges in learned order to the marked, lowercased word.
  std::vector<std::string> segment(std::string_view word) const;

 private:
  std::vector<Pair> merges_;
  std::map<Pair, std::size_t> rank_;
};

enum class Pooling { Mean, FirstLast };

struct PieceTable {
  Vocab pieces;
  Matrix vectors;  // dim x |P|
  Vector unknown;

  int dim() const { return static_cast<int>(vectors.rows()); }
  static PieceTable from_embeddings(const EmbeddingTable& table);
};

// Mean pooling gives dim components, first+last concatenation 2*dim.
Vector token_vector(std::string_view word, const Segmenter& segmenter,
                    const PieceTable& table, Pooling pooling = Pooling::Mean);

}  // namespace stacktag::bpe
