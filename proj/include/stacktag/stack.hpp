#pragma once

#include <memory>
#include <string>
#include <vector>

#include "stacktag/bpe.hpp"
#include "stacktag/charlm.hpp"
#include "stacktag/container.hpp"
#include "stacktag/corpus.hpp"
#include "stacktag/embeddings.hpp"
#include "stacktag/sentence_split.hpp"

namespace stacktag {

// One member of an embedding stack. embed() returns T x dim(), one row per
// token.
class Embedder {
 public:
  virtual ~Embedder() = default;

  virtual std::string kind() const = 0;
  virtual int dim() const = 0;
  virtual Matrix embed(const std::vector<Token>& tokens) = 0;

  // True when embed() depends on earlier calls (pooled memory).
  virtual bool stateful() const { return false; }
  virtual void begin_epoch() {}

  virtual void save(ModelArchive& archive, const std::string& prefix,
                    nlohmann::json& entry) const = 0;
};

class WordEmbedder : public Embedder {
 public:
  explicit WordEmbedder(EmbeddingTable table) : table_(std::move(table)) {}

  std::string kind() const override { return "word"; }
  int dim() const override { return table_.dim; }
  Matrix embed(const std::vector<Token>& tokens) override;
  void save(ModelArchive& archive, const std::string& prefix,
            nlohmann::json& entry) const override;

  const EmbeddingTable& table() const { return table_; }

 private:
  EmbeddingTable table_;
};

class BpeEmbedder : public Embedder {
 public:
  BpeEmbedder(bpe::MergeTable merges, bpe::PieceTable pieces,
              bpe::Pooling pooling = bpe::Pooling::Mean);

  std::string kind() const override { return "bpe"; }
  int dim() const override;
  Matrix embed(const std::vector<Token>& tokens) override;
  void save(ModelArchive& archive, const std::string& prefix,
            nlohmann::json& entry) const override;

 private:
  bpe::MergeTable merges_;
  bpe::Segmenter segmenter_;
  bpe::PieceTable pieces_;
  bpe::Pooling pooling_;
};

// Contextual string embeddings without pooling.
class CseEmbedder : public Embedder {
 public:
  CseEmbedder(CharLM fwd, CharLM bwd) : fwd_(std::move(fwd)), bwd_(std::move(bwd)) {}

  std::string kind() const override { return "cse"; }
  int dim() const override { return fwd_.hidden_dim() + bwd_.hidden_dim(); }
  Matrix embed(const std::vector<Token>& tokens) override;
  void save(ModelArchive& archive, const std::string& prefix,
            nlohmann::json& entry) const override;

 protected:
  CharLM fwd_;
  CharLM bwd_;
};

// Pooled contextual embeddings. The memory resets at the start of every
// training epoch and otherwise keeps accumulating.
class PceEmbedder : public CseEmbedder {
 public:
  PceEmbedder(CharLM fwd, CharLM bwd, PoolOp op) : CseEmbedder(std::move(fwd), std::move(bwd)), op_(op) {}

  std::string kind() const override { return "pce"; }
  int dim() const override { return 2 * CseEmbedder::dim(); }
  Matrix embed(const std::vector<Token>& tokens) override;
  bool stateful() const override { return true; }
  void begin_epoch() override { memory_.reset(); }
  void save(ModelArchive& archive, const std::string& prefix,
            nlohmann::json& entry) const override;

  PceMemory& memory() { return memory_; }

 private:
  PoolOp op_;
  PceMemory memory_;
};

class EmbeddingStack {
 public:
  void add(std::unique_ptr<Embedder> e) { members_.push_back(std::move(e)); }

  int total_dim() const;
  std::size_t size() const { return members_.size(); }
  bool empty() const { return members_.empty(); }
  bool stateful() const;
  Embedder& at(std::size_t i) { return *members_[i]; }
  std::vector<std::string> kinds() const;

  // T x total_dim, member blocks concatenated in insertion order. Throws
  // DimensionMismatch if a member returns the wrong width or row count.
  Matrix embed(const std::vector<Token>& tokens);
  void begin_epoch();

  void save(ModelArchive& archive, const std::string& prefix) const;
  static EmbeddingStack load(const ModelArchive& archive, const std::string& prefix);

 private:
  std::vector<std::unique_ptr<Embedder>> members_;
};

// Component (de)serialisation into a ModelArchive under a tensor-name
// prefix; the manifest entry describes shapes and vocabularies.
void save_char_lm(const CharLM& lm, ModelArchive& archive, const std::string& prefix,
                  nlohmann::json& entry);
CharLM load_char_lm(const ModelArchive& archive, const std::string& prefix,
                    const nlohmann::json& entry);
void save_embedding_table(const EmbeddingTable& table, ModelArchive& archive,
                          const std::string& prefix, nlohmann::json& entry);
EmbeddingTable load_embedding_table(const ModelArchive& archive, const std::string& prefix,
                                    const nlohmann::json& entry);
void save_eos_model(const EosModel& model, ModelArchive& archive);
EosModel load_eos_model(const ModelArchive& archive);

// Standalone archives holding one model.
ModelArchive char_lm_archive(const CharLM& lm);
CharLM char_lm_from_archive(const ModelArchive& archive);

// Builds a stack from a textual description: comma-separated members, each
// "kind:arg[:arg...]":
//   word:FILE.vec                      word2vec text table
//   subword:PREFIX                     PREFIX.vec, PREFIX.ngrams, PREFIX.ngram.vec
//   bpe:MERGES:PIECES.vec[:mean|firstlast]
//   cse:FWD.lm:BWD.lm                  character LM archives
//   pce:min|max|mean:FWD.lm:BWD.lm
EmbeddingStack build_stack(const std::string& spec);

}  // namespace stacktag
