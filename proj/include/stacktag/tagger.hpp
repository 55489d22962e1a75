#pragma once

#include <string>
#include <vector>

#include "stacktag/container.hpp"
#include "stacktag/corpus.hpp"
#include "stacktag/nn.hpp"

namespace stacktag {

struct TaggerConfig {
  int hidden = 256;  // per direction
  int layers = 1;
  double dropout = 0.0;  // applied after the projection, training only
  bool projection = true;
};

// Tag inventory of a training set: "O" first, the rest sorted.
std::vector<std::string> label_inventory(const std::vector<TaggedSentence>& sentences);

// projection -> dropout -> stacked BiLSTM -> affine emissions -> linear-chain
// CRF. Inputs are T x input_dim matrices, one row per token.
class Tagger {
 public:
  Tagger() = default;
  Tagger(int input_dim, std::vector<std::string> labels, const TaggerConfig& config);

  void init(Rng& rng);

  int input_dim() const { return input_dim_; }
  int num_tags() const { return static_cast<int>(labels_.size()); }
  const std::vector<std::string>& labels() const { return labels_; }
  const TaggerConfig& config() const { return config_; }

  // Inference-mode emissions, T x L.
  Matrix encode(const Matrix& x) const;

  // CRF negative log-likelihood of `gold`; adds gradients of every
  // parameter. Dropout is sampled from `dropout_rng` when it is given and
  // the rate is positive.
  double loss_and_grad(const Matrix& x, const std::vector<int>& gold, Rng* dropout_rng = nullptr);
  double loss(const Matrix& x, const std::vector<int>& gold) const;

  std::vector<int> decode(const Matrix& x) const;
  std::vector<std::string> decode_tags(const Matrix& x) const;

  // Throws InvalidTagIndex for a tag outside the inventory.
  std::vector<int> tag_ids(const std::vector<std::string>& tags) const;

  const Matrix& transitions() const { return trans_.value; }
  TensorRefs params();
  ConstTensorRefs params() const;

  void save(ModelArchive& archive) const;
  static Tagger load(const ModelArchive& archive);

 private:
  struct Layer {
    Lstm fwd;
    Lstm bwd;
  };

  Matrix project(const Matrix& xt) const;

  int input_dim_ = 0;
  std::vector<std::string> labels_;
  TaggerConfig config_;
  Tensor proj_w_;  // D x D
  Tensor proj_b_;  // D x 1
  std::vector<Layer> layers_;
  Tensor emit_w_;  // L x 2h
  Tensor emit_b_;  // L x 1
  Tensor trans_;   // (L+2) x (L+2)
};

}  // namespace stacktag
