#include "stacktag/tagger.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "stacktag/crf.hpp"

namespace stacktag {

namespace {

Matrix reversed_cols(const Matrix& m) { return m.rowwise().reverse(); }

}  // namespace

std::vector<std::string> label_inventory(const std::vector<TaggedSentence>& sentences) {
  std::set<std::string> seen;
  for (const auto& s : sentences) seen.insert(s.tags.begin(), s.tags.end());
  seen.erase("O");
  std::vector<std::string> out{"O"};
  out.insert(out.end(), seen.begin(), seen.end());
  return out;
}

Tagger::Tagger(int input_dim, std::vector<std::string> labels, const TaggerConfig& config)
    : input_dim_(input_dim), labels_(std::move(labels)), config_(config) {
  const int d = input_dim_;
  const int h = config_.hidden;
  const int l = num_tags();
  if (config_.projection) {
    proj_w_ = Tensor("proj.w", d, d);
    proj_b_ = Tensor("proj.b", d, 1);
  }
  for (int k = 0; k < config_.layers; ++k) {
    const int in = k == 0 ? d : 2 * h;
    const std::string p = "lstm" + std::to_string(k);
    layers_.push_back({Lstm(p + ".fwd.", in, h), Lstm(p + ".bwd.", in, h)});
  }
  emit_w_ = Tensor("emit.w", l, 2 * h);
  emit_b_ = Tensor("emit.b", l, 1);
  trans_ = Tensor("crf.transitions", l + 2, l + 2);
  crf::mask_transitions(trans_.value);
}

void Tagger::init(Rng& rng) {
  if (config_.projection) {
    init_uniform(proj_w_, std::sqrt(1.0 / input_dim_), rng);
    proj_b_.value.setZero();
  }
  for (auto& layer : layers_) {
    layer.fwd.init(rng);
    layer.bwd.init(rng);
  }
  init_uniform(emit_w_, std::sqrt(1.0 / (2 * config_.hidden)), rng);
  emit_b_.value.setZero();
  trans_.value = crf::init_transitions(num_tags(), &rng);
}

TensorRefs Tagger::params() {
  TensorRefs out;
  if (config_.projection) out = {&proj_w_, &proj_b_};
  for (auto& layer : layers_) {
    for (Tensor* t : layer.fwd.params()) out.push_back(t);
    for (Tensor* t : layer.bwd.params()) out.push_back(t);
  }
  out.insert(out.end(), {&emit_w_, &emit_b_, &trans_});
  return out;
}

ConstTensorRefs Tagger::params() const {
  ConstTensorRefs out;
  for (Tensor* t : const_cast<Tagger*>(this)->params()) out.push_back(t);
  return out;
}

Matrix Tagger::project(const Matrix& xt) const {
  if (!config_.projection) return xt;
  return (proj_w_.value * xt).colwise() + proj_b_.value.col(0);
}

Matrix Tagger::encode(const Matrix& x) const {
  Matrix in = project(x.transpose());
  const int h = config_.hidden;
  const Vector zero = Vector::Zero(h);
  for (const auto& layer : layers_) {
    Matrix out(2 * h, in.cols());
    out.topRows(h) = lstm_infer(layer.fwd, in, zero, zero);
    out.bottomRows(h) = reversed_cols(lstm_infer(layer.bwd, reversed_cols(in), zero, zero));
    in = std::move(out);
  }
  return ((emit_w_.value * in).colwise() + emit_b_.value.col(0)).transpose();
}

double Tagger::loss_and_grad(const Matrix& x, const std::vector<int>& gold, Rng* dropout_rng) {
  const int h = config_.hidden;
  const auto steps = x.rows();
  const Vector zero = Vector::Zero(h);
  const Matrix xt = x.transpose();

  Matrix in = project(xt);
  Matrix mask;
  if (dropout_rng != nullptr && config_.dropout > 0.0) {
    const double keep = 1.0 - config_.dropout;
    mask.resize(in.rows(), in.cols());
    for (Eigen::Index j = 0; j < mask.cols(); ++j)
      for (Eigen::Index i = 0; i < mask.rows(); ++i)
        mask(i, j) = dropout_rng->uniform(0.0, 1.0) < keep ? 1.0 / keep : 0.0;
    in = in.cwiseProduct(mask);
  }

  std::vector<LstmTrace> fwd, bwd;
  for (const auto& layer : layers_) {
    fwd.push_back(lstm_forward(layer.fwd, in, zero, zero));
    bwd.push_back(lstm_forward(layer.bwd, reversed_cols(in), zero, zero));
    Matrix out(2 * h, steps);
    out.topRows(h) = fwd.back().h;
    out.bottomRows(h) = reversed_cols(bwd.back().h);
    in = std::move(out);
  }
  const Matrix emissions = ((emit_w_.value * in).colwise() + emit_b_.value.col(0)).transpose();

  Matrix d_em = Matrix::Zero(steps, num_tags());
  const double loss = crf::nll_backward(emissions, trans_.value, gold, d_em, trans_.grad);
  crf::mask_transition_grad(trans_.grad);

  const Matrix d_em_t = d_em.transpose();
  emit_w_.grad += d_em_t * in.transpose();
  emit_b_.grad += d_em_t.rowwise().sum();
  Matrix d_in = emit_w_.value.transpose() * d_em_t;

  for (std::size_t k = layers_.size(); k-- > 0;) {
    const Matrix d_f = lstm_backward(layers_[k].fwd, fwd[k], d_in.topRows(h));
    const Matrix d_b = lstm_backward(layers_[k].bwd, bwd[k], reversed_cols(d_in.bottomRows(h)));
    d_in = d_f + reversed_cols(d_b);
  }
  if (mask.size() > 0) d_in = d_in.cwiseProduct(mask);
  if (config_.projection) {
    proj_w_.grad += d_in * xt.transpose();
    proj_b_.grad += d_in.rowwise().sum();
  }
  return loss;
}

double Tagger::loss(const Matrix& x, const std::vector<int>& gold) const {
  return crf::nll(encode(x), trans_.value, gold);
}

std::vector<int> Tagger::decode(const Matrix& x) const {
  if (x.rows() == 0) return {};
  return crf::viterbi(encode(x), trans_.value).tags;
}

std::vector<std::string> Tagger::decode_tags(const Matrix& x) const {
  std::vector<std::string> out;
  for (int id : decode(x)) out.push_back(labels_[static_cast<std::size_t>(id)]);
  return out;
}

std::vector<int> Tagger::tag_ids(const std::vector<std::string>& tags) const {
  std::vector<int> out;
  out.reserve(tags.size());
  for (const auto& t : tags) {
    auto it = std::find(labels_.begin(), labels_.end(), t);
    if (it == labels_.end()) throw Error(ErrorKind::InvalidTagIndex, "tag " + t + " not in inventory");
    out.push_back(static_cast<int>(it - labels_.begin()));
  }
  return out;
}

void Tagger::save(ModelArchive& archive) const {
  nlohmann::json entry;
  entry["input_dim"] = input_dim_;
  entry["labels"] = labels_;
  entry["hidden"] = config_.hidden;
  entry["layers"] = config_.layers;
  entry["dropout"] = config_.dropout;
  entry["projection"] = config_.projection;
  archive.manifest["tagger"] = entry;
  store_params(archive, "tagger.", params());
}

Tagger Tagger::load(const ModelArchive& archive) {
  if (!archive.manifest.contains("tagger")) {
    throw Error(ErrorKind::ModelMissingComponent, "model manifest has no tagger");
  }
  const auto& e = archive.manifest.at("tagger");
  TaggerConfig cfg;
  cfg.hidden = e.at("hidden");
  cfg.layers = e.at("layers");
  cfg.dropout = e.at("dropout");
  cfg.projection = e.at("projection");
  Tagger tagger(e.at("input_dim").get<int>(), e.at("labels").get<std::vector<std::string>>(), cfg);
  load_params(archive, "tagger.", tagger.params());
  return tagger;
}

}  // namespace stacktag
