#include <doctest.h>

#include "oracles.hpp"
#include "stacktag/crf.hpp"
#include "stacktag/tagger.hpp"

using namespace stacktag;

namespace {

const std::vector<std::string> kLabels{"O", "B-NORM", "I-NORM"};

Tagger toy(int input_dim, int hidden, int layers, bool projection, std::uint64_t seed) {
  TaggerConfig cfg;
  cfg.hidden = hidden;
  cfg.layers = layers;
  cfg.projection = projection;
  Tagger t(input_dim, kLabels, cfg);
  Rng rng(seed);
  t.init(rng);
  // Random transitions so the CRF gradient is not trivially symmetric.
  oracle::Gen g(seed);
  Matrix trans = t.transitions() + g.matrix(5, 5, 0.5);
  crf::mask_transitions(trans);
  for (Tensor* p : t.params())
    if (p->name == "crf.transitions") p->value = trans;
  return t;
}

// Worst relative error over every entry of every parameter tensor.
double gradient_check(Tagger& tagger, const Matrix& x, const std::vector<int>& gold) {
  zero_grads(tagger.params());
  tagger.loss_and_grad(x, gold);
  double worst = 0.0;
  for (Tensor* p : tagger.params()) {
    const Matrix analytic = p->grad;
    const double err = oracle::check_tensor(p->value, analytic, [&] { return tagger.loss(x, gold); });
    INFO(p->name << " rel error " << err);
    CHECK(err <= 1e-4);
    worst = std::max(worst, err);
  }
  return worst;
}

}  // namespace

TEST_CASE("toy tagger gradients, h=4 L=3 T=3") {
  oracle::Gen g(1);
  Tagger t = toy(5, 4, 1, true, 7);
  const Matrix x = g.matrix(3, 5);
  CHECK(gradient_check(t, x, {0, 1, 2}) <= 1e-4);
}

TEST_CASE("two layers without projection") {
  oracle::Gen g(2);
  Tagger t = toy(3, 4, 2, false, 9);
  CHECK(gradient_check(t, g.matrix(4, 3), {1, 2, 0, 0}) <= 1e-4);
}

TEST_CASE("parameter inventory") {
  Tagger t = toy(6, 4, 2, true, 1);
  std::vector<std::string> names;
  for (Tensor* p : t.params()) names.push_back(p->name);
  CHECK(names == std::vector<std::string>{"proj.w", "proj.b", "lstm0.fwd.wx", "lstm0.fwd.wh",
                                          "lstm0.fwd.b", "lstm0.bwd.wx", "lstm0.bwd.wh",
                                          "lstm0.bwd.b", "lstm1.fwd.wx", "lstm1.fwd.wh",
                                          "lstm1.fwd.b", "lstm1.bwd.wx", "lstm1.bwd.wh",
                                          "lstm1.bwd.b", "emit.w", "emit.b", "crf.transitions"});
  for (Tensor* p : t.params()) {
    if (p->name == "lstm1.fwd.wx") CHECK(p->value.cols() == 8);
    if (p->name == "emit.w") CHECK(p->value.rows() == 3);
    if (p->name == "emit.w") CHECK(p->value.cols() == 8);
  }
}

TEST_CASE("encode shapes and the affine identity") {
  Tagger t = toy(4, 3, 1, true, 3);
  CHECK(t.encode(Matrix::Zero(1, 4)).rows() == 1);
  CHECK(t.encode(Matrix::Zero(1, 4)).cols() == 3);
  CHECK(t.encode(Matrix::Zero(1, 4)).allFinite());

  for (Tensor* p : t.params()) {
    if (p->name == "emit.b") p->value << 0.5, -1.0, 2.0;
    else if (p->name != "crf.transitions") p->value.setZero();
  }
  const Matrix em = t.encode(Matrix::Zero(2, 4));
  CHECK(em.row(0) == Eigen::RowVector3d(0.5, -1.0, 2.0));
  CHECK(em.row(1) == Eigen::RowVector3d(0.5, -1.0, 2.0));
}

TEST_CASE("emissions depend on context in both directions") {
  oracle::Gen g(4);
  Tagger t = toy(3, 4, 1, true, 5);
  const Matrix x = g.matrix(3, 3);
  const Matrix em = t.encode(x);
  Matrix reversed = x.colwise().reverse();
  const Matrix em_rev = t.encode(reversed).colwise().reverse();
  CHECK((em - em_rev).cwiseAbs().maxCoeff() > 1e-6);

  // Changing only the last token alters the first token's emission.
  Matrix x2 = x;
  x2.row(2) += Eigen::RowVector3d::Ones();
  CHECK((t.encode(x2).row(0) - em.row(0)).cwiseAbs().maxCoeff() > 1e-9);
}

TEST_CASE("forbidden transitions never receive gradient") {
  oracle::Gen g(6);
  Tagger t = toy(3, 4, 1, true, 2);
  zero_grads(t.params());
  t.loss_and_grad(g.matrix(3, 3), {0, 1, 2});
  for (Tensor* p : t.params()) {
    if (p->name != "crf.transitions") continue;
    CHECK(p->grad.col(crf::start_index(3)).isZero());
    CHECK(p->grad.row(crf::stop_index(3)).isZero());
  }
}

TEST_CASE("dropout only acts when sampling is requested") {
  oracle::Gen g(8);
  TaggerConfig cfg;
  cfg.hidden = 4;
  cfg.dropout = 0.5;
  Tagger t(3, kLabels, cfg);
  Rng init(1);
  t.init(init);
  const Matrix x = g.matrix(3, 3);
  const double clean = t.loss(x, {0, 1, 2});
  zero_grads(t.params());
  CHECK(t.loss_and_grad(x, {0, 1, 2}) == doctest::Approx(clean).epsilon(1e-12));
  Rng drop(3);
  zero_grads(t.params());
  CHECK(t.loss_and_grad(x, {0, 1, 2}, &drop) != doctest::Approx(clean).epsilon(1e-6));
}

TEST_CASE("tag ids and label inventory") {
  const std::vector<TaggedSentence> data{{{}, {"B-X", "O", "I-X"}}, {{}, {"B-A"}}};
  CHECK(label_inventory(data) == std::vector<std::string>{"O", "B-A", "B-X", "I-X"});
  Tagger t = toy(2, 2, 1, true, 1);
  CHECK(t.tag_ids({"O", "I-NORM"}) == std::vector<int>{0, 2});
  CHECK_THROWS_AS(t.tag_ids({"B-OTHER"}), Error);
}

TEST_CASE("save and load reproduce emissions exactly") {
  oracle::Gen g(9);
  Tagger t = toy(3, 4, 2, true, 4);
  ModelArchive a;
  t.save(a);
  const Tagger back = Tagger::load(ModelArchive::parse(a.serialize()));
  const Matrix x = g.matrix(5, 3);
  CHECK(back.encode(x) == t.encode(x));
  CHECK(back.labels() == t.labels());
  CHECK_THROWS_AS(Tagger::load(ModelArchive{}), Error);
}
