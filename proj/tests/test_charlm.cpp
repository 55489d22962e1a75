#include <doctest.h>

#include "oracles.hpp"
#include "stacktag/charlm.hpp"
#include "stacktag/stack.hpp"
#include "stacktag/utf8.hpp"

using namespace stacktag;

namespace {

CharLM tiny(Direction d, std::uint64_t seed) {
  CharLM lm(CharVocab(std::vector<char32_t>{U'a', U'b', U'c'}), 3, 8, d);
  Rng rng(seed);
  lm.init(rng);
  return lm;
}

std::vector<Token> tokens_of(const std::string& s) { return tokenize(s); }

std::string repeat(const std::string& unit, std::size_t total_chars) {
  std::string out;
  while (out.size() < total_chars) out += unit;
  return out.substr(0, total_chars);
}

}  // namespace

TEST_CASE("char lm gradient, h=8, 3-char vocab") {
  CharLM lm = tiny(Direction::Forward, 1);
  const std::vector<int> ids{1, 2, 3, 1, 1, 3, 2};
  oracle::Gen g(2);
  const Vector h0 = g.matrix(8, 1, 0.5).col(0), c0 = g.matrix(8, 1, 0.5).col(0);
  auto loss = [&] {
    Vector h = h0, c = c0;
    return lm.window_loss(ids, h, c, false);
  };
  zero_grads(lm.params());
  Vector h = h0, c = c0;
  lm.window_loss(ids, h, c, true);
  for (Tensor* p : lm.params()) {
    const Matrix analytic = p->grad;
    INFO(p->name);
    CHECK(oracle::check_tensor(p->value, analytic, loss) <= 1e-4);
  }
}

TEST_CASE("softmax rows sum to one") {
  const CharLM lm = tiny(Direction::Forward, 3);
  for (const auto& ids : std::vector<std::vector<int>>{{}, {1}, {3, 2, 1, 0}}) {
    const Vector p = lm.next_distribution(ids);
    CHECK(p.size() == 4);
    CHECK(p.sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(p.minCoeff() >= 0.0);
  }
}

TEST_CASE("untrained model is near uniform") {
  const std::u32string chars = U"abcdefghijklmnopqrstuvwxyz";
  CharLM lm(CharVocab(chars), 8, 16, Direction::Forward);
  Rng rng(1);
  lm.init(rng);
  oracle::Gen g(7);
  std::u32string text;
  for (int i = 0; i < 2000; ++i) text.push_back(chars[static_cast<std::size_t>(g.integer(0, 25))]);
  // 26 letters + unknown.
  const double v = static_cast<double>(lm.vocab().size());
  CHECK(lm.perplexity(text) == doctest::Approx(v).epsilon(0.10));
}

TEST_CASE("periodic corpus becomes predictable") {
  CharLmConfig cfg;
  cfg.hidden = 32;
  cfg.char_dim = 8;
  cfg.seq_len = 32;
  cfg.epochs = 3;
  cfg.lr = 0.01;
  const std::string corpus = repeat("abc", 10000);
  const auto r = train_char_lm(corpus, cfg, Direction::Forward);
  CHECK(r.final_perplexity <= 1.1);
  CHECK(r.epoch_loss.front() > r.epoch_loss.back());

  const auto again = train_char_lm(corpus, cfg, Direction::Forward);
  CHECK(again.epoch_loss == r.epoch_loss);
}

TEST_CASE("backward model reads reversed text") {
  CharLmConfig cfg;
  cfg.hidden = 16;
  cfg.char_dim = 8;
  cfg.seq_len = 16;
  cfg.epochs = 2;
  const auto r = train_char_lm(repeat("abcd", 2000), cfg, Direction::Backward);
  const auto& lm = r.model;
  CHECK(lm.encode(U"abc") == std::vector<int>{lm.vocab().id(U'c'), lm.vocab().id(U'b'), lm.vocab().id(U'a')});
  // After reading "dc" backwards the next character is 'b'.
  const Vector p = lm.next_distribution(lm.encode(U"cd"));
  Eigen::Index best;
  p.maxCoeff(&best);
  CHECK(best == lm.vocab().id(U'b'));
}

TEST_CASE("too little text") {
  CharLmConfig cfg;
  cfg.seq_len = 64;
  CHECK_THROWS_AS(train_char_lm(std::string(127, 'a'), cfg, Direction::Forward), Error);
}

TEST_CASE("cse picks the boundary states") {
  const CharLM fwd = tiny(Direction::Forward, 4);
  const CharLM bwd = tiny(Direction::Backward, 5);
  const auto toks = tokens_of("ab c");
  const Matrix cse = extract_cse(toks, fwd, bwd);
  REQUIRE(cse.rows() == 16);
  REQUIRE(cse.cols() == 2);

  // Forward reads "\nab c"; token "ab" ends at index 2, "c" at index 4.
  const Matrix fs = fwd.hidden_states(fwd.encode(U"\nab c"));
  CHECK(cse.col(0).head(8) == fs.col(2));
  CHECK(cse.col(1).head(8) == fs.col(4));
  // Backward reads "\nc ba"; "c" starts at index 1, "ab" begins at index 4.
  const Matrix bs = bwd.hidden_states(bwd.encode(U"ab c\n"));
  CHECK(cse.col(1).tail(8) == bs.col(1));
  CHECK(cse.col(0).tail(8) == bs.col(4));

  const Matrix single = extract_cse(tokens_of("a"), fwd, bwd);
  CHECK(single.cols() == 1);
  CHECK(single.allFinite());
}

TEST_CASE("same word, different context, different vector") {
  const CharLM fwd = tiny(Direction::Forward, 6);
  const CharLM bwd = tiny(Direction::Backward, 7);
  const Matrix a = extract_cse(tokens_of("a b"), fwd, bwd);
  const Matrix b = extract_cse(tokens_of("c b"), fwd, bwd);
  CHECK((a.col(1) - b.col(1)).norm() > 1e-9);
}

TEST_CASE("pooling arithmetic") {
  PceMemory mem;
  Vector v(2), w(2);
  v << 0.0, 2.0;
  w << 2.0, 0.0;
  mem.update("x", v);
  for (PoolOp op : {PoolOp::Min, PoolOp::Max, PoolOp::Mean}) CHECK(mem.pooled("x", op) == v);
  mem.update("x", w);
  CHECK(mem.pooled("x", PoolOp::Mean) == Eigen::Vector2d(1.0, 1.0));
  CHECK(mem.pooled("x", PoolOp::Min) == Eigen::Vector2d(0.0, 0.0));
  CHECK(mem.pooled("x", PoolOp::Max) == Eigen::Vector2d(2.0, 2.0));
  CHECK(mem.find("x")->count == 2);
  CHECK(mem.find("y") == nullptr);
}

TEST_CASE("pce output and memory lifecycle") {
  const auto toks = tokens_of("a b a");
  Matrix cse(2, 3);
  cse << 1, 2, 3,
         4, 5, 6;
  PceMemory mem;
  const Matrix out = pce_embed(toks, cse, mem, PoolOp::Mean);
  REQUIRE(out.rows() == 4);
  CHECK(out.col(0) == Eigen::Vector4d(1, 4, 1, 4));
  CHECK(out.col(1) == Eigen::Vector4d(2, 5, 2, 5));
  CHECK(out.col(2) == Eigen::Vector4d(3, 6, 2, 5));
  CHECK(mem.find("a")->count == 2);

  // Second document: "b" recurs, "c" does not.
  const auto doc2 = tokens_of("b c");
  Matrix cse2(2, 2);
  cse2 << 7, 8,
          9, 10;
  PceMemory fresh;
  const Matrix carried = pce_embed(doc2, cse2, mem, PoolOp::Mean);
  const Matrix reset = pce_embed(doc2, cse2, fresh, PoolOp::Mean);
  CHECK(carried.col(0) != reset.col(0));
  CHECK(carried.col(1) == reset.col(1));

  mem.reset();
  mem.reset();
  CHECK(mem.size() == 0);
  const Matrix again = pce_embed(tokens_of("a"), cse.col(2), mem, PoolOp::Max);
  CHECK(again.col(0) == Eigen::Vector4d(3, 6, 3, 6));
}

TEST_CASE("pce embedder resets at epoch start") {
  PceEmbedder e(tiny(Direction::Forward, 1), tiny(Direction::Backward, 2), PoolOp::Mean);
  CHECK(e.dim() == 32);
  CHECK(e.stateful());
  e.embed(tokens_of("a b"));
  CHECK(e.memory().size() == 2);
  e.begin_epoch();
  CHECK(e.memory().size() == 0);
}

TEST_CASE("char lm archive round trip") {
  const CharLM lm = tiny(Direction::Backward, 9);
  const CharLM back = char_lm_from_archive(ModelArchive::parse(char_lm_archive(lm).serialize()));
  CHECK(back.direction() == Direction::Backward);
  CHECK(back.hidden_states(back.encode(U"abcab")) == lm.hidden_states(lm.encode(U"abcab")));
}

