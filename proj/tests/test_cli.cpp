#include <doctest.h>

#include <filesystem>
#include <sstream>

#include "fixture_path.hpp"
#include "stacktag/cli.hpp"
#include "stacktag/evaluate.hpp"
#include "synthetic.hpp"

using namespace stacktag;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& rel) const { return (path / rel).string(); }
};

void write(const std::string& path, const std::string& content) {
  fs::create_directories(fs::path(path).parent_path());
  std::ofstream(path, std::ios::binary) << content;
}

std::string read(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool error_line(const std::string& err, const std::string& kind) {
  return err.find("error\t" + kind + "\t") != std::string::npos;
}

}  // namespace

TEST_CASE("version and help") {
  const auto v = run({"--version"});
  CHECK(v.code == 0);
  CHECK(v.out == "stacktag 0.1.0\n");
  const auto h = run({"--help"});
  CHECK(h.code == 0);
  for (const auto& name : subcommands()) CHECK(h.out.find(name) != std::string::npos);
  CHECK(run({"eval", "--help"}).code == 0);
}

TEST_CASE("usage errors exit 2 with one error line") {
  for (const auto& args : std::vector<std::vector<std::string>>{{}, {"frobnicate"}, {"--verbose"}}) {
    const auto r = run(args);
    CHECK(r.code == 2);
    CHECK(error_line(r.err, "UnknownSubcommand"));
  }
  for (const auto& args : std::vector<std::vector<std::string>>{
           {"tag", "--in", "x.txt"},
           {"eval", "--gold", "a"},
           {"train-embed", "--corpus", "c", "--out", "o", "--dim", "many"},
           {"segment", "--merges", "m", "--in", "i", "--bogus", "1"}}) {
    const auto r = run(args);
    CHECK(r.code == 2);
    CHECK(error_line(r.err, "InvalidFlag"));
    CHECK(std::count(r.err.begin(), r.err.end(), '\n') == 1);
  }
}

TEST_CASE("runtime failures exit 1") {
  const auto r = run({"eval", "--gold", "/nonexistent/a.ann", "--pred", "/nonexistent/b.ann"});
  CHECK(r.code == 1);
  CHECK(r.err.rfind("error\t", 0) == 0);
}

TEST_CASE("convert then export-brat reproduces the fixtures") {
  TempDir tmp("stacktag_cli_convert");
  const auto c = run({"convert", "--txt-dir", fixture("brat"), "--out", tmp / "conll"});
  REQUIRE(c.code == 0);
  CHECK(c.out.find("documents=8") != std::string::npos);
  const auto e = run({"export-brat", "--conll", tmp / "conll", "--txt", fixture("brat"),
                      "--out-ann", tmp / "ann"});
  REQUIRE(e.code == 0);

  const auto ev = run({"eval", "--gold", fixture("brat"), "--pred", tmp / "ann", "--summary",
                       tmp / "summary.txt"});
  REQUIRE(ev.code == 0);
  CHECK(ev.out.find("model    100.00     100.00  100.00") != std::string::npos);
  const auto summary = read(tmp / "summary.txt");
  CHECK(summary.rfind("tp=54\nfp=0\nfn=0\n", 0) == 0);
  CHECK(summary.find("f1=100.00\n") != std::string::npos);
}

TEST_CASE("eval compares conll directories too") {
  TempDir tmp("stacktag_cli_eval");
  REQUIRE(run({"convert", "--txt-dir", fixture("brat"), "--out", tmp / "a"}).code == 0);
  const auto r = run({"eval", "--gold", fixture("brat"), "--pred", tmp / "a", "--name", "conll"});
  CHECK(r.code == 0);
  CHECK(r.out.find("conll    100.00     100.00  100.00") != std::string::npos);
}

TEST_CASE("bpe commands") {
  TempDir tmp("stacktag_cli_bpe");
  write(tmp / "corpus.txt", "low low low low low lower lower newest newest newest newest newest "
                            "newest widest widest widest\n");
  const auto l = run({"learn-bpe", "--corpus", tmp / "corpus.txt", "--vocab-size", "23", "--out",
                      tmp / "merges.txt"});
  REQUIRE(l.code == 0);
  write(tmp / "in.txt", "lowest newest\n");
  const auto s = run({"segment", "--merges", tmp / "merges.txt", "--in", tmp / "in.txt"});
  REQUIRE(s.code == 0);
  CHECK(s.out.find("_low est") != std::string::npos);
  CHECK(s.out.find("_newest") != std::string::npos);
}

TEST_CASE("train, tag and eval end to end") {
  TempDir tmp("stacktag_cli_train");
  const auto doc = synth::ner_document(20, 4);
  write(tmp / "train.conll", write_conll(doc.sentences));
  write(tmp / "words.vec", save_word2vec(synth::word_table(doc.sentences, 10, 1)));
  const std::vector<std::string> train_args{
      "train", "--train", tmp / "train.conll", "--stack", "word:" + (tmp / "words.vec"),
      "--out", tmp / "model.stk", "--hidden", "8", "--batch", "1", "--max-epochs", "40",
      "--seed", "3"};
  const auto t = run(train_args);
  REQUIRE(t.code == 0);

  write(tmp / "txt/doc.txt", doc.text);
  write(tmp / "gold/doc.ann", synth::ann_text(doc));
  const auto g = run({"tag", "--model", tmp / "model.stk", "--in", tmp / "txt", "--out-ann",
                      tmp / "pred"});
  REQUIRE(g.code == 0);
  const auto gold = read_ann_mentions(read(tmp / "gold/doc.ann"), "doc");
  const auto pred = read_ann_mentions(read(tmp / "pred/doc.ann"), "doc");
  CHECK(evaluate(gold, pred).micro.f1 >= 95.0);

  // Same seed, same bytes.
  const auto first = read(tmp / "model.stk");
  auto again = train_args;
  again[6] = tmp / "model2.stk";
  REQUIRE(run(again).code == 0);
  CHECK(read(tmp / "model2.stk") == first);

  const auto missing = run({"tag", "--model", tmp / "nope.stk", "--in", tmp / "txt", "--out-ann",
                            tmp / "x"});
  CHECK(missing.code == 1);
}
