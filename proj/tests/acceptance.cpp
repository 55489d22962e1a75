// Acceptance runner: one PASS/FAIL line per criterion, exit status 0 only if
// every criterion passes.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <memory>
#include <sstream>

#include "fixture_path.hpp"
#include "oracles.hpp"
#include "stacktag/bpe.hpp"
#include "stacktag/charlm.hpp"
#include "stacktag/container.hpp"
#include "stacktag/corpus.hpp"
#include "stacktag/crf.hpp"
#include "stacktag/evaluate.hpp"
#include "stacktag/sentence_split.hpp"
#include "stacktag/stack.hpp"
#include "stacktag/tagger.hpp"
#include "stacktag/trainer.hpp"
#include "synthetic.hpp"

using namespace stacktag;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

// ---------------------------------------------------------------- 1

Outcome crf_exactness() {
  oracle::Gen g(2024);
  double worst_logz = 0.0, worst_score = 0.0;
  int path_mismatch = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int steps = g.integer(1, 5), l = g.integer(1, 4);
    const Matrix em = g.matrix(steps, l, 3.0);
    Matrix trans = g.matrix(l + 2, l + 2, 2.0);
    crf::mask_transitions(trans);
    const auto ref = oracle::enumerate(em, trans);
    worst_logz = std::max(worst_logz, std::abs(crf::log_partition(em, trans) - ref.log_z));
    const auto vit = crf::viterbi(em, trans);
    if (vit.tags != ref.best) ++path_mismatch;
    worst_score = std::max(worst_score, std::abs(vit.score - ref.best_score));
  }
  std::ostringstream d;
  d << "200 instances, max |logZ diff| " << worst_logz << ", viterbi path mismatches "
    << path_mismatch << ", max score diff " << worst_score;
  return {worst_logz <= 1e-9 && path_mismatch == 0 && worst_score <= 1e-9, d.str()};
}

// ---------------------------------------------------------------- 2

double worst_over(const TensorRefs& params, const std::function<double()>& loss) {
  double worst = 0.0;
  for (Tensor* p : params) {
    const Matrix analytic = p->grad;
    worst = std::max(worst, oracle::check_tensor(p->value, analytic, loss));
  }
  return worst;
}

Outcome gradient_fidelity() {
  oracle::Gen g(7);

  // (a) BiLSTM-CRF, h=4, L=3, T=3.
  TaggerConfig tc;
  tc.hidden = 4;
  Tagger tagger(5, {"O", "B-X", "I-X"}, tc);
  Rng rng(7);
  tagger.init(rng);
  for (Tensor* p : tagger.params()) {
    if (p->name == "crf.transitions") {
      p->value += g.matrix(5, 5, 0.5);
      crf::mask_transitions(p->value);
    }
  }
  const Matrix x = g.matrix(3, 5);
  const std::vector<int> gold{0, 1, 2};
  zero_grads(tagger.params());
  tagger.loss_and_grad(x, gold);
  const double a = worst_over(tagger.params(), [&] { return tagger.loss(x, gold); });

  // (b) character LM, h=8.
  CharLM lm(CharVocab(std::vector<char32_t>{U'a', U'b', U'c'}), 3, 8, Direction::Forward);
  Rng lm_rng(8);
  lm.init(lm_rng);
  const std::vector<int> ids{1, 2, 3, 1, 1, 3, 2};
  auto lm_loss = [&] {
    Vector h = Vector::Zero(8), c = Vector::Zero(8);
    return lm.window_loss(ids, h, c, false);
  };
  zero_grads(lm.params());
  {
    Vector h = Vector::Zero(8), c = Vector::Zero(8);
    lm.window_loss(ids, h, c, true);
  }
  const double b = worst_over(lm.params(), lm_loss);

  // (c) negative sampling over a five-word vocabulary.
  Matrix vocab_out = g.matrix(4, 5), input = g.matrix(4, 1);
  Matrix outs(4, 4);
  const int targets[] = {2, 0, 4, 1};
  for (int k = 0; k < 4; ++k) outs.col(k) = vocab_out.col(targets[k]);
  const std::vector<int> labels{1, 0, 0, 0};
  Vector d_in;
  Matrix d_outs;
  negative_sampling_loss(input.col(0), outs, labels, &d_in, &d_outs);
  auto ns = [&] { return negative_sampling_loss(input.col(0), outs, labels, nullptr, nullptr); };
  const double c = std::max(oracle::check_tensor(input, d_in, ns), oracle::check_tensor(outs, d_outs, ns));

  std::ostringstream d;
  d << "max rel error: tagger " << a << ", char LM " << b << ", negative sampling " << c;
  return {a <= 1e-4 && b <= 1e-4 && c <= 1e-4, d.str()};
}

// ---------------------------------------------------------------- 3

struct MemorizationRun {
  double f1 = 0.0;
  int epochs = 0;
  std::vector<double> losses;
};

MemorizationRun memorize(std::uint64_t seed) {
  const auto doc = synth::ner_document(50, 11);
  const auto& data = doc.sentences;

  CharLmConfig lc;
  lc.hidden = 32;
  lc.char_dim = 16;
  lc.seq_len = 50;
  lc.epochs = 10;
  lc.seed = seed;
  CharLM fwd = train_char_lm(doc.text, lc, Direction::Forward).model;
  CharLM bwd = train_char_lm(doc.text, lc, Direction::Backward).model;

  Corpus corpus;
  for (const auto& s : data) {
    corpus.emplace_back();
    for (const auto& t : s.tokens) corpus.back().push_back(t.surface);
  }
  SkipGramConfig sc;
  sc.dim = 20;
  sc.min_count = 1;
  sc.epochs = 20;
  sc.seed = seed;

  EmbeddingStack stack;
  stack.add(std::make_unique<CseEmbedder>(std::move(fwd), std::move(bwd)));
  stack.add(std::make_unique<WordEmbedder>(train_skipgram(corpus, sc)));

  TaggerConfig tc;
  tc.hidden = 32;
  Tagger tagger(stack.total_dim(), label_inventory(data), tc);
  Rng rng(seed);
  tagger.init(rng);
  TrainConfig cfg;
  cfg.batch = 1;
  cfg.max_epochs = 200;
  cfg.seed = seed;
  const auto r = train(data, {}, stack, std::move(tagger), cfg);

  MemorizationRun out;
  out.f1 = entity_f1(r.best, stack, data);
  out.epochs = static_cast<int>(r.history.size());
  for (const auto& e : r.history) out.losses.push_back(e.train_loss);
  return out;
}

Outcome memorization() {
  const auto first = memorize(1);
  const auto second = memorize(1);
  const bool deterministic = first.f1 == second.f1 && first.losses == second.losses;
  std::ostringstream d;
  d << "50 sentences, CSE(h=32)+skip-gram(20): train entity F1 " << format_percent(first.f1)
    << " after " << first.epochs << " epochs, rerun identical: " << (deterministic ? "yes" : "no");
  return {first.f1 >= 95.0 && first.epochs <= 200 && deterministic, d.str()};
}

// ---------------------------------------------------------------- 4

Outcome scheduler() {
  TrainConfig cfg;
  cfg.lr = 0.1;
  cfg.anneal_factor = 0.5;
  cfg.patience = 3;
  const auto trace = simulate_schedule(std::vector<double>(9, 0.5), cfg);
  const std::vector<double> expect{0.1, 0.1, 0.1, 0.1, 0.05, 0.05, 0.05, 0.05, 0.025};
  std::ostringstream d;
  d << "trace";
  for (double v : trace) d << ' ' << v;
  return {trace == expect, d.str()};
}

// ---------------------------------------------------------------- 5

Outcome corpus_round_trip() {
  namespace fs = std::filesystem;
  std::size_t entities = 0, recovered = 0;
  for (const auto& e : fs::directory_iterator(fixture("brat"))) {
    if (e.path().extension() != ".txt") continue;
    const std::string text = read_text_file(e.path().string());
    fs::path ann = e.path();
    ann.replace_extension(".ann");
    const std::string id = e.path().stem().string();
    const auto doc = parse_brat(text, read_text_file(ann.string()), id);
    const auto sents = align_bio(doc, tokenize_spans(text, split_sentences_rule(text)));
    auto back = read_conll(write_conll(sents));
    apply_offsets(back, write_offsets(sents));
    std::vector<EntityMention> decoded;
    for (const auto& s : back)
      for (const auto& m : decode_bio(s)) decoded.push_back(m);
    const auto exported = read_ann_mentions(write_brat(decoded, text), id);
    for (const auto& g : doc.entities) {
      ++entities;
      for (const auto& m : exported) {
        if (m.start == g.start && m.end == g.end && m.label == g.label) {
          ++recovered;
          break;
        }
      }
    }
  }

  const std::string fig = "tratamiento amoxicilina - clavulánico oral";
  const auto doc = parse_brat(fig, "T1\tNORM 12 37\tamoxicilina - clavulánico\n", "fig");
  const auto tagged = align_bio(doc, {tokenize(fig)});
  std::string rendered;
  for (std::size_t k = 0; k < tagged[0].tokens.size(); ++k)
    rendered += (k ? " " : "") + tagged[0].tokens[k].surface + "/" + tagged[0].tags[k];
  const std::string expect = "tratamiento/O amoxicilina/B-NORM -/I-NORM clavulánico/I-NORM oral/O";

  std::ostringstream d;
  d << recovered << "/" << entities << " fixture entities recovered; figure: " << rendered;
  return {entities >= 50 && recovered == entities && rendered == expect, d.str()};
}

// ---------------------------------------------------------------- 6

Outcome bpe_oracle() {
  const std::map<std::string, std::size_t> toy{{"low", 5}, {"lower", 2}, {"newest", 6}, {"widest", 3}};
  const auto table = bpe::learn(toy, 23);
  std::vector<std::pair<std::vector<std::string>, int>> words;
  for (const auto& [w, f] : toy) words.emplace_back(bpe::initial_symbols(w), static_cast<int>(f));
  const bool merges_ok = table.merges == oracle::bpe_merges(words, 23) && table.merges.size() == 12;

  oracle::Gen g(6);
  std::map<std::string, std::size_t> freq;
  for (int i = 0; i < 300; ++i) freq[oracle::utf8(g.word(1, 6))] += 3;
  const bpe::Segmenter seg(bpe::learn(freq, 400));
  int inverse_ok = 0;
  for (int i = 0; i < 1000; ++i) {
    const std::string w = oracle::utf8(g.word(1, 12));
    std::string a, b;
    for (const auto& p : seg.segment(w)) a += p;
    for (const auto& p : bpe::initial_symbols(w)) b += p;
    if (a == b) ++inverse_ok;
  }
  std::ostringstream d;
  d << "toy merges " << (merges_ok ? "match" : "differ") << " (" << table.merges.size()
    << "), inverse property " << inverse_ok << "/1000";
  return {merges_ok && inverse_ok == 1000, d.str()};
}

// ---------------------------------------------------------------- 7

Outcome pce_pooling() {
  oracle::Gen g(17);
  bool singleton = true, ordered = true, identical = true;
  for (PoolOp op : {PoolOp::Min, PoolOp::Max, PoolOp::Mean}) {
    PceMemory mem;
    const Matrix v = g.matrix(6, 1);
    const auto out = pce_embed(tokenize("x"), v, mem, op);
    Matrix expect(12, 1);
    expect << v, v;
    singleton = singleton && out == expect;
  }
  for (int seq = 0; seq < 1000; ++seq) {
    PceMemory mem;
    const int n = g.integer(1, 20);
    for (int k = 0; k < n; ++k) mem.update("w", g.matrix(5, 1, 10.0).col(0));
    const Vector lo = mem.pooled("w", PoolOp::Min), mid = mem.pooled("w", PoolOp::Mean),
                 hi = mem.pooled("w", PoolOp::Max);
    ordered = ordered && (lo.array() <= mid.array()).all() && (mid.array() <= hi.array()).all();
  }
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    PceMemory mem;
    const Vector v = g.matrix(8, 1, 100.0).col(0);
    const int k = g.integer(1, 5000);
    for (int i = 0; i < k; ++i) mem.update("w", v);
    worst = std::max(worst, (mem.pooled("w", PoolOp::Mean) - v).cwiseAbs().maxCoeff());
  }
  identical = worst <= 1e-6;
  std::ostringstream d;
  d << "singleton identity " << (singleton ? "ok" : "broken") << ", min<=mean<=max over 1000 "
    << (ordered ? "ok" : "broken") << ", identical-mean max deviation " << worst;
  return {singleton && ordered && identical, d.str()};
}

// ---------------------------------------------------------------- 8

Outcome evaluator() {
  std::vector<EntityMention> gold;
  for (std::size_t k = 0; k < 10; ++k) gold.push_back({"d", 10 * k, 10 * k + 5, "NORM"});
  std::vector<EntityMention> pred(gold.begin(), gold.begin() + 6);
  pred.push_back({"d", 60, 66, "NORM"});
  pred.push_back({"d", 70, 75, "PROTEINAS"});
  const auto r = evaluate(gold, pred);
  const std::string prf = format_percent(r.micro.precision) + "/" + format_percent(r.micro.recall) +
                          "/" + format_percent(r.micro.f1);
  Scores paper;
  paper.f1 = 90.52;
  paper.precision = 90.79;
  paper.recall = 90.30;
  const std::string triple = score_triple(paper);
  std::ostringstream d;
  d << "P/R/F1 " << prf << ", table cell \"" << triple << "\"";
  return {prf == "75.00/60.00/66.67" && triple == "90.52 / 90.79 / 90.30", d.str()};
}

// ---------------------------------------------------------------- 9

Outcome sentence_splitter() {
  EosConfig cfg;
  cfg.window = 5;
  cfg.char_dim = 8;
  cfg.hidden = 16;
  cfg.epochs = 3;
  const auto model = train_eos(synth::eos_sentences(2000, 21), cfg).model;
  const double acc = eos_accuracy(model, synth::eos_sentences(1000, 22));
  std::ostringstream d;
  d << "held-out boundary accuracy " << format_percent(100.0 * acc) << "% on 1000 sentences";
  return {acc >= 0.98, d.str()};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    Outcome (*run)();
    double limit_s;  // 0: none
  };
  const std::vector<Criterion> criteria{
      {"crf exactness", crf_exactness, 5.0},
      {"gradient fidelity", gradient_fidelity, 120.0},
      {"memorization", memorization, 600.0},
      {"scheduler", scheduler, 0.0},
      {"corpus round trip", corpus_round_trip, 0.0},
      {"bpe oracle", bpe_oracle, 0.0},
      {"pce pooling", pce_pooling, 0.0},
      {"evaluator", evaluator, 0.0},
      {"sentence splitter", sentence_splitter, 0.0}};
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (criteria[i].limit_s > 0.0 && secs > criteria[i].limit_s) {
      o.pass = false;
      o.detail += " (over the " + std::to_string(static_cast<int>(criteria[i].limit_s)) + "s limit)";
    }
    if (!o.pass) ++failed;
    std::printf("criterion %zu %-18s %s  %.2fs  %s\n", i + 1, criteria[i].name,
                o.pass ? "PASS" : "FAIL", secs, o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
