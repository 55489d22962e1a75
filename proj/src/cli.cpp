#include "stacktag/cli.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>

#include "stacktag/bpe.hpp"
#include "stacktag/charlm.hpp"
#include "stacktag/evaluate.hpp"
#include "stacktag/hpo.hpp"
#include "stacktag/pipeline.hpp"
#include "stacktag/trainer.hpp"

namespace stacktag {

namespace fs = std::filesystem;

namespace {

struct HelpShown {
  std::string text;
};

void parse(CLI::App& app, const std::vector<std::string>& args) {
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    throw HelpShown{app.help()};
  } catch (const CLI::ParseError& e) {
    throw Error(ErrorKind::InvalidFlag, std::string(app.get_name()) + ": " + e.what());
  }
}

std::vector<fs::path> files_with_ext(const fs::path& dir, const std::string& ext) {
  if (!fs::is_directory(dir)) throw Error(ErrorKind::Io, "not a directory: " + dir.string());
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ext) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::vector<std::string> out;
  std::istringstream in(read_text_file(path));
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    out.push_back(line);
  }
  return out;
}

Corpus read_token_corpus(const std::string& path) {
  Corpus corpus;
  for (const auto& line : read_lines(path)) {
    std::vector<std::string> words;
    for (const auto& t : tokenize(line)) words.push_back(t.surface);
    if (!words.empty()) corpus.push_back(std::move(words));
  }
  return corpus;
}

// A CoNLL file, or every *.conll file of a directory in name order.
std::vector<TaggedSentence> read_conll_path(const std::string& path) {
  if (!fs::is_directory(path)) return read_conll(read_text_file(path));
  std::vector<TaggedSentence> all;
  for (const auto& f : files_with_ext(path, ".conll")) {
    auto part = read_conll(read_text_file(f.string()));
    all.insert(all.end(), part.begin(), part.end());
  }
  return all;
}

void print_warnings(const Warnings& warnings, std::ostream& err) {
  for (const auto& w : warnings) err << "warning\t" << w.kind << '\t' << w.message << '\n';
}

std::optional<EosModel> maybe_eos(const std::string& path) {
  if (path.empty()) return std::nullopt;
  return load_eos_model(ModelArchive::load_file(path));
}

// ---------------------------------------------------------------- corpus

int cmd_convert(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app("Convert brat documents to CoNLL with offset sidecars", "convert");
  std::string txt_dir, ann_dir, out_dir, split_model;
  bool keep_longest = false;
  app.add_option("--txt-dir", txt_dir, "directory of .txt files")->required();
  app.add_option("--ann-dir", ann_dir, "directory of .ann files (default: --txt-dir)");
  app.add_option("--out", out_dir, "output directory")->required();
  app.add_option("--split-model", split_model, "sentence boundary model");
  app.add_flag("--keep-longest", keep_longest, "drop the shorter of overlapping entities");
  parse(app, args);
  if (ann_dir.empty()) ann_dir = txt_dir;
  const auto eos = maybe_eos(split_model);
  fs::create_directories(out_dir);

  std::size_t docs = 0, sentences = 0, entities = 0;
  Warnings warnings;
  for (const auto& txt : files_with_ext(txt_dir, ".txt")) {
    const std::string stem = txt.stem().string();
    const fs::path ann = fs::path(ann_dir) / (stem + ".ann");
    const std::string text = read_text_file(txt.string());
    const auto doc = parse_brat(text, fs::exists(ann) ? read_text_file(ann.string()) : "", stem,
                                keep_longest ? OverlapPolicy::KeepLongest : OverlapPolicy::Reject);
    const auto spans = eos ? split_sentences(text, *eos) : split_sentences_rule(text);
    const auto sents = align_bio(doc, tokenize_spans(text, spans), &warnings);
    write_text_file((fs::path(out_dir) / (stem + ".conll")).string(), write_conll(sents));
    write_text_file((fs::path(out_dir) / (stem + ".offsets")).string(), write_offsets(sents));
    ++docs;
    sentences += sents.size();
    entities += doc.entities.size();
  }
  print_warnings(warnings, err);
  out << "documents=" << docs << " sentences=" << sentences << " entities=" << entities
      << " warnings=" << warnings.size() << '\n';
  return kExitOk;
}

void export_one(const std::string& conll, const std::string& offsets, const std::string& txt,
                const std::string& out_ann) {
  auto sents = read_conll(read_text_file(conll));
  apply_offsets(sents, read_text_file(offsets));
  std::vector<EntityMention> mentions;
  for (const auto& s : sents) {
    for (const auto& m : decode_bio(s)) mentions.push_back(m);
  }
  write_text_file(out_ann, write_brat(mentions, read_text_file(txt)));
}

int cmd_export_brat(const std::vector<std::string>& args, std::ostream& out, std::ostream&) {
  CLI::App app("Write brat .ann files from CoNLL predictions", "export-brat");
  std::string conll, offsets, txt, out_ann;
  app.add_option("--conll", conll, "CoNLL file or directory")->required();
  app.add_option("--offsets", offsets, "offsets sidecar (default: beside the CoNLL file)");
  app.add_option("--txt", txt, "source text file or directory")->required();
  app.add_option("--out-ann", out_ann, ".ann output file or directory")->required();
  parse(app, args);
  if (!fs::is_directory(conll)) {
    if (offsets.empty()) offsets = fs::path(conll).replace_extension(".offsets").string();
    export_one(conll, offsets, txt, out_ann);
    out << "wrote " << out_ann << '\n';
    return kExitOk;
  }
  if (offsets.empty()) offsets = conll;
  fs::create_directories(out_ann);
  std::size_t n = 0;
  for (const auto& f : files_with_ext(conll, ".conll")) {
    const std::string stem = f.stem().string();
    export_one(f.string(), (fs::path(offsets) / (stem + ".offsets")).string(),
               (fs::path(txt) / (stem + ".txt")).string(),
               (fs::path(out_ann) / (stem + ".ann")).string());
    ++n;
  }
  out << "documents=" << n << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- splitting

int cmd_split(const std::vector<std::string>& args, std::ostream& out, std::ostream&) {
  CLI::App app("Sentence splitting; with --train, fit a boundary model", "split");
  std::string model, in, out_path, train_path;
  EosConfig cfg;
  app.add_option("--model", model, "boundary model (default: rule-based)");
  app.add_option("--in", in, "input text (or training corpus with --train)");
  app.add_option("--out", out_path, "output file (model archive with --train)");
  app.add_option("--train", train_path, "one sentence per line");
  app.add_option("--epochs", cfg.epochs);
  app.add_option("--window", cfg.window);
  app.add_option("--hidden", cfg.hidden);
  app.add_option("--lr", cfg.lr);
  app.add_option("--seed", cfg.seed);
  parse(app, args);

  if (!train_path.empty()) {
    if (out_path.empty()) throw Error(ErrorKind::InvalidFlag, "split --train needs --out");
    std::vector<std::string> sentences;
    for (auto& l : read_lines(train_path)) {
      if (!l.empty()) sentences.push_back(std::move(l));
    }
    const auto result = train_eos(sentences, cfg);
    ModelArchive archive;
    save_eos_model(result.model, archive);
    archive.save_file(out_path);
    out << "train_accuracy=" << result.train_accuracy
        << " heldout_accuracy=" << result.heldout_accuracy << '\n';
    return kExitOk;
  }
  if (in.empty()) throw Error(ErrorKind::InvalidFlag, "split needs --in");
  const std::string text = read_text_file(in);
  const auto eos = maybe_eos(model);
  std::string lines;
  for (auto [s, e] : eos ? split_sentences(text, *eos) : split_sentences_rule(text)) {
    std::string sent = slice(text, s, e);
    std::replace(sent.begin(), sent.end(), '\n', ' ');
    lines += sent + '\n';
  }
  if (out_path.empty()) out << lines;
  else write_text_file(out_path, lines);
  return kExitOk;
}

// ---------------------------------------------------------------- embeddings

int cmd_train_embed(const std::vector<std::string>& args, std::ostream& out, std::ostream&) {
  CLI::App app("Train skip-gram word embeddings", "train-embed");
  std::string variant = "plain", corpus, out_path;
  SkipGramConfig cfg;
  app.add_option("--variant", variant, "plain|structured|subword");
  app.add_option("--corpus", corpus, "tokenized text, one sentence per line")->required();
  app.add_option("--out", out_path, ".vec file (prefix for subword)")->required();
  app.add_option("--dim", cfg.dim);
  app.add_option("--window", cfg.window);
  app.add_option("--epochs", cfg.epochs);
  app.add_option("--negatives", cfg.negatives);
  app.add_option("--lr", cfg.lr);
  app.add_option("--min-count", cfg.min_count);
  app.add_option("--subsample", cfg.subsample_t);
  app.add_option("--min-n", cfg.min_n);
  app.add_option("--max-n", cfg.max_n);
  app.add_option("--buckets", cfg.buckets);
  app.add_option("--seed", cfg.seed);
  parse(app, args);

  const Corpus sentences = read_token_corpus(corpus);
  EmbeddingTable table;
  switch (parse_variant(variant)) {
    case EmbeddingVariant::Plain:
      table = train_skipgram(sentences, cfg);
      write_text_file(out_path, save_word2vec(table));
      break;
    case EmbeddingVariant::Structured:
      table = train_structured_skipgram(sentences, cfg);
      write_text_file(out_path, save_word2vec(table));
      break;
    case EmbeddingVariant::Subword: {
      table = train_subword_skipgram(sentences, cfg);
      const auto files = save_subword(table);
      write_text_file(out_path + ".vec", files.words);
      write_text_file(out_path + ".ngrams", files.ngram_ids);
      write_text_file(out_path + ".ngram.vec", files.ngram_vectors);
      break;
    }
  }
  for (std::size_t e = 0; e < table.epoch_loss.size(); ++e) {
    out << "epoch=" << e + 1 << " loss=" << table.epoch_loss[e] << '\n';
  }
  out << "vocab=" << table.vocab.size() << " dim=" << table.dim << '\n';
  return kExitOk;
}

int cmd_learn_bpe(const std::vector<std::string>& args, std::ostream& out, std::ostream&) {
  CLI::App app("Learn BPE merges and optionally piece embeddings", "learn-bpe");
  std::string corpus, out_path, embed_out;
  std::size_t vocab_size = 0;
  SkipGramConfig cfg;
  cfg.dim = 100;
  cfg.min_count = 1;
  app.add_option("--corpus", corpus)->required();
  app.add_option("--vocab-size", vocab_size, "target inventory size")->required();
  app.add_option("--out", out_path, "merges file")->required();
  app.add_option("--embed-out", embed_out, "piece embeddings (.vec)");
  app.add_option("--dim", cfg.dim);
  app.add_option("--window", cfg.window);
  app.add_option("--epochs", cfg.epochs);
  app.add_option("--seed", cfg.seed);
  parse(app, args);

  const Corpus sentences = read_token_corpus(corpus);
  const auto table = bpe::learn(bpe::word_frequencies(sentences), vocab_size);
  write_text_file(out_path, table.save());
  out << "merges=" << table.merges.size() << " base_symbols=" << table.base_symbols << '\n';
  if (!embed_out.empty()) {
    const bpe::Segmenter seg(table);
    Corpus pieces;
    for (const auto& s : sentences) {
      std::vector<std::string> row;
      for (const auto& w : s) {
        for (auto& p : seg.segment(w)) row.push_back(std::move(p));
      }
      pieces.push_back(std::move(row));
    }
    const auto emb = train_skipgram(pieces, cfg);
    write_text_file(embed_out, save_word2vec(emb));
    out << "pieces=" << emb.vocab.size() << " dim=" << emb.dim << '\n';
  }
  return kExitOk;
}

int cmd_segment(const std::vector<std::string>& args, std::ostream& out, std::ostream&) {
  CLI::App app("Segment text into BPE pieces", "segment");
  std::string merges, in, out_path;
  app.add_option("--merges", merges)->required();
  app.add_option("--in", in)->required();
  app.add_option("--out", out_path);
  parse(app, args);
  const bpe::Segmenter seg(bpe::MergeTable::load(read_text_file(merges)));
  std::string result;
  for (const auto& line : read_lines(in)) {
    std::string row;
    for (const auto& t : tokenize(line)) {
      for (const auto& p : seg.segment(t.surface)) {
        if (!row.empty()) row += ' ';
        row += p;
      }
    }
    result += row + '\n';
  }
  if (out_path.empty()) out << result;
  else write_text_file(out_path, result);
  return kExitOk;
}

int cmd_train_lm(const std::vector<std::string>& args, std::ostream& out, std::ostream&) {
  CLI::App app("Train a character language model", "train-lm");
  std::string direction = "fwd", corpus, out_path;
  CharLmConfig cfg;
  app.add_option("--direction", direction, "fwd|bwd");
  app.add_option("--corpus", corpus)->required();
  app.add_option("--out", out_path)->required();
  app.add_option("--hidden", cfg.hidden);
  app.add_option("--char-dim", cfg.char_dim);
  app.add_option("--seq-len", cfg.seq_len);
  app.add_option("--epochs", cfg.epochs);
  app.add_option("--lr", cfg.lr);
  app.add_option("--seed", cfg.seed);
  parse(app, args);
  const auto result = train_char_lm(read_text_file(corpus), cfg, parse_direction(direction));
  char_lm_archive(result.model).save_file(out_path);
  for (std::size_t e = 0; e < result.epoch_loss.size(); ++e) {
    out << "epoch=" << e + 1 << " loss=" << result.epoch_loss[e] << '\n';
  }
  out << "perplexity=" << result.final_perplexity << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- tagger

void add_train_options(CLI::App& app, TrainConfig& cfg) {
  app.add_option("--lr", cfg.lr);
  app.add_option("--batch", cfg.batch);
  app.add_option("--anneal", cfg.anneal_factor);
  app.add_option("--patience", cfg.patience);
  app.add_option("--max-epochs", cfg.max_epochs);
  app.add_option("--min-lr", cfg.min_lr);
  app.add_option("--clip", cfg.clip);
  app.add_option("--seed", cfg.seed);
}

int cmd_train(const std::vector<std::string>& args, std::ostream& out, std::ostream&) {
  CLI::App app("Train the BiLSTM-CRF tagger", "train");
  std::string train_path, dev_path, stack_spec, out_path;
  TrainConfig cfg;
  TaggerConfig tcfg;
  bool no_projection = false, no_shuffle = false;
  app.add_option("--train", train_path, "CoNLL file or directory")->required();
  app.add_option("--dev", dev_path, "CoNLL file or directory");
  app.add_option("--stack", stack_spec, "embedding stack description")->required();
  app.add_option("--out", out_path, "model bundle")->required();
  app.add_option("--hidden", tcfg.hidden);
  app.add_option("--layers", tcfg.layers);
  app.add_option("--dropout", tcfg.dropout);
  app.add_flag("--no-projection", no_projection);
  app.add_flag("--no-shuffle", no_shuffle);
  add_train_options(app, cfg);
  parse(app, args);
  tcfg.projection = !no_projection;
  cfg.shuffle = !no_shuffle;

  const auto train_set = read_conll_path(train_path);
  const auto dev = dev_path.empty() ? std::vector<TaggedSentence>{} : read_conll_path(dev_path);
  ModelBundle bundle;
  bundle.stack = build_stack(stack_spec);
  Tagger tagger(bundle.stack.total_dim(), label_inventory(train_set), tcfg);
  Rng rng(cfg.seed);
  tagger.init(rng);
  auto result = train(train_set, dev, bundle.stack, std::move(tagger), cfg, [&](const EpochRecord& r) {
    out << "epoch=" << r.epoch << " lr=" << r.lr << " loss=" << r.train_loss
        << " dev_f1=" << format_percent(r.dev_f1) << (r.improved ? " best" : "") << '\n';
  });
  bundle.tagger = std::move(result.best);
  bundle.stack.begin_epoch();
  bundle.save(out_path);
  out << "best_epoch=" << result.best_epoch << " best_dev_f1=" << format_percent(result.best_dev_f1)
      << '\n';
  return kExitOk;
}

int cmd_tag(const std::vector<std::string>& args, std::ostream& out, std::ostream&) {
  CLI::App app("Tag raw text or CoNLL with a trained model", "tag");
  std::string model, in, out_ann, out_conll, split_model;
  app.add_option("--model", model, "model bundle");
  app.add_option("--in", in, ".txt file, .conll file or directory of .txt");
  app.add_option("--out-ann", out_ann, ".ann output (directory for directory input)");
  app.add_option("--out-conll", out_conll, "CoNLL output");
  app.add_option("--split-model", split_model, "sentence boundary model");
  parse(app, args);
  if (model.empty()) throw Error(ErrorKind::InvalidFlag, "tag: --model is required");
  if (in.empty()) throw Error(ErrorKind::InvalidFlag, "tag: --in is required");
  auto bundle = ModelBundle::load(model);
  const auto eos = maybe_eos(split_model);
  const EosModel* splitter = eos ? &*eos : nullptr;

  if (fs::path(in).extension() == ".conll") {
    if (out_conll.empty()) throw Error(ErrorKind::InvalidFlag, "tag: CoNLL input needs --out-conll");
    const auto tagged = tag_sentences(read_conll(read_text_file(in)), bundle);
    write_text_file(out_conll, write_conll(tagged));
    out << "sentences=" << tagged.size() << '\n';
    return kExitOk;
  }
  if (out_ann.empty()) throw Error(ErrorKind::InvalidFlag, "tag: --out-ann is required");
  std::vector<std::pair<fs::path, fs::path>> jobs;
  if (fs::is_directory(in)) {
    fs::create_directories(out_ann);
    for (const auto& f : files_with_ext(in, ".txt")) {
      jobs.emplace_back(f, fs::path(out_ann) / (f.stem().string() + ".ann"));
    }
  } else {
    jobs.emplace_back(in, out_ann);
  }
  std::size_t mentions = 0;
  std::vector<TaggedSentence> all;
  for (const auto& [src, dst] : jobs) {
    const auto result = tag_text(read_text_file(src.string()), bundle, splitter);
    write_text_file(dst.string(), result.ann);
    mentions += result.mentions.size();
    all.insert(all.end(), result.sentences.begin(), result.sentences.end());
  }
  if (!out_conll.empty()) write_text_file(out_conll, write_conll(all));
  out << "documents=" << jobs.size() << " mentions=" << mentions << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- eval

// Mentions of a directory of .ann files, or of .conll/.offsets pairs when
// it holds no .ann files; a single file is read by its extension.
std::vector<EntityMention> load_mentions(const std::string& path) {
  auto from_conll = [](const fs::path& conll) {
    auto sents = read_conll(read_text_file(conll.string()));
    fs::path offsets = conll;
    offsets.replace_extension(".offsets");
    if (fs::exists(offsets)) apply_offsets(sents, read_text_file(offsets.string()));
    std::vector<EntityMention> out;
    for (const auto& s : sents) {
      for (auto m : decode_bio(s)) {
        m.doc_id = conll.stem().string();
        out.push_back(m);
      }
    }
    return out;
  };
  const fs::path p(path);
  if (!fs::is_directory(p)) {
    if (p.extension() == ".conll") return from_conll(p);
    return read_ann_mentions(read_text_file(path), p.stem().string());
  }
  std::vector<EntityMention> out;
  auto anns = files_with_ext(p, ".ann");
  if (!anns.empty()) {
    for (const auto& f : anns) {
      auto part = read_ann_mentions(read_text_file(f.string()), f.stem().string());
      out.insert(out.end(), part.begin(), part.end());
    }
    return out;
  }
  for (const auto& f : files_with_ext(p, ".conll")) {
    auto part = from_conll(f);
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

int cmd_eval(const std::vector<std::string>& args, std::ostream& out, std::ostream&) {
  CLI::App app("Strict entity-level evaluation", "eval");
  std::string gold, pred, summary, name = "model";
  bool overlap = false;
  app.add_option("--gold", gold, ".ann directory, .conll directory or file")->required();
  app.add_option("--pred", pred, ".ann directory, .conll directory or file")->required();
  app.add_option("--summary", summary, "write key=value summary here");
  app.add_option("--name", name, "row label in the table");
  app.add_flag("--overlap", overlap, "relaxed overlap matching (diagnostic only)");
  parse(app, args);
  const auto report = evaluate(load_mentions(gold), load_mentions(pred),
                               overlap ? MatchMode::Overlap : MatchMode::Strict);
  out << report_table({{name, report}});
  if (!summary.empty()) write_text_file(summary, report_summary(report));
  return kExitOk;
}

int cmd_hpo(const std::vector<std::string>& args, std::ostream& out, std::ostream&) {
  CLI::App app("Hyperparameter search", "hpo");
  std::string space_arg, train_path, dev_path, stack_spec, log_path;
  int budget = 0, max_epochs = 0;
  std::uint64_t seed = 1;
  app.add_option("--space", space_arg, "JSON file, or 'initial' / 'refined'")->required();
  app.add_option("--budget", budget, "trial count (grid: 0 runs the full product)");
  app.add_option("--train", train_path)->required();
  app.add_option("--dev", dev_path);
  app.add_option("--stack", stack_spec)->required();
  app.add_option("--max-epochs", max_epochs, "per-trial epoch cap");
  app.add_option("--log", log_path, "trial log (TSV)");
  app.add_option("--seed", seed);
  parse(app, args);

  SearchSpace space;
  if (space_arg == "initial") space = SearchSpace::initial();
  else if (space_arg == "refined") space = SearchSpace::refined();
  else {
    try {
      space = SearchSpace::from_json(nlohmann::json::parse(read_text_file(space_arg)));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::InvalidFlag, std::string("bad space file: ") + e.what());
    }
  }
  if (max_epochs > 0) space.max_epochs = max_epochs;
  auto stack = build_stack(stack_spec);
  const auto result = hpo(space, budget, seed, read_conll_path(train_path),
                          dev_path.empty() ? std::vector<TaggedSentence>{} : read_conll_path(dev_path),
                          stack);
  const std::string log = hpo_log(result);
  if (!log_path.empty()) write_text_file(log_path, log);
  out << log;
  return kExitOk;
}

using Command = std::function<int(const std::vector<std::string>&, std::ostream&, std::ostream&)>;

const std::map<std::string, Command>& commands() {
  static const std::map<std::string, Command> table{
      {"convert", cmd_convert},     {"export-brat", cmd_export_brat},
      {"split", cmd_split},         {"train-embed", cmd_train_embed},
      {"learn-bpe", cmd_learn_bpe}, {"segment", cmd_segment},
      {"train-lm", cmd_train_lm},   {"train", cmd_train},
      {"tag", cmd_tag},             {"eval", cmd_eval},
      {"hpo", cmd_hpo},
  };
  return table;
}

void usage(std::ostream& out) {
  out << "usage: stacktag <subcommand> [options]\n\nsubcommands:\n";
  for (const auto& name : subcommands()) out << "  " << name << '\n';
  out << "\nstacktag <subcommand> --help lists the options of one subcommand.\n";
}

}  // namespace

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names{"convert", "export-brat", "split", "train-embed",
                                              "learn-bpe", "segment", "train-lm", "train",
                                              "tag", "eval", "hpo"};
  return names;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  if (args.empty()) {
    usage(err);
    err << "error\t" << to_string(ErrorKind::UnknownSubcommand) << "\tno subcommand given\n";
    return kExitUsage;
  }
  if (args[0] == "--version" || args[0] == "-V") {
    out << "stacktag " << STACKTAG_VERSION << '\n';
    return kExitOk;
  }
  if (args[0] == "--help" || args[0] == "-h") {
    usage(out);
    return kExitOk;
  }
  const auto it = commands().find(args[0]);
  if (it == commands().end()) {
    err << "error\t" << to_string(ErrorKind::UnknownSubcommand) << "\tunknown subcommand '"
        << args[0] << "'\n";
    return kExitUsage;
  }
  try {
    return it->second(std::vector<std::string>(args.begin() + 1, args.end()), out, err);
  } catch (const HelpShown& h) {
    out << h.text;
    return kExitOk;
  } catch (const Error& e) {
    err << "error\t" << to_string(e.kind()) << '\t' << e.what() << '\n';
    return e.kind() == ErrorKind::InvalidFlag || e.kind() == ErrorKind::UnknownSubcommand
               ? kExitUsage
               : kExitFailure;
  } catch (const fs::filesystem_error& e) {
    err << "error\t" << to_string(ErrorKind::Io) << '\t' << e.what() << '\n';
    return kExitFailure;
  } catch (const nlohmann::json::exception& e) {
    err << "error\t" << to_string(ErrorKind::MalformedModel) << '\t' << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace stacktag
