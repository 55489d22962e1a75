#include "stacktag/stack.hpp"

#include <sstream>

namespace stacktag {

using nlohmann::json;

// ---------------------------------------------------------------- members

Matrix WordEmbedder::embed(const std::vector<Token>& tokens) {
  Matrix out(static_cast<Eigen::Index>(tokens.size()), table_.dim);
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    out.row(static_cast<Eigen::Index>(t)) = table_.lookup(tokens[t].surface).transpose();
  }
  return out;
}

void WordEmbedder::save(ModelArchive& archive, const std::string& prefix, json& entry) const {
  save_embedding_table(table_, archive, prefix, entry);
}

BpeEmbedder::BpeEmbedder(bpe::MergeTable merges, bpe::PieceTable pieces, bpe::Pooling pooling)
    : merges_(std::move(merges)), segmenter_(merges_), pieces_(std::move(pieces)), pooling_(pooling) {}

int BpeEmbedder::dim() const {
  return pooling_ == bpe::Pooling::Mean ? pieces_.dim() : 2 * pieces_.dim();
}

Matrix BpeEmbedder::embed(const std::vector<Token>& tokens) {
  Matrix out(static_cast<Eigen::Index>(tokens.size()), dim());
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    out.row(static_cast<Eigen::Index>(t)) =
        bpe::token_vector(tokens[t].surface, segmenter_, pieces_, pooling_).transpose();
  }
  return out;
}

void BpeEmbedder::save(ModelArchive& archive, const std::string& prefix, json& entry) const {
  json merges = json::array();
  for (const auto& [l, r] : merges_.merges) merges.push_back({l, r});
  entry["merges"] = merges;
  entry["pooling"] = pooling_ == bpe::Pooling::Mean ? "mean" : "firstlast";
  entry["pieces"] = pieces_.pieces.words();
  archive.put(prefix + "pieces", pieces_.vectors);
  archive.put(prefix + "unknown", pieces_.unknown);
}

Matrix CseEmbedder::embed(const std::vector<Token>& tokens) {
  return extract_cse(tokens, fwd_, bwd_).transpose();
}

void CseEmbedder::save(ModelArchive& archive, const std::string& prefix, json& entry) const {
  json fwd, bwd;
  save_char_lm(fwd_, archive, prefix + "fwd.", fwd);
  save_char_lm(bwd_, archive, prefix + "bwd.", bwd);
  entry["fwd"] = fwd;
  entry["bwd"] = bwd;
}

Matrix PceEmbedder::embed(const std::vector<Token>& tokens) {
  return pce_embed(tokens, extract_cse(tokens, fwd_, bwd_), memory_, op_).transpose();
}

void PceEmbedder::save(ModelArchive& archive, const std::string& prefix, json& entry) const {
  CseEmbedder::save(archive, prefix, entry);
  entry["pool"] = std::string(to_string(op_));
}

// ---------------------------------------------------------------- stack

int EmbeddingStack::total_dim() const {
  int d = 0;
  for (const auto& m : members_) d += m->dim();
  return d;
}

bool EmbeddingStack::stateful() const {
  for (const auto& m : members_)
    if (m->stateful()) return true;
  return false;
}

std::vector<std::string> EmbeddingStack::kinds() const {
  std::vector<std::string> out;
  for (const auto& m : members_) out.push_back(m->kind());
  return out;
}

Matrix EmbeddingStack::embed(const std::vector<Token>& tokens) {
  const auto rows = static_cast<Eigen::Index>(tokens.size());
  Matrix out(rows, total_dim());
  Eigen::Index offset = 0;
  for (std::size_t k = 0; k < members_.size(); ++k) {
    const Matrix part = members_[k]->embed(tokens);
    const int d = members_[k]->dim();
    if (part.cols() != d || part.rows() != rows) {
      throw Error(ErrorKind::DimensionMismatch,
                  "stack member " + std::to_string(k) + " (" + members_[k]->kind() +
                      ") returned " + std::to_string(part.rows()) + "x" +
                      std::to_string(part.cols()) + ", expected " + std::to_string(rows) + "x" +
                      std::to_string(d));
    }
    out.middleCols(offset, d) = part;
    offset += d;
  }
  return out;
}

void EmbeddingStack::begin_epoch() {
  for (auto& m : members_) m->begin_epoch();
}

void EmbeddingStack::save(ModelArchive& archive, const std::string& prefix) const {
  json members = json::array();
  for (std::size_t k = 0; k < members_.size(); ++k) {
    json entry;
    entry["kind"] = members_[k]->kind();
    entry["dim"] = members_[k]->dim();
    members_[k]->save(archive, prefix + std::to_string(k) + ".", entry);
    members.push_back(entry);
  }
  archive.manifest["stack"] = members;
}

EmbeddingStack EmbeddingStack::load(const ModelArchive& archive, const std::string& prefix) {
  if (!archive.manifest.contains("stack")) {
    throw Error(ErrorKind::ModelMissingComponent, "model manifest has no embedding stack");
  }
  EmbeddingStack stack;
  std::size_t k = 0;
  for (const auto& entry : archive.manifest.at("stack")) {
    const std::string p = prefix + std::to_string(k++) + ".";
    const std::string kind = entry.at("kind");
    if (kind == "word") {
      stack.add(std::make_unique<WordEmbedder>(load_embedding_table(archive, p, entry)));
    } else if (kind == "bpe") {
      bpe::MergeTable merges;
      for (const auto& m : entry.at("merges")) merges.merges.emplace_back(m.at(0), m.at(1));
      bpe::PieceTable pieces;
      pieces.pieces = Vocab::from_words(entry.at("pieces").get<std::vector<std::string>>());
      pieces.vectors = archive.get(p + "pieces");
      pieces.unknown = archive.get(p + "unknown");
      const auto pooling = entry.at("pooling") == "mean" ? bpe::Pooling::Mean : bpe::Pooling::FirstLast;
      stack.add(std::make_unique<BpeEmbedder>(std::move(merges), std::move(pieces), pooling));
    } else if (kind == "cse" || kind == "pce") {
      CharLM fwd = load_char_lm(archive, p + "fwd.", entry.at("fwd"));
      CharLM bwd = load_char_lm(archive, p + "bwd.", entry.at("bwd"));
      if (kind == "cse") {
        stack.add(std::make_unique<CseEmbedder>(std::move(fwd), std::move(bwd)));
      } else {
        stack.add(std::make_unique<PceEmbedder>(std::move(fwd), std::move(bwd),
                                                parse_pool(entry.at("pool").get<std::string>())));
      }
    } else {
      throw Error(ErrorKind::MalformedModel, "unknown stack member kind " + kind);
    }
    if (stack.members_.back()->dim() != entry.at("dim").get<int>()) {
      throw Error(ErrorKind::MalformedModel, "stack member " + kind + " dimension disagrees with manifest");
    }
  }
  return stack;
}

// ---------------------------------------------------------------- components

void save_char_lm(const CharLM& lm, ModelArchive& archive, const std::string& prefix, json& entry) {
  std::vector<std::uint32_t> chars(lm.vocab().chars().begin(), lm.vocab().chars().end());
  entry["direction"] = std::string(to_string(lm.direction()));
  entry["char_dim"] = lm.char_dim();
  entry["hidden"] = lm.hidden_dim();
  entry["chars"] = chars;
  store_params(archive, prefix, lm.params());
}

CharLM load_char_lm(const ModelArchive& archive, const std::string& prefix, const json& entry) {
  const auto raw = entry.at("chars").get<std::vector<std::uint32_t>>();
  CharLM lm(CharVocab(std::vector<char32_t>(raw.begin(), raw.end())), entry.at("char_dim").get<int>(),
            entry.at("hidden").get<int>(), parse_direction(entry.at("direction").get<std::string>()));
  load_params(archive, prefix, lm.params());
  return lm;
}

void save_embedding_table(const EmbeddingTable& table, ModelArchive& archive,
                          const std::string& prefix, json& entry) {
  entry["variant"] = std::string(to_string(table.variant));
  entry["words"] = table.vocab.words();
  entry["counts"] = table.vocab.counts();
  entry["metadata"] = table.metadata;
  archive.put(prefix + "input", table.input);
  if (table.subwords) {
    entry["min_n"] = table.subwords->min_n;
    entry["max_n"] = table.subwords->max_n;
    entry["buckets"] = table.subwords->buckets;
    entry["ngrams"] = table.subwords->ngrams;
    archive.put(prefix + "ngrams", table.subwords->vectors);
  }
}

EmbeddingTable load_embedding_table(const ModelArchive& archive, const std::string& prefix,
                                    const json& entry) {
  EmbeddingTable table;
  table.variant = parse_variant(entry.at("variant").get<std::string>());
  table.vocab = Vocab::from_words(entry.at("words").get<std::vector<std::string>>(),
                                  entry.at("counts").get<std::vector<std::size_t>>());
  table.metadata = entry.value("metadata", std::map<std::string, std::string>{});
  table.input = archive.get(prefix + "input");
  table.dim = static_cast<int>(table.input.rows());
  if (entry.contains("ngrams")) {
    SubwordIndex idx;
    idx.min_n = entry.at("min_n");
    idx.max_n = entry.at("max_n");
    idx.buckets = entry.at("buckets");
    idx.ngrams = entry.at("ngrams").get<std::vector<std::string>>();
    for (std::size_t i = 0; i < idx.ngrams.size(); ++i) idx.ids.emplace(idx.ngrams[i], static_cast<int>(i));
    idx.vectors = archive.get(prefix + "ngrams");
    table.subwords = std::move(idx);
  }
  return table;
}

void save_eos_model(const EosModel& model, ModelArchive& archive) {
  const auto& cfg = model.config();
  std::vector<std::uint32_t> chars(model.vocab().chars().begin(), model.vocab().chars().end());
  std::vector<std::uint32_t> cands(cfg.candidates.begin(), cfg.candidates.end());
  archive.manifest["kind"] = "eos";
  archive.manifest["chars"] = chars;
  archive.manifest["candidates"] = cands;
  archive.manifest["window"] = cfg.window;
  archive.manifest["char_dim"] = cfg.char_dim;
  archive.manifest["hidden"] = cfg.hidden;
  archive.manifest["threshold"] = cfg.threshold;
  store_params(archive, "eos.", model.params());
}

EosModel load_eos_model(const ModelArchive& archive) {
  const auto& m = archive.manifest;
  if (m.value("kind", "") != "eos") {
    throw Error(ErrorKind::MalformedModel, "archive is not a sentence boundary model");
  }
  EosConfig cfg;
  const auto cands = m.at("candidates").get<std::vector<std::uint32_t>>();
  cfg.candidates.assign(cands.begin(), cands.end());
  cfg.window = m.at("window");
  cfg.char_dim = m.at("char_dim");
  cfg.hidden = m.at("hidden");
  cfg.threshold = m.at("threshold");
  const auto raw = m.at("chars").get<std::vector<std::uint32_t>>();
  EosModel model(CharVocab(std::vector<char32_t>(raw.begin(), raw.end())), cfg);
  load_params(archive, "eos.", model.params());
  return model;
}

ModelArchive char_lm_archive(const CharLM& lm) {
  ModelArchive archive;
  json entry;
  save_char_lm(lm, archive, "lm.", entry);
  archive.manifest["kind"] = "char_lm";
  archive.manifest["lm"] = entry;
  return archive;
}

CharLM char_lm_from_archive(const ModelArchive& archive) {
  if (archive.manifest.value("kind", "") != "char_lm") {
    throw Error(ErrorKind::MalformedModel, "archive is not a character language model");
  }
  return load_char_lm(archive, "lm.", archive.manifest.at("lm"));
}

// ---------------------------------------------------------------- spec

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) {
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

}  // namespace

EmbeddingStack build_stack(const std::string& spec) {
  EmbeddingStack stack;
  for (const auto& member : split(spec, ',')) {
    const auto f = split(member, ':');
    const std::string& kind = f.front();
    auto need = [&](std::size_t lo, std::size_t hi) {
      if (f.size() < lo || f.size() > hi) {
        throw Error(ErrorKind::InvalidFlag, "bad stack member '" + member + "'");
      }
    };
    if (kind == "word") {
      need(2, 2);
      stack.add(std::make_unique<WordEmbedder>(load_word2vec(read_text_file(f[1]))));
    } else if (kind == "subword") {
      need(2, 2);
      SubwordFiles files{read_text_file(f[1] + ".vec"), read_text_file(f[1] + ".ngrams"),
                         read_text_file(f[1] + ".ngram.vec")};
      stack.add(std::make_unique<WordEmbedder>(load_subword(files)));
    } else if (kind == "bpe") {
      need(3, 4);
      auto pooling = bpe::Pooling::Mean;
      if (f.size() == 4) {
        if (f[3] == "firstlast") pooling = bpe::Pooling::FirstLast;
        else if (f[3] != "mean") throw Error(ErrorKind::InvalidFlag, "bad bpe pooling " + f[3]);
      }
      stack.add(std::make_unique<BpeEmbedder>(
          bpe::MergeTable::load(read_text_file(f[1])),
          bpe::PieceTable::from_embeddings(load_word2vec(read_text_file(f[2]))), pooling));
    } else if (kind == "cse") {
      need(3, 3);
      stack.add(std::make_unique<CseEmbedder>(char_lm_from_archive(ModelArchive::load_file(f[1])),
                                              char_lm_from_archive(ModelArchive::load_file(f[2]))));
    } else if (kind == "pce") {
      need(4, 4);
      stack.add(std::make_unique<PceEmbedder>(char_lm_from_archive(ModelArchive::load_file(f[2])),
                                              char_lm_from_archive(ModelArchive::load_file(f[3])),
                                              parse_pool(f[1])));
    } else {
      throw Error(ErrorKind::InvalidFlag, "unknown stack member kind '" + kind + "'");
    }
  }
  if (stack.empty()) throw Error(ErrorKind::InvalidFlag, "empty stack description");
  return stack;
}

}  // namespace stacktag
