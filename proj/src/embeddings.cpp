#include "stacktag/embeddings.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "stacktag/utf8.hpp"

namespace stacktag {

// ---------------------------------------------------------------- Vocab

Vocab Vocab::build(const Corpus& corpus, std::size_t min_count) {
  std::unordered_map<std::string, std::size_t> freq;
  for (const auto& sent : corpus)
    for (const auto& w : sent) ++freq[w];
  std::vector<std::pair<std::string, std::size_t>> entries;
  for (auto& [w, c] : freq) {
    if (c >= min_count) entries.emplace_back(w, c);
  }
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  std::vector<std::string> words;
  std::vector<std::size_t> counts;
  for (auto& [w, c] : entries) {
    words.push_back(w);
    counts.push_back(c);
  }
  return from_words(std::move(words), std::move(counts));
}

Vocab Vocab::from_words(std::vector<std::string> words, std::vector<std::size_t> counts) {
  Vocab v;
  if (counts.empty()) counts.assign(words.size(), 1);
  v.words_ = std::move(words);
  v.counts_ = std::move(counts);
  v.total_ = std::accumulate(v.counts_.begin(), v.counts_.end(), std::size_t{0});
  for (std::size_t i = 0; i < v.words_.size(); ++i) {
    v.index_.emplace(v.words_[i], static_cast<int>(i));
  }
  return v;
}

std::optional<int> Vocab::id(std::string_view word) const {
  auto it = index_.find(std::string(word));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

// ---------------------------------------------------------------- config

std::string_view to_string(EmbeddingVariant v) {
  switch (v) {
    case EmbeddingVariant::Plain: return "plain";
    case EmbeddingVariant::Structured: return "structured";
    case EmbeddingVariant::Subword: return "subword";
  }
  return "plain";
}

EmbeddingVariant parse_variant(std::string_view s) {
  if (s == "plain") return EmbeddingVariant::Plain;
  if (s == "structured") return EmbeddingVariant::Structured;
  if (s == "subword") return EmbeddingVariant::Subword;
  throw Error(ErrorKind::InvalidFlag, "unknown embedding variant: " + std::string(s));
}

void SkipGramConfig::validate() const {
  if (dim <= 0 || window < 1 || negatives < 1 || epochs < 1 || lr <= 0.0 ||
      min_n < 1 || max_n < min_n) {
    throw Error(ErrorKind::InvalidFlag, "invalid skip-gram configuration");
  }
}

std::map<std::string, std::string> SkipGramConfig::metadata() const {
  auto num = [](double x) {
    std::ostringstream s;
    s << x;
    return s.str();
  };
  return {{"dim", std::to_string(dim)},
          {"window", std::to_string(window)},
          {"negatives", std::to_string(negatives)},
          {"epochs", std::to_string(epochs)},
          {"lr", num(lr)},
          {"lr_decay", "linear to 1e-4*lr"},
          {"min_count", std::to_string(min_count)},
          {"subsample_t", num(subsample_t)},
          {"ns_power", num(ns_power)},
          {"seed", std::to_string(seed)},
          {"min_n", std::to_string(min_n)},
          {"max_n", std::to_string(max_n)},
          {"buckets", std::to_string(buckets)}};
}

// ---------------------------------------------------------------- n-grams

std::vector<std::string> extract_ngrams(std::string_view word, int min_n, int max_n) {
  std::u32string wrapped = U"<";
  wrapped += utf8::decode(word);
  wrapped += U">";
  std::vector<std::string> out;
  const auto len = wrapped.size();
  for (std::size_t i = 0; i < len; ++i) {
    for (int n = min_n; n <= max_n; ++n) {
      if (i + static_cast<std::size_t>(n) > len) break;
      out.push_back(utf8::encode(std::u32string_view(wrapped).substr(i, n)));
    }
  }
  return out;
}

std::size_t ngram_count(std::size_t wrapped_length, int min_n, int max_n) {
  std::size_t total = 0;
  for (int n = min_n; n <= max_n; ++n) {
    if (wrapped_length >= static_cast<std::size_t>(n)) total += wrapped_length - n + 1;
  }
  return total;
}

namespace {

std::uint32_t fnv1a(std::string_view s) {
  std::uint32_t h = 2166136261u;
  for (char c : s) {
    h ^= static_cast<std::uint8_t>(c);
    h *= 16777619u;
  }
  return h;
}

}  // namespace

std::vector<int> SubwordIndex::lookup(std::string_view word) const {
  std::vector<int> out;
  for (const auto& g : extract_ngrams(word, min_n, max_n)) {
    if (buckets > 0) {
      out.push_back(static_cast<int>(fnv1a(g) % buckets));
    } else if (auto it = ids.find(g); it != ids.end()) {
      out.push_back(it->second);
    }
  }
  return out;
}

std::string SubwordIndex::sidecar() const {
  std::string out;
  for (std::size_t i = 0; i < ngrams.size(); ++i) {
    out += ngrams[i] + "\t" + std::to_string(i) + "\n";
  }
  return out;
}

// ---------------------------------------------------------------- lookup

Vector EmbeddingTable::lookup(std::string_view word, Warnings* warnings) const {
  Vector v = Vector::Zero(dim);
  const auto id = vocab.id(word);
  if (id) v = input.col(*id);
  if (variant != EmbeddingVariant::Subword || !subwords) return v;
  const auto grams = subwords->lookup(word);
  for (int g : grams) v += subwords->vectors.col(g);
  if (!id && grams.empty()) {
    warn(warnings, "OovAllUnknown",
         "no known n-gram for out-of-vocabulary word '" + std::string(word) + "'");
  }
  return v;
}

double PositionalOutputs::score(const EmbeddingTable& table, int center, int context,
                                int offset) const {
  return outputs[static_cast<std::size_t>(slot(offset))].col(context).dot(
      table.input.col(center));
}

Matrix init_input_matrix(int dim, std::size_t n, Rng& rng) {
  Matrix m(dim, static_cast<Eigen::Index>(n));
  const double bound = 0.5 / dim;
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = rng.uniform(-bound, bound);
  return m;
}

double negative_sampling_loss(const Vector& input, const Matrix& outputs,
                              const std::vector<int>& labels, Vector* d_input,
                              Matrix* d_outputs) {
  double loss = 0.0;
  if (d_input) d_input->setZero(input.size());
  if (d_outputs) d_outputs->setZero(outputs.rows(), outputs.cols());
  for (Eigen::Index k = 0; k < outputs.cols(); ++k) {
    const double score = outputs.col(k).dot(input);
    const double label = labels[static_cast<std::size_t>(k)];
    // log s(x) = -log1p(exp(-x)), computed stably for either sign.
    const double signed_score = label > 0.5 ? score : -score;
    loss += signed_score > 0 ? std::log1p(std::exp(-signed_score))
                             : -signed_score + std::log1p(std::exp(signed_score));
    const double g = sigmoid(score) - label;  // dloss/dscore
    if (d_input) *d_input += g * outputs.col(k);
    if (d_outputs) d_outputs->col(k) = g * input;
  }
  return loss;
}

// ---------------------------------------------------------------- training

namespace {

class NegativeSampler {
 public:
  NegativeSampler(const Vocab& vocab, double power) {
    cumulative_.reserve(vocab.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < vocab.size(); ++i) {
      acc += std::pow(static_cast<double>(vocab.counts()[i]), power);
      cumulative_.push_back(acc);
    }
  }
  int sample(Rng& rng) const {
    const double u = rng.uniform(0.0, cumulative_.back());
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    if (it == cumulative_.end()) --it;
    return static_cast<int>(it - cumulative_.begin());
  }

 private:
  std::vector<double> cumulative_;
};

// Shared skip-gram driver. The variant decides how the input vector of a
// center word is formed and which output matrix a context offset uses.
class SkipGramTrainer {
 public:
  SkipGramTrainer(const Corpus& corpus, const SkipGramConfig& config,
                  EmbeddingVariant variant)
      : corpus_(corpus), config_(config), variant_(variant), rng_(config.seed) {
    config.validate();
    table_.vocab = Vocab::build(corpus, config.min_count);
    if (table_.vocab.empty()) {
      throw Error(ErrorKind::EmptyVocab,
                  "no word reaches min_count=" + std::to_string(config.min_count));
    }
    table_.dim = config.dim;
    table_.variant = variant;
    table_.metadata = config.metadata();
    table_.metadata["variant"] = std::string(to_string(variant));
    const std::size_t n = table_.vocab.size();
    table_.input = init_input_matrix(config.dim, n, rng_);
    const int slots = variant == EmbeddingVariant::Structured ? 2 * config.window : 1;
    outputs_.assign(static_cast<std::size_t>(slots),
                    Matrix::Zero(config.dim, static_cast<Eigen::Index>(n)));
    if (variant == EmbeddingVariant::Subword) build_subwords();
  }

  EmbeddingTable run(PositionalOutputs* positional) {
    const Vocab& vocab = table_.vocab;
    NegativeSampler sampler(vocab, config_.ns_power);
    const double total_words =
        static_cast<double>(config_.epochs) * static_cast<double>(vocab.total_tokens());
    double processed = 0.0;
    const double threshold = config_.subsample_t * static_cast<double>(vocab.total_tokens());

    std::vector<int> ids;
    std::vector<int> labels(static_cast<std::size_t>(config_.negatives) + 1);
    Matrix outs(config_.dim, config_.negatives + 1);
    std::vector<int> targets(static_cast<std::size_t>(config_.negatives) + 1);
    Vector d_in, input, d_acc;
    Matrix d_outs;

    for (int epoch = 0; epoch < config_.epochs; ++epoch) {
      double epoch_loss = 0.0;
      std::size_t pairs = 0;
      for (const auto& sentence : corpus_) {
        ids.clear();
        for (const auto& w : sentence) {
          auto id = vocab.id(w);
          if (!id) continue;
          processed += 1.0;
          if (config_.subsample_t > 0.0) {
            const double f = static_cast<double>(vocab.count(*id));
            const double keep = (std::sqrt(f / threshold) + 1.0) * threshold / f;
            if (keep < rng_.uniform(0.0, 1.0)) continue;
          }
          ids.push_back(*id);
        }
        const double lr =
            config_.lr * std::max(1e-4, 1.0 - processed / (total_words + 1.0));
        const int len = static_cast<int>(ids.size());
        for (int i = 0; i < len; ++i) {
          const int center = ids[static_cast<std::size_t>(i)];
          const int reach = config_.window - static_cast<int>(rng_.index(
                                                 static_cast<std::size_t>(config_.window)));
          compose_input(center, input);
          d_acc.setZero(config_.dim);
          for (int off = -reach; off <= reach; ++off) {
            const int j = i + off;
            if (off == 0 || j < 0 || j >= len) continue;
            Matrix& out = outputs_[static_cast<std::size_t>(
                variant_ == EmbeddingVariant::Structured ? slot(off) : 0)];
            targets[0] = ids[static_cast<std::size_t>(j)];
            labels[0] = 1;
            for (int k = 1; k <= config_.negatives; ++k) {
              int neg = sampler.sample(rng_);
              targets[static_cast<std::size_t>(k)] = neg;
              labels[static_cast<std::size_t>(k)] = neg == targets[0] ? 1 : 0;
            }
            for (int k = 0; k <= config_.negatives; ++k) {
              outs.col(k) = out.col(targets[static_cast<std::size_t>(k)]);
            }
            epoch_loss += negative_sampling_loss(input, outs, labels, &d_in, &d_outs);
            ++pairs;
            d_acc += d_in;
            for (int k = 0; k <= config_.negatives; ++k) {
              out.col(targets[static_cast<std::size_t>(k)]) -= lr * d_outs.col(k);
            }
          }
          apply_input_grad(center, d_acc, lr);
        }
      }
      table_.epoch_loss.push_back(pairs ? epoch_loss / static_cast<double>(pairs) : 0.0);
    }

    if (positional != nullptr && variant_ == EmbeddingVariant::Structured) {
      positional->window = config_.window;
      positional->outputs = outputs_;
    }
    return std::move(table_);
  }

 private:
  int slot(int offset) const {
    return offset < 0 ? offset + config_.window : config_.window + offset - 1;
  }

  void build_subwords() {
    SubwordIndex index;
    index.min_n = config_.min_n;
    index.max_n = config_.max_n;
    index.buckets = config_.buckets;
    std::size_t count = config_.buckets;
    if (config_.buckets == 0) {
      for (const auto& w : table_.vocab.words()) {
        for (auto& g : extract_ngrams(w, config_.min_n, config_.max_n)) {
          if (index.ids.emplace(g, static_cast<int>(index.ngrams.size())).second) {
            index.ngrams.push_back(g);
          }
        }
      }
      count = index.ngrams.size();
    }
    index.vectors = init_input_matrix(config_.dim, count, rng_);
    word_grams_.reserve(table_.vocab.size());
    for (const auto& w : table_.vocab.words()) word_grams_.push_back(index.lookup(w));
    table_.subwords = std::move(index);
  }

  void compose_input(int center, Vector& input) const {
    input = table_.input.col(center);
    if (variant_ != EmbeddingVariant::Subword) return;
    for (int g : word_grams_[static_cast<std::size_t>(center)]) {
      input += table_.subwords->vectors.col(g);
    }
  }

  void apply_input_grad(int center, const Vector& grad, double lr) {
    table_.input.col(center) -= lr * grad;
    if (variant_ != EmbeddingVariant::Subword) return;
    for (int g : word_grams_[static_cast<std::size_t>(center)]) {
      table_.subwords->vectors.col(g) -= lr * grad;
    }
  }

  const Corpus& corpus_;
  SkipGramConfig config_;
  EmbeddingVariant variant_;
  Rng rng_;
  EmbeddingTable table_;
  std::vector<Matrix> outputs_;
  std::vector<std::vector<int>> word_grams_;
};

std::string format_double(double x) {
  char buf[40];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

std::vector<std::string_view> fields_of(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && line[i] == ' ') ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

struct Word2VecRows {
  std::vector<std::string> words;
  Matrix vectors;
};

Word2VecRows parse_word2vec(std::string_view content) {
  std::istringstream in{std::string(content)};
  std::string line;
  if (!std::getline(in, line)) {
    throw Error(ErrorKind::MalformedEmbeddingFile, "missing header");
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = fields_of(line);
  long count = -1, dim = -1;
  if (header.size() != 2 ||
      std::from_chars(header[0].data(), header[0].data() + header[0].size(), count).ec !=
          std::errc() ||
      std::from_chars(header[1].data(), header[1].data() + header[1].size(), dim).ec !=
          std::errc() ||
      count < 0 || dim <= 0) {
    throw Error(ErrorKind::MalformedEmbeddingFile, "bad header: " + line);
  }
  Word2VecRows rows;
  rows.vectors.resize(dim, count);
  long row = 0;
  std::unordered_set<std::string> seen;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = fields_of(line);
    if (static_cast<long>(f.size()) != dim + 1) {
      throw Error(ErrorKind::MalformedEmbeddingFile,
                  "row " + std::to_string(row + 1) + " has " + std::to_string(f.size() - 1) +
                      " components, header says " + std::to_string(dim));
    }
    if (row >= count) {
      throw Error(ErrorKind::MalformedEmbeddingFile, "more rows than header count");
    }
    if (!seen.emplace(std::string(f[0])).second) {
      throw Error(ErrorKind::MalformedEmbeddingFile, "duplicate word '" + std::string(f[0]) + "'");
    }
    rows.words.emplace_back(f[0]);
    for (long k = 0; k < dim; ++k) {
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(f[k + 1].data(), f[k + 1].data() + f[k + 1].size(), v);
      if (ec != std::errc() || ptr != f[k + 1].data() + f[k + 1].size()) {
        throw Error(ErrorKind::MalformedEmbeddingFile,
                    "bad number '" + std::string(f[k + 1]) + "'");
      }
      rows.vectors(k, row) = v;
    }
    ++row;
  }
  if (row != count) {
    throw Error(ErrorKind::MalformedEmbeddingFile,
                "header promises " + std::to_string(count) + " rows, found " +
                    std::to_string(row));
  }
  return rows;
}

}  // namespace

EmbeddingTable train_skipgram(const Corpus& corpus, const SkipGramConfig& config) {
  return SkipGramTrainer(corpus, config, EmbeddingVariant::Plain).run(nullptr);
}

EmbeddingTable train_structured_skipgram(const Corpus& corpus, const SkipGramConfig& config,
                                         PositionalOutputs* outputs) {
  return SkipGramTrainer(corpus, config, EmbeddingVariant::Structured).run(outputs);
}

EmbeddingTable train_subword_skipgram(const Corpus& corpus, const SkipGramConfig& config) {
  return SkipGramTrainer(corpus, config, EmbeddingVariant::Subword).run(nullptr);
}

// ---------------------------------------------------------------- I/O

std::string save_word2vec(const Vocab& vocab, const Matrix& vectors) {
  std::string out = std::to_string(vocab.size()) + " " + std::to_string(vectors.rows()) + "\n";
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    out += vocab.word(static_cast<int>(i));
    for (Eigen::Index k = 0; k < vectors.rows(); ++k) {
      out += ' ';
      out += format_double(vectors(k, static_cast<Eigen::Index>(i)));
    }
    out += '\n';
  }
  return out;
}

std::string save_word2vec(const EmbeddingTable& table) {
  Matrix vectors(table.dim, static_cast<Eigen::Index>(table.vocab.size()));
  for (std::size_t i = 0; i < table.vocab.size(); ++i) {
    vectors.col(static_cast<Eigen::Index>(i)) = table.lookup(table.vocab.word(static_cast<int>(i)));
  }
  return save_word2vec(table.vocab, vectors);
}

EmbeddingTable load_word2vec(std::string_view content) {
  auto rows = parse_word2vec(content);
  EmbeddingTable table;
  table.dim = static_cast<int>(rows.vectors.rows());
  table.vocab = Vocab::from_words(std::move(rows.words));
  if (table.vocab.size() != static_cast<std::size_t>(rows.vectors.cols())) {
    throw Error(ErrorKind::MalformedEmbeddingFile, "duplicate words in embedding file");
  }
  table.input = std::move(rows.vectors);
  return table;
}

SubwordFiles save_subword(const EmbeddingTable& table) {
  if (!table.subwords) {
    throw Error(ErrorKind::MalformedEmbeddingFile, "table has no subword index");
  }
  SubwordFiles files;
  files.words = save_word2vec(table);
  const auto& idx = *table.subwords;
  files.ngram_ids = "#min_n=" + std::to_string(idx.min_n) + " max_n=" +
                    std::to_string(idx.max_n) + " buckets=" + std::to_string(idx.buckets) +
                    "\n" + idx.sidecar();
  std::vector<std::string> names;
  for (std::size_t i = 0; i < idx.size(); ++i) {
    names.push_back(idx.buckets > 0 ? "bucket" + std::to_string(i) : idx.ngrams[i]);
  }
  files.ngram_vectors = save_word2vec(Vocab::from_words(names), idx.vectors);
  return files;
}

EmbeddingTable load_subword(const SubwordFiles& files) {
  EmbeddingTable table = load_word2vec(files.words);
  table.variant = EmbeddingVariant::Subword;
  SubwordIndex idx;
  std::istringstream in(files.ngram_ids);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (std::sscanf(line.c_str(), "#min_n=%d max_n=%d buckets=%zu", &idx.min_n, &idx.max_n,
                      &idx.buckets) != 3) {
        throw Error(ErrorKind::MalformedEmbeddingFile, "bad n-gram sidecar header");
      }
      continue;
    }
    const auto tab = line.rfind('\t');
    if (tab == std::string::npos) {
      throw Error(ErrorKind::MalformedEmbeddingFile, "bad n-gram sidecar line: " + line);
    }
    const int id = std::stoi(line.substr(tab + 1));
    if (id != static_cast<int>(idx.ngrams.size())) {
      throw Error(ErrorKind::MalformedEmbeddingFile, "n-gram ids must be dense and ordered");
    }
    idx.ids.emplace(line.substr(0, tab), id);
    idx.ngrams.push_back(line.substr(0, tab));
  }
  auto rows = parse_word2vec(files.ngram_vectors);
  if (rows.vectors.rows() != table.dim ||
      (idx.buckets == 0 && static_cast<std::size_t>(rows.vectors.cols()) != idx.ngrams.size())) {
    throw Error(ErrorKind::MalformedEmbeddingFile, "n-gram vectors disagree with sidecar");
  }
  idx.vectors = std::move(rows.vectors);
  table.subwords = std::move(idx);
  // The word file holds composed vectors; recover the whole-word units.
  for (std::size_t i = 0; i < table.vocab.size(); ++i) {
    for (int g : table.subwords->lookup(table.vocab.word(static_cast<int>(i)))) {
      table.input.col(static_cast<Eigen::Index>(i)) -= table.subwords->vectors.col(g);
    }
  }
  return table;
}

}  // namespace stacktag
