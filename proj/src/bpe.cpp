#include "stacktag/bpe.hpp"

#include <set>
#include <sstream>

#include "stacktag/utf8.hpp"

namespace stacktag::bpe {

std::string MergeTable::save() const {
  std::string out;
  for (const auto& [l, r] : merges) out += l + " " + r + "\n";
  return out;
}

MergeTable MergeTable::load(std::string_view content) {
  MergeTable table;
  std::istringstream in{std::string(content)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto sp = line.find(' ');
    if (sp == std::string::npos || sp == 0 || sp + 1 >= line.size() ||
        line.find(' ', sp + 1) != std::string::npos) {
      throw Error(ErrorKind::MalformedModel,
                  "merges line " + std::to_string(lineno) + ": expected 'left right'");
    }
    table.merges.emplace_back(line.substr(0, sp), line.substr(sp + 1));
  }
  return table;
}

std::vector<std::string> initial_symbols(std::string_view word) {
  const std::u32string lower = utf8::to_lower(utf8::decode(word));
  std::vector<std::string> symbols;
  symbols.reserve(lower.size());
  for (char32_t c : lower) symbols.push_back(utf8::encode(c));
  if (!symbols.empty()) symbols.front().insert(0, kMarker);
  return symbols;
}

std::map<std::string, std::size_t> word_frequencies(const Corpus& corpus) {
  std::map<std::string, std::size_t> freq;
  for (const auto& sent : corpus)
    for (const auto& w : sent) ++freq[w];
  return freq;
}

namespace {

void merge_in_place(std::vector<std::string>& symbols, const Pair& pair) {
  std::vector<std::string> out;
  out.reserve(symbols.size());
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    if (i + 1 < symbols.size() && symbols[i] == pair.first && symbols[i + 1] == pair.second) {
      out.push_back(symbols[i] + symbols[i + 1]);
      ++i;
    } else {
      out.push_back(std::move(symbols[i]));
    }
  }
  symbols = std::move(out);
}

}  // namespace

MergeTable learn(const std::map<std::string, std::size_t>& word_freq,
                 std::size_t target_vocab_size) {
  if (word_freq.empty()) throw Error(ErrorKind::EmptyCorpus, "empty word frequency map");

  std::map<std::vector<std::string>, std::size_t> grouped;
  for (const auto& [w, f] : word_freq) {
    if (!w.empty() && f > 0) grouped[initial_symbols(w)] += f;
  }
  if (grouped.empty()) throw Error(ErrorKind::EmptyCorpus, "no non-empty words");

  std::vector<std::vector<std::string>> words;
  std::vector<std::size_t> freqs;
  std::set<std::string> base;
  for (auto& [syms, f] : grouped) {
    base.insert(syms.begin(), syms.end());
    words.push_back(syms);
    freqs.push_back(f);
  }

  MergeTable table;
  table.target_vocab_size = target_vocab_size;
  table.base_symbols = base.size();

  std::map<Pair, long long> pair_counts;
  std::map<Pair, std::set<std::size_t>> where;
  auto add_pairs = [&](std::size_t w, long long sign) {
    const auto& s = words[w];
    for (std::size_t i = 0; i + 1 < s.size(); ++i) {
      Pair p{s[i], s[i + 1]};
      pair_counts[p] += sign * static_cast<long long>(freqs[w]);
      if (sign > 0) where[p].insert(w);
    }
  };
  for (std::size_t w = 0; w < words.size(); ++w) add_pairs(w, +1);

  while (table.base_symbols + table.merges.size() < target_vocab_size) {
    const Pair* best = nullptr;
    long long best_count = 1;
    for (const auto& [p, c] : pair_counts) {
      if (c > best_count) {
        best = &p;
        best_count = c;
      }
    }
    if (best == nullptr) break;  // nothing occurs twice
    const Pair chosen = *best;
    table.merges.push_back(chosen);
    const std::set<std::size_t> affected = where[chosen];
    for (std::size_t w : affected) {
      add_pairs(w, -1);
      merge_in_place(words[w], chosen);
      add_pairs(w, +1);
    }
    for (auto it = pair_counts.begin(); it != pair_counts.end();) {
      it = it->second <= 0 ? pair_counts.erase(it) : std::next(it);
    }
  }
  return table;
}

Segmenter::Segmenter(const MergeTable& table) : merges_(table.merges) {
  for (std::size_t r = 0; r < table.merges.size(); ++r) rank_.emplace(table.merges[r], r);
}

std::vector<std::string> Segmenter::segment(std::string_view word) const {
  std::vector<std::string> symbols = initial_symbols(word);
  std::size_t floor = 0;
  while (symbols.size() > 1) {
    // The lowest-ranked applicable merge not yet passed is the next one a
    // sequential pass over the merge list would apply.
    std::size_t best = merges_.size();
    for (std::size_t i = 0; i + 1 < symbols.size(); ++i) {
      auto it = rank_.find(Pair{symbols[i], symbols[i + 1]});
      if (it != rank_.end() && it->second >= floor && it->second < best) best = it->second;
    }
    if (best == merges_.size()) break;
    merge_in_place(symbols, merges_[best]);
    floor = best + 1;
  }
  return symbols;
}

PieceTable PieceTable::from_embeddings(const EmbeddingTable& table) {
  PieceTable out;
  out.pieces = table.vocab;
  out.vectors = table.input;
  out.unknown = Vector::Zero(table.dim);
  if (auto unk = table.vocab.id("<unk>")) out.unknown = table.input.col(*unk);
  return out;
}

Vector token_vector(std::string_view word, const Segmenter& segmenter,
                    const PieceTable& table, Pooling pooling) {
  const auto pieces = segmenter.segment(word);
  auto piece_vec = [&](const std::string& p) -> Vector {
    if (auto id = table.pieces.id(p)) return table.vectors.col(*id);
    return table.unknown;
  };
  if (pieces.empty()) {
    return pooling == Pooling::Mean ? table.unknown
                                    : Vector::Zero(2 * table.dim()).eval();
  }
  if (pooling == Pooling::FirstLast) {
    Vector out(2 * table.dim());
    out << piece_vec(pieces.front()), piece_vec(pieces.back());
    return out;
  }
  Vector sum = Vector::Zero(table.dim());
  for (const auto& p : pieces) sum += piece_vec(p);
  return sum / static_cast<double>(pieces.size());
}

}  // namespace stacktag::bpe
