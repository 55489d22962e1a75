#include "stacktag/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

#include "stacktag/utf8.hpp"

namespace stacktag {

namespace {

std::vector<std::string_view> split_lines(std::string_view content) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos <= content.size()) {
    std::size_t nl = content.find('\n', pos);
    if (nl == std::string_view::npos) nl = content.size();
    std::string_view line = content.substr(pos, nl - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    pos = nl + 1;
  }
  if (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) fields.push_back(line.substr(i, j - i));
    i = j;
  }
  return fields;
}

bool parse_size(std::string_view s, std::size_t& out) {
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

bool overlaps(std::size_t a0, std::size_t a1, std::size_t b0, std::size_t b1) {
  return a0 < b1 && b0 < a1;
}

std::string label_of(const std::string& tag) {
  return tag.size() > 2 ? tag.substr(2) : std::string();
}

}  // namespace

std::string slice(std::string_view text, std::size_t start, std::size_t end) {
  const std::u32string chars = utf8::decode(text);
  if (start > end || end > chars.size()) {
    throw Error(ErrorKind::OffsetOutOfRange, "slice out of range");
  }
  return utf8::encode(std::u32string_view(chars).substr(start, end - start));
}

AnnotatedDocument parse_brat(std::string_view txt_content,
                             std::string_view ann_content, std::string doc_id,
                             OverlapPolicy policy) {
  AnnotatedDocument result;
  result.doc.doc_id = std::move(doc_id);
  result.doc.text = std::string(txt_content);
  const std::u32string chars = utf8::decode(txt_content);

  for (std::string_view line : split_lines(ann_content)) {
    if (line.empty() || line.front() != 'T') continue;
    const std::size_t tab1 = line.find('\t');
    if (tab1 == std::string_view::npos) {
      throw Error(ErrorKind::MalformedAnnotation,
                  "missing tab in annotation line: " + std::string(line));
    }
    const std::size_t tab2 = line.find('\t', tab1 + 1);
    std::string_view middle = line.substr(
        tab1 + 1, tab2 == std::string_view::npos ? std::string_view::npos
                                                 : tab2 - tab1 - 1);
    std::string_view surface =
        tab2 == std::string_view::npos ? std::string_view() : line.substr(tab2 + 1);
    if (middle.find(';') != std::string_view::npos) {
      throw Error(ErrorKind::MalformedAnnotation,
                  "discontinuous span not supported: " + std::string(line));
    }
    const auto fields = split_ws(middle);
    EntityAnnotation ent;
    if (fields.size() != 3 || !parse_size(fields[1], ent.start) ||
        !parse_size(fields[2], ent.end) || ent.start >= ent.end) {
      throw Error(ErrorKind::MalformedAnnotation,
                  "cannot parse annotation line: " + std::string(line));
    }
    if (ent.end > chars.size()) {
      throw Error(ErrorKind::OffsetOutOfRange,
                  "annotation " + std::string(line.substr(0, tab1)) + " ends at " +
                      std::to_string(ent.end) + " but text has " +
                      std::to_string(chars.size()) + " characters");
    }
    ent.ann_id = std::string(line.substr(0, tab1));
    ent.label = std::string(fields[0]);
    ent.surface = utf8::encode(
        std::u32string_view(chars).substr(ent.start, ent.end - ent.start));
    if (tab2 != std::string_view::npos && surface != ent.surface) {
      throw Error(ErrorKind::SurfaceMismatch,
                  ent.ann_id + ": surface '" + std::string(surface) +
                      "' != text slice '" + ent.surface + "'");
    }
    result.entities.push_back(std::move(ent));
  }

  std::stable_sort(result.entities.begin(), result.entities.end(),
                   [](const auto& a, const auto& b) {
                     return a.start != b.start ? a.start < b.start : a.end > b.end;
                   });

  std::vector<EntityAnnotation> kept;
  for (auto& ent : result.entities) {
    if (!kept.empty() && overlaps(kept.back().start, kept.back().end, ent.start, ent.end)) {
      if (policy == OverlapPolicy::Reject) {
        throw Error(ErrorKind::OverlappingEntities,
                    "doc " + result.doc.doc_id + ": " + kept.back().ann_id +
                        " overlaps " + ent.ann_id);
      }
      const std::size_t kept_len = kept.back().end - kept.back().start;
      if (ent.end - ent.start > kept_len) kept.back() = std::move(ent);
      continue;
    }
    kept.push_back(std::move(ent));
  }
  result.entities = std::move(kept);
  return result;
}

std::vector<Token> tokenize(std::string_view text) {
  const std::u32string chars = utf8::decode(text);
  return tokenize_spans(text, {{0, chars.size()}}).front();
}

std::vector<std::vector<Token>> tokenize_spans(
    std::string_view text,
    const std::vector<std::pair<std::size_t, std::size_t>>& spans) {
  const std::u32string chars = utf8::decode(text);
  std::vector<std::vector<Token>> out;
  out.reserve(spans.size());
  for (auto [begin, end] : spans) {
    end = std::min(end, chars.size());
    std::vector<Token> tokens;
    std::size_t i = begin;
    while (i < end) {
      if (utf8::is_space(chars[i])) {
        ++i;
        continue;
      }
      std::size_t j = i + 1;
      if (utf8::is_alnum(chars[i])) {
        while (j < end && utf8::is_alnum(chars[j])) ++j;
      }
      tokens.push_back(
          {utf8::encode(std::u32string_view(chars).substr(i, j - i)), i, j});
      i = j;
    }
    out.push_back(std::move(tokens));
  }
  return out;
}

std::vector<TaggedSentence> align_bio(
    const AnnotatedDocument& doc,
    const std::vector<std::vector<Token>>& sentence_tokens, Warnings* warnings) {
  const auto& ents = doc.entities;
  for (std::size_t k = 1; k < ents.size(); ++k) {
    for (std::size_t m = 0; m < k; ++m) {
      if (overlaps(ents[m].start, ents[m].end, ents[k].start, ents[k].end)) {
        throw Error(ErrorKind::OverlappingEntities,
                    "doc " + doc.doc.doc_id + ": " + ents[m].ann_id +
                        " overlaps " + ents[k].ann_id);
      }
    }
  }

  std::vector<std::size_t> tokens_per_entity(ents.size(), 0);
  std::vector<TaggedSentence> result;
  result.reserve(sentence_tokens.size());
  for (const auto& tokens : sentence_tokens) {
    TaggedSentence sent;
    sent.tokens = tokens;
    sent.tags.assign(tokens.size(), "O");
    for (std::size_t t = 0; t < tokens.size(); ++t) {
      const Token& tok = tokens[t];
      for (std::size_t e = 0; e < ents.size(); ++e) {
        const auto& ent = ents[e];
        if (!overlaps(tok.start, tok.end, ent.start, ent.end)) continue;
        // A previous sentence may already hold this entity's first token;
        // an entity crossing a sentence break restarts with B-.
        const bool continues = t > 0 && sent.tags[t - 1] != "O" &&
                               overlaps(tokens[t - 1].start, tokens[t - 1].end,
                                        ent.start, ent.end);
        sent.tags[t] = (continues ? "I-" : "B-") + ent.label;
        ++tokens_per_entity[e];
        const bool start_inside = ent.start > tok.start && ent.start < tok.end;
        const bool end_inside = ent.end > tok.start && ent.end < tok.end;
        if (start_inside || end_inside) {
          warn(warnings, "AlignmentMismatch",
               "doc " + doc.doc.doc_id + ": entity " + ent.ann_id + " [" +
                   std::to_string(ent.start) + "," + std::to_string(ent.end) +
                   ") has an edge inside token [" + std::to_string(tok.start) +
                   "," + std::to_string(tok.end) + ")");
        }
        break;
      }
    }
    result.push_back(std::move(sent));
  }
  for (std::size_t e = 0; e < ents.size(); ++e) {
    if (tokens_per_entity[e] == 0) {
      warn(warnings, "EntityDropped",
           "doc " + doc.doc.doc_id + ": entity " + ents[e].ann_id + " [" +
               std::to_string(ents[e].start) + "," + std::to_string(ents[e].end) +
               ") covers no token");
    }
  }
  return result;
}

std::vector<std::string> repair_bio(const std::vector<std::string>& tags) {
  std::vector<std::string> out = tags;
  for (std::size_t t = 0; t < out.size(); ++t) {
    if (out[t].rfind("I-", 0) != 0) continue;
    const std::string label = label_of(out[t]);
    const bool continues = t > 0 && out[t - 1] != "O" && label_of(out[t - 1]) == label;
    if (!continues) out[t] = "B-" + label;
  }
  return out;
}

bool is_valid_bio(const std::vector<std::string>& tags) {
  for (std::size_t t = 0; t < tags.size(); ++t) {
    const auto& tag = tags[t];
    if (tag == "O") continue;
    if (tag.size() < 3 || tag[1] != '-' || (tag[0] != 'B' && tag[0] != 'I')) return false;
    if (tag[0] == 'I') {
      if (t == 0 || tags[t - 1] == "O" || label_of(tags[t - 1]) != label_of(tag)) {
        return false;
      }
    }
  }
  return true;
}

std::vector<EntityMention> decode_bio(const TaggedSentence& sentence) {
  const auto tags = repair_bio(sentence.tags);
  std::vector<EntityMention> mentions;
  for (std::size_t t = 0; t < tags.size(); ++t) {
    const auto& tok = sentence.tokens[t];
    if (tags[t].rfind("B-", 0) == 0) {
      mentions.push_back({"", tok.start, tok.end, label_of(tags[t])});
    } else if (tags[t].rfind("I-", 0) == 0) {
      mentions.back().end = tok.end;
    }
  }
  return mentions;
}

std::string write_conll(const std::vector<TaggedSentence>& sentences) {
  std::string out;
  for (const auto& sent : sentences) {
    for (std::size_t t = 0; t < sent.tokens.size(); ++t) {
      out += sent.tokens[t].surface;
      out += ' ';
      out += sent.tags[t];
      out += '\n';
    }
    out += '\n';
  }
  return out;
}

std::vector<TaggedSentence> read_conll(std::string_view content) {
  std::vector<TaggedSentence> sentences;
  TaggedSentence current;
  std::size_t lineno = 0;
  for (std::string_view line : split_lines(content)) {
    ++lineno;
    const auto fields = split_ws(line);
    if (fields.empty()) {
      if (!current.tokens.empty()) sentences.push_back(std::move(current));
      current = {};
      continue;
    }
    if (fields.size() != 2) {
      throw Error(ErrorKind::MalformedConll,
                  "line " + std::to_string(lineno) + ": expected 2 columns, got " +
                      std::to_string(fields.size()));
    }
    current.tokens.push_back({std::string(fields[0]), 0, 0});
    current.tags.emplace_back(fields[1]);
  }
  if (!current.tokens.empty()) sentences.push_back(std::move(current));
  return sentences;
}

std::string write_offsets(const std::vector<TaggedSentence>& sentences) {
  std::string out;
  for (const auto& sent : sentences) {
    for (const auto& tok : sent.tokens) {
      out += std::to_string(tok.start);
      out += ' ';
      out += std::to_string(tok.end);
      out += '\n';
    }
    out += '\n';
  }
  return out;
}

void apply_offsets(std::vector<TaggedSentence>& sentences,
                   std::string_view offsets_content) {
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> blocks(1);
  for (std::string_view line : split_lines(offsets_content)) {
    const auto fields = split_ws(line);
    if (fields.empty()) {
      if (!blocks.back().empty()) blocks.emplace_back();
      continue;
    }
    std::size_t s = 0, e = 0;
    if (fields.size() != 2 || !parse_size(fields[0], s) || !parse_size(fields[1], e)) {
      throw Error(ErrorKind::MalformedConll, "bad offsets line: " + std::string(line));
    }
    blocks.back().emplace_back(s, e);
  }
  if (blocks.back().empty()) blocks.pop_back();
  if (blocks.size() != sentences.size()) {
    throw Error(ErrorKind::MalformedConll,
                "offsets file has " + std::to_string(blocks.size()) +
                    " sentences, CoNLL has " + std::to_string(sentences.size()));
  }
  for (std::size_t s = 0; s < sentences.size(); ++s) {
    auto& toks = sentences[s].tokens;
    if (blocks[s].size() != toks.size()) {
      throw Error(ErrorKind::MalformedConll,
                  "sentence " + std::to_string(s) + ": token count mismatch with offsets");
    }
    for (std::size_t t = 0; t < toks.size(); ++t) {
      toks[t].start = blocks[s][t].first;
      toks[t].end = blocks[s][t].second;
    }
  }
}

std::string write_brat(const std::vector<EntityMention>& mentions,
                       std::string_view text) {
  const std::u32string chars = utf8::decode(text);
  std::ostringstream out;
  std::size_t n = 0;
  for (const auto& m : mentions) {
    if (m.end > chars.size() || m.start >= m.end) {
      throw Error(ErrorKind::OffsetOutOfRange,
                  "mention [" + std::to_string(m.start) + "," +
                      std::to_string(m.end) + ") outside text");
    }
    out << 'T' << ++n << '\t' << m.label << ' ' << m.start << ' ' << m.end << '\t'
        << utf8::encode(std::u32string_view(chars).substr(m.start, m.end - m.start))
        << '\n';
  }
  return out.str();
}

}  // namespace stacktag
