#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "stacktag/error.hpp"

namespace stacktag {

// Offsets are half-open [start, end) and count Unicode scalar values.
struct RawDocument {
  std::string doc_id;
  std::string text;
};

struct EntityAnnotation {
  std::string ann_id;
  std::string label;
  std::size_t start = 0;
  std::size_t end = 0;
  std::string surface;

  bool operator==(const EntityAnnotation&) const = default;
};

struct Token {
  std::string surface;
  std::size_t start = 0;
  std::size_t end = 0;

  bool operator==(const Token&) const = default;
};

struct TaggedSentence {
  std::vector<Token> tokens;
  std::vector<std::string> tags;

  bool operator==(const TaggedSentence&) const = default;
};

struct AnnotatedDocument {
  RawDocument doc;
  std::vector<EntityAnnotation> entities;
  std::vector<TaggedSentence> sentences;
};

// A decoded span. `doc_id` is left empty by decode_bio and filled in by
// callers that know which document the sentence came from.
struct EntityMention {
  std::string doc_id;
  std::size_t start = 0;
  std::size_t end = 0;
  std::string label;

  auto operator<=>(const EntityMention&) const = default;
};

enum class OverlapPolicy { Reject, KeepLongest };

AnnotatedDocument parse_brat(std::string_view txt_content,
                             std::string_view ann_content,
                             std::string doc_id = {},
                             OverlapPolicy overlaps = OverlapPolicy::Reject);

std::vector<Token> tokenize(std::string_view text);

// Tokenizes each [start, end) span of `text` separately; offsets stay
// relative to the full text.
std::vector<std::vector<Token>> tokenize_spans(
    std::string_view text,
    const std::vector<std::pair<std::size_t, std::size_t>>& spans);

std::vector<TaggedSentence> align_bio(
    const AnnotatedDocument& doc,
    const std::vector<std::vector<Token>>& sentence_tokens,
    Warnings* warnings = nullptr);

// Repairs invalid BIO in place: an I-X that does not continue an X run
// becomes B-X.
std::vector<std::string> repair_bio(const std::vector<std::string>& tags);
bool is_valid_bio(const std::vector<std::string>& tags);

std::vector<EntityMention> decode_bio(const TaggedSentence& sentence);

std::string write_conll(const std::vector<TaggedSentence>& sentences);
std::vector<TaggedSentence> read_conll(std::string_view content);

// Sidecar with one "start end" pair per token line, mirroring the CoNLL
// blank-line structure.
std::string write_offsets(const std::vector<TaggedSentence>& sentences);
void apply_offsets(std::vector<TaggedSentence>& sentences,
                   std::string_view offsets_content);

// brat text-bound lines for mentions: "T<n>\tLABEL START END\tSURFACE".
std::string write_brat(const std::vector<EntityMention>& mentions,
                       std::string_view text);

// Slice of `text` by scalar-value offsets.
std::string slice(std::string_view text, std::size_t start, std::size_t end);

}  // namespace stacktag
