#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "stacktag/sentence_split.hpp"
#include "stacktag/stack.hpp"
#include "stacktag/tagger.hpp"

namespace stacktag {

// Everything `tag` needs: the embedding stack and the trained tagger.
struct ModelBundle {
  EmbeddingStack stack;
  Tagger tagger;

  void save(const std::string& path) const;
  // Throws ModelMissingComponent when the stack or the tagger is absent.
  static ModelBundle load(const std::string& path);
  static ModelBundle from_archive(const ModelArchive& archive);
};

struct TagOutput {
  std::vector<TaggedSentence> sentences;
  std::vector<EntityMention> mentions;
  std::string ann;  // brat text-bound lines
};

// split -> tokenize -> embed -> encode -> Viterbi -> BIO repair -> decode.
// Without a boundary model the rule-based splitter is used.
TagOutput tag_text(std::string_view text, ModelBundle& bundle,
                   const EosModel* splitter = nullptr);

// Retags already tokenized sentences in place of their tags.
std::vector<TaggedSentence> tag_sentences(std::vector<TaggedSentence> sentences,
                                          ModelBundle& bundle);

}  // namespace stacktag
