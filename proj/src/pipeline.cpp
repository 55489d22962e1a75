#include "stacktag/pipeline.hpp"

namespace stacktag {

void ModelBundle::save(const std::string& path) const {
  ModelArchive archive;
  archive.manifest["kind"] = "tagger_bundle";
  stack.save(archive, "stack.");
  tagger.save(archive);
  archive.save_file(path);
}

ModelBundle ModelBundle::load(const std::string& path) {
  return from_archive(ModelArchive::load_file(path));
}

ModelBundle ModelBundle::from_archive(const ModelArchive& archive) {
  ModelBundle bundle;
  bundle.tagger = Tagger::load(archive);
  bundle.stack = EmbeddingStack::load(archive, "stack.");
  if (bundle.stack.total_dim() != bundle.tagger.input_dim()) {
    throw Error(ErrorKind::MalformedModel, "stack width " + std::to_string(bundle.stack.total_dim()) +
                                               " does not match tagger input " +
                                               std::to_string(bundle.tagger.input_dim()));
  }
  return bundle;
}

TagOutput tag_text(std::string_view text, ModelBundle& bundle, const EosModel* splitter) {
  TagOutput out;
  const auto spans = splitter ? split_sentences(text, *splitter) : split_sentences_rule(text);
  for (auto& tokens : tokenize_spans(text, spans)) {
    if (tokens.empty()) continue;
    TaggedSentence s;
    s.tags = repair_bio(bundle.tagger.decode_tags(bundle.stack.embed(tokens)));
    s.tokens = std::move(tokens);
    for (const auto& m : decode_bio(s)) out.mentions.push_back(m);
    out.sentences.push_back(std::move(s));
  }
  out.ann = write_brat(out.mentions, text);
  return out;
}

std::vector<TaggedSentence> tag_sentences(std::vector<TaggedSentence> sentences,
                                          ModelBundle& bundle) {
  for (auto& s : sentences) {
    s.tags = s.tokens.empty()
                 ? std::vector<std::string>{}
                 : repair_bio(bundle.tagger.decode_tags(bundle.stack.embed(s.tokens)));
  }
  return sentences;
}

}  // namespace stacktag
