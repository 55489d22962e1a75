#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace stacktag {

enum class ErrorKind {
  MalformedAnnotation,
  OffsetOutOfRange,
  SurfaceMismatch,
  OverlappingEntities,
  MalformedConll,
  InsufficientData,
  EmptyVocab,
  MalformedEmbeddingFile,
  EmptyCorpus,
  DimensionMismatch,
  InvalidTagIndex,
  EmptyDataset,
  EmptySpace,
  ModelMissingComponent,
  MalformedModel,
  DuplicateMention,
  UnknownSubcommand,
  InvalidFlag,
  Io,
};

std::string_view to_string(ErrorKind kind);

// All library failures surface as this exception; `kind()` is stable and
// machine-readable, `what()` is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

// Non-fatal conditions (alignment boundary mismatches, all-unknown OOV
// lookups) are collected here when the caller passes a sink.
struct Warning {
  std::string kind;
  std::string message;
};

using Warnings = std::vector<Warning>;

inline void warn(Warnings* sink, std::string kind, std::string message) {
  if (sink != nullptr) sink->push_back({std::move(kind), std::move(message)});
}

}  // namespace stacktag
