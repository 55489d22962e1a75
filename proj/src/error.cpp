#include "stacktag/error.hpp"

namespace stacktag {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::MalformedAnnotation: return "MalformedAnnotation";
    case ErrorKind::OffsetOutOfRange: return "OffsetOutOfRange";
    case ErrorKind::SurfaceMismatch: return "SurfaceMismatch";
    case ErrorKind::OverlappingEntities: return "OverlappingEntities";
    case ErrorKind::MalformedConll: return "MalformedConll";
    case ErrorKind::InsufficientData: return "InsufficientData";
    case ErrorKind::EmptyVocab: return "EmptyVocab";
    case ErrorKind::MalformedEmbeddingFile: return "MalformedEmbeddingFile";
    case ErrorKind::EmptyCorpus: return "EmptyCorpus";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::InvalidTagIndex: return "InvalidTagIndex";
    case ErrorKind::EmptyDataset: return "EmptyDataset";
    case ErrorKind::EmptySpace: return "EmptySpace";
    case ErrorKind::ModelMissingComponent: return "ModelMissingComponent";
    case ErrorKind::MalformedModel: return "MalformedModel";
    case ErrorKind::DuplicateMention: return "DuplicateMention";
    case ErrorKind::UnknownSubcommand: return "UnknownSubcommand";
    case ErrorKind::InvalidFlag: return "InvalidFlag";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace stacktag
