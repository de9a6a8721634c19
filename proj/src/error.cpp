#include "curvssl/error.hpp"

namespace curvssl {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::NotScalarOutput: return "NotScalarOutput";
    case ErrorKind::KTooLarge: return "KTooLarge";
    case ErrorKind::DegenerateEdge: return "DegenerateEdge";
    case ErrorKind::BatchTooSmall: return "BatchTooSmall";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::InvalidArchitecture: return "InvalidArchitecture";
    case ErrorKind::IoFailure: return "IoFailure";
    case ErrorKind::FormatVersionMismatch: return "FormatVersionMismatch";
    case ErrorKind::DigestMismatch: return "DigestMismatch";
    case ErrorKind::BadMagic: return "BadMagic";
    case ErrorKind::CountMismatch: return "CountMismatch";
    case ErrorKind::TruncatedFile: return "TruncatedFile";
    case ErrorKind::InvalidCounts: return "InvalidCounts";
    case ErrorKind::EmptyDataset: return "EmptyDataset";
    case ErrorKind::UnknownKey: return "UnknownKey";
    case ErrorKind::TypeError: return "TypeError";
    case ErrorKind::InvariantViolation: return "InvariantViolation";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message, std::optional<std::size_t> row)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind), row_(row) {}

}  // namespace curvssl
