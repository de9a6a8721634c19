#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace curvssl {

enum class ErrorKind {
  ShapeMismatch,
  NonFinite,
  NotScalarOutput,
  KTooLarge,
  DegenerateEdge,
  BatchTooSmall,
  InvalidArgument,
  InvalidArchitecture,
  IoFailure,
  FormatVersionMismatch,
  DigestMismatch,
  BadMagic,
  CountMismatch,
  TruncatedFile,
  InvalidCounts,
  EmptyDataset,
  UnknownKey,
  TypeError,
  InvariantViolation,
};

const char* to_string(ErrorKind kind);

// Every failure surfaced by the library. `row` is set when the failure can be
// pinned to one batch row (DegenerateEdge) or one input line (config errors).
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message, std::optional<std::size_t> row = std::nullopt);

  ErrorKind kind() const noexcept { return kind_; }
  std::optional<std::size_t> row() const noexcept { return row_; }

 private:
  ErrorKind kind_;
  std::optional<std::size_t> row_;
};

}  // namespace curvssl
