#pragma once

#include <stdexcept>
#include <string>

namespace mbst {

enum class ErrorCode {
  kInvalidBox,
  kInvalidArgument,
  kChannelMismatch,
  kShapeMismatch,
  kMissingEmbedding,
  kCorruptFile,
  kDimensionMismatch,
  kDuplicateId,
  kUnknownKind,
  kEmptyInput,
  kMissingFile,
  kCountMismatch,
  kOffSchedule,
  kNotInitialized,
  kIo,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidBox: return "invalid-box";
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kChannelMismatch: return "channel-mismatch";
    case ErrorCode::kShapeMismatch: return "shape-mismatch";
    case ErrorCode::kMissingEmbedding: return "missing-embedding";
    case ErrorCode::kCorruptFile: return "corrupt-file";
    case ErrorCode::kDimensionMismatch: return "dimension-mismatch";
    case ErrorCode::kDuplicateId: return "duplicate-id";
    case ErrorCode::kUnknownKind: return "unknown-kind";
    case ErrorCode::kEmptyInput: return "empty-input";
    case ErrorCode::kMissingFile: return "missing-file";
    case ErrorCode::kCountMismatch: return "count-mismatch";
    case ErrorCode::kOffSchedule: return "off-schedule";
    case ErrorCode::kNotInitialized: return "not-initialized";
    case ErrorCode::kIo: return "io";
  }
  return "unknown";
}

// Every failure in the library is reported through this type; `code()` lets
// callers and tests branch on the category without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace mbst
