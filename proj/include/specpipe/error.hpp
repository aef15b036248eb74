#pragma once

#include <stdexcept>
#include <string>

namespace specpipe {

enum class ErrorCode {
  // manifest
  DuplicateClipId,
  UnknownLabel,
  UnknownTask,
  ConflictingLabel,
  ConflictingDate,
  MalformedDate,
  MalformedRow,
  EmptySplit,
  // audio
  UnsupportedEncoding,
  TruncatedFile,
  ZeroSamples,
  // dsp
  InputTooShort,
  DegenerateBand,
  FrequencyOutOfRange,
  EmptyResponseList,
  // model
  EmptyClass,
  ShapeMismatch,
  DegenerateBatch,
  NonFiniteGradient,
  EmptyDataset,
  // eval
  EmptyGroup,
  IdMismatch,
  SingleClassInput,
  // cli / io
  ConfigError,
  MissingRun,
  MissingFile,
  IoFailure,
};

// Buckets map to CLI exit codes: Config=1, Data=2, Numeric=3.
enum class ErrorCategory { Config, Data, Numeric };

constexpr ErrorCategory category_of(ErrorCode code) {
  switch (code) {
    case ErrorCode::ConfigError:
    case ErrorCode::MissingRun:
      return ErrorCategory::Config;
    case ErrorCode::InputTooShort:
    case ErrorCode::DegenerateBand:
    case ErrorCode::FrequencyOutOfRange:
    case ErrorCode::EmptyResponseList:
    case ErrorCode::ShapeMismatch:
    case ErrorCode::DegenerateBatch:
    case ErrorCode::NonFiniteGradient:
    case ErrorCode::SingleClassInput:
      return ErrorCategory::Numeric;
    default:
      return ErrorCategory::Data;
  }
}

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const { return code_; }
  ErrorCategory category() const { return category_of(code_); }

 private:
  ErrorCode code_;
};

}  // namespace specpipe
