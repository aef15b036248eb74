#include "specpipe/error.hpp"

namespace specpipe {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DuplicateClipId: return "DuplicateClipId";
    case ErrorCode::UnknownLabel: return "UnknownLabel";
    case ErrorCode::UnknownTask: return "UnknownTask";
    case ErrorCode::ConflictingLabel: return "ConflictingLabel";
    case ErrorCode::ConflictingDate: return "ConflictingDate";
    case ErrorCode::MalformedDate: return "MalformedDate";
    case ErrorCode::MalformedRow: return "MalformedRow";
    case ErrorCode::EmptySplit: return "EmptySplit";
    case ErrorCode::UnsupportedEncoding: return "UnsupportedEncoding";
    case ErrorCode::TruncatedFile: return "TruncatedFile";
    case ErrorCode::ZeroSamples: return "ZeroSamples";
    case ErrorCode::InputTooShort: return "InputTooShort";
    case ErrorCode::DegenerateBand: return "DegenerateBand";
    case ErrorCode::FrequencyOutOfRange: return "FrequencyOutOfRange";
    case ErrorCode::EmptyResponseList: return "EmptyResponseList";
    case ErrorCode::EmptyClass: return "EmptyClass";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::DegenerateBatch: return "DegenerateBatch";
    case ErrorCode::NonFiniteGradient: return "NonFiniteGradient";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::EmptyGroup: return "EmptyGroup";
    case ErrorCode::IdMismatch: return "IdMismatch";
    case ErrorCode::SingleClassInput: return "SingleClassInput";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::MissingRun: return "MissingRun";
    case ErrorCode::MissingFile: return "MissingFile";
    case ErrorCode::IoFailure: return "IoFailure";
  }
  return "UnknownError";
}

}  // namespace specpipe
