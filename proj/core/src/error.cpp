#include "signdense/error.hpp"

namespace signdense {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MalformedHeader: return "MalformedHeader";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::TruncatedFile: return "TruncatedFile";
    case ErrorCode::UnknownGloss: return "UnknownGloss";
    case ErrorCode::MalformedRecord: return "MalformedRecord";
    case ErrorCode::SpanOrderViolation: return "SpanOrderViolation";
    case ErrorCode::DimMismatch: return "DimMismatch";
    case ErrorCode::SpanOutOfRange: return "SpanOutOfRange";
    case ErrorCode::EmptyJoin: return "EmptyJoin";
    case ErrorCode::DuplicateClipId: return "DuplicateClipId";
    case ErrorCode::SingleGroupCorpus: return "SingleGroupCorpus";
    case ErrorCode::NoDefinedSdr: return "NoDefinedSdr";
    case ErrorCode::TooFewGlosses: return "TooFewGlosses";
    case ErrorCode::SequenceTooShort: return "SequenceTooShort";
    case ErrorCode::EmptyGlossList: return "EmptyGlossList";
    case ErrorCode::FrameOutOfRange: return "FrameOutOfRange";
    case ErrorCode::EmptyReference: return "EmptyReference";
    case ErrorCode::ZeroTextLength: return "ZeroTextLength";
    case ErrorCode::TooFewFrames: return "TooFewFrames";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::ConstantInput: return "ConstantInput";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::InfeasibleSeparation: return "InfeasibleSeparation";
    case ErrorCode::DivergenceDetected: return "DivergenceDetected";
    case ErrorCode::DegenerateCovariance: return "DegenerateCovariance";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& detail)
    : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

bool is_numerical_failure(ErrorCode code) noexcept {
  return code == ErrorCode::DivergenceDetected || code == ErrorCode::DegenerateCovariance;
}

}  // namespace signdense
