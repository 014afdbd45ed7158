#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace signdense {

enum class ErrorCode {
  // corpus
  MalformedHeader,
  NonFiniteValue,
  TruncatedFile,
  UnknownGloss,
  MalformedRecord,
  SpanOrderViolation,
  DimMismatch,
  SpanOutOfRange,
  EmptyJoin,
  DuplicateClipId,
  // density
  SingleGroupCorpus,
  NoDefinedSdr,
  TooFewGlosses,
  // aligner
  SequenceTooShort,
  EmptyGlossList,
  FrameOutOfRange,
  EmptyReference,
  // signcl
  ZeroTextLength,
  TooFewFrames,
  IndexOutOfRange,
  // stats
  LengthMismatch,
  ConstantInput,
  TooFewSamples,
  // trainer
  InfeasibleSeparation,
  DivergenceDetected,
  DegenerateCovariance,
  // generic
  InvalidArgument,
  IoError,
};

std::string_view to_string(ErrorCode code) noexcept;

// Every fallible library call throws this; `code()` is stable and drives
// CLI exit statuses.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// True for failures caused by numerics at run time rather than bad input.
bool is_numerical_failure(ErrorCode code) noexcept;

}  // namespace signdense
