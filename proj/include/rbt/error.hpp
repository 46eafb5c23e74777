#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rbt {

// Every failure the library reports carries one of these codes. The CLI maps
// each code onto an exit-code class via category().
enum class ErrorCode {
  // configuration
  kConfig,
  kInvalidArgument,
  // data
  kMalformedFile,
  kDuplicatePhrase,
  kOverlappingBands,
  kUnknownGroupMember,
  kBoundNotOnBandEdge,
  kEmptyRange,
  kUnknownPhrase,
  kAmbiguousConnectives,
  kEmptyPrecondition,
  kEmptyPostcondition,
  kEntityClassMismatch,
  kNoForeground,
  kValueOutsideAllBands,
  kUnresolvablePhraseSlot,
  kConflictingBandTerms,
  kUnknownTermId,
  kUnknownLabel,
  kCycleDetected,
  kSchemaMismatch,
  kUnknownTaxonomyRoot,
  kProviderFailure,
  kEmptyInputs,
  kEmptyDistribution,
  kDimensionMismatch,
  kTooFewSamples,
  kLabelingFailed,
  kUnknownRequirement,
  // protocol / execution
  kGeneratorExhausted,
  kProtocolViolation,
  kMutCrashed,
  kTimeout,
  kIo,
};

enum class ErrorCategory { kConfig, kData, kProtocol, kInternal };

std::string_view to_string(ErrorCode code);
ErrorCategory category(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Byte offsets into the text handed to the parser.
struct TextSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
};

class ParseError : public Error {
 public:
  ParseError(ErrorCode code, const std::string& message, TextSpan span)
      : Error(code, message + " at [" + std::to_string(span.begin) + "," +
                        std::to_string(span.end) + ")"),
        span_(span) {}

  TextSpan span() const noexcept { return span_; }

 private:
  TextSpan span_;
};

}  // namespace rbt
