#include "rbt/error.hpp"

namespace rbt {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kConfig: return "ConfigError";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kMalformedFile: return "MalformedFile";
    case ErrorCode::kDuplicatePhrase: return "DuplicatePhrase";
    case ErrorCode::kOverlappingBands: return "OverlappingBands";
    case ErrorCode::kUnknownGroupMember: return "UnknownGroupMember";
    case ErrorCode::kBoundNotOnBandEdge: return "BoundNotOnBandEdge";
    case ErrorCode::kEmptyRange: return "EmptyRange";
    case ErrorCode::kUnknownPhrase: return "UnknownPhrase";
    case ErrorCode::kAmbiguousConnectives: return "AmbiguousConnectives";
    case ErrorCode::kEmptyPrecondition: return "EmptyPrecondition";
    case ErrorCode::kEmptyPostcondition: return "EmptyPostcondition";
    case ErrorCode::kEntityClassMismatch: return "EntityClassMismatch";
    case ErrorCode::kNoForeground: return "NoForeground";
    case ErrorCode::kValueOutsideAllBands: return "ValueOutsideAllBands";
    case ErrorCode::kUnresolvablePhraseSlot: return "UnresolvablePhraseSlot";
    case ErrorCode::kConflictingBandTerms: return "ConflictingBandTerms";
    case ErrorCode::kUnknownTermId: return "UnknownTermId";
    case ErrorCode::kUnknownLabel: return "UnknownLabel";
    case ErrorCode::kCycleDetected: return "CycleDetected";
    case ErrorCode::kSchemaMismatch: return "SchemaMismatch";
    case ErrorCode::kUnknownTaxonomyRoot: return "UnknownTaxonomyRoot";
    case ErrorCode::kProviderFailure: return "ProviderFailure";
    case ErrorCode::kEmptyInputs: return "EmptyInputs";
    case ErrorCode::kEmptyDistribution: return "EmptyDistribution";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kTooFewSamples: return "TooFewSamples";
    case ErrorCode::kLabelingFailed: return "LabelingFailed";
    case ErrorCode::kUnknownRequirement: return "UnknownRequirement";
    case ErrorCode::kGeneratorExhausted: return "GeneratorExhausted";
    case ErrorCode::kProtocolViolation: return "ProtocolViolation";
    case ErrorCode::kMutCrashed: return "MutCrashed";
    case ErrorCode::kTimeout: return "Timeout";
    case ErrorCode::kIo: return "IoError";
  }
  return "UnknownError";
}

ErrorCategory category(ErrorCode code) {
  switch (code) {
    case ErrorCode::kConfig:
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kUnknownRequirement:
      return ErrorCategory::kConfig;
    case ErrorCode::kGeneratorExhausted:
    case ErrorCode::kProtocolViolation:
    case ErrorCode::kMutCrashed:
    case ErrorCode::kTimeout:
      return ErrorCategory::kProtocol;
    case ErrorCode::kIo:
      return ErrorCategory::kInternal;
    default:
      return ErrorCategory::kData;
  }
}

}  // namespace rbt
