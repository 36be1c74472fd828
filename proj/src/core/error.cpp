#include "error.hpp"

namespace urf {

const char* error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::Ok: return "Ok";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Io: return "Io";
    case ErrorCode::Parse: return "Parse";
    case ErrorCode::RaggedRow: return "RaggedRow";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::EmptyMatrix: return "EmptyMatrix";
    case ErrorCode::FeatureAllMissing: return "FeatureAllMissing";
    case ErrorCode::AllSamplesDropped: return "AllSamplesDropped";
    case ErrorCode::InsufficientSamples: return "InsufficientSamples";
    case ErrorCode::FeatureMismatch: return "FeatureMismatch";
    case ErrorCode::ZeroBetweenDispersion: return "ZeroBetweenDispersion";
    case ErrorCode::MissingLeafLabel: return "MissingLeafLabel";
    case ErrorCode::EmptyCluster: return "EmptyCluster";
    case ErrorCode::ZeroVariance: return "ZeroVariance";
    case ErrorCode::SampleMismatch: return "SampleMismatch";
    case ErrorCode::UnmatchedId: return "UnmatchedId";
    case ErrorCode::AllCensored: return "AllCensored";
    case ErrorCode::EmptyBundle: return "EmptyBundle";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::DuplicateClient: return "DuplicateClient";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::Internal: return "Internal";
  }
  return "Unknown";
}

}  // namespace urf
