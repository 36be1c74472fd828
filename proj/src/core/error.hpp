#pragma once

#include <stdexcept>
#include <string>

namespace urf {

// Numeric values are part of the C API contract (see urf.h).
enum class ErrorCode : int {
  Ok = 0,
  InvalidArgument = 1,
  Io = 2,
  Parse = 3,
  RaggedRow = 4,
  DuplicateId = 5,
  EmptyMatrix = 6,
  FeatureAllMissing = 7,
  AllSamplesDropped = 8,
  InsufficientSamples = 9,
  FeatureMismatch = 10,
  ZeroBetweenDispersion = 11,
  MissingLeafLabel = 12,
  EmptyCluster = 13,
  ZeroVariance = 14,
  SampleMismatch = 15,
  UnmatchedId = 16,
  AllCensored = 17,
  EmptyBundle = 18,
  VersionMismatch = 19,
  DuplicateClient = 20,
  OutOfRange = 21,
  Internal = 99,
};

const char* error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) fail(code, what);
}

}  // namespace urf
