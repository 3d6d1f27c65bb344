#pragma once

#include <stdexcept>
#include <string>

namespace planedit {

struct UnknownTokenError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidTargetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GroupTooSmallError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DegenerateRangeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DimensionMismatchError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EmptySegmentError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TestCountTooLargeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct LengthMismatchError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CheckpointMismatchError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Oracle endpoint could not be reached within the retry budget. Retryable at
// a higher level; a training step that sees this must not half-apply.
struct OracleUnavailableError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Oracle responded, but the score distribution violates its invariants.
struct OracleMalformedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace planedit
