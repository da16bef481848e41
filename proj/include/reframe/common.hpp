#ifndef REFRAME_COMMON_HPP
#define REFRAME_COMMON_HPP

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace reframe {

/// Every failure the library reports. The enumerator name is also the
/// stable string surfaced by the CLI for data errors.
enum class Errc {
  NonPositiveDepth,
  InvalidPose,
  InvalidIntrinsics,
  MalformedLine,
  EmptyTrajectory,
  NonIncreasingTimestamps,
  LengthMismatch,
  InvalidFrameCount,
  MissingOrbitRadius,
  TooFewFrames,
  WindowTooSmall,
  InconsistentShapes,
  DisconnectedGraph,
  NonFiniteLoss,
  InvalidBetaRange,
  ShapeMismatch,
  DegenerateAlpha,
  StepOrderViolation,
  InvalidCounts,
  PoseCountMismatch,
  NonDivisibleFactor,
  InvalidConfig,
  NonFiniteLatent,
  EmptyMask,
  InvalidSpec,
  FrameOutOfRange,
  BadMagic,
  BadCRC,
  UnsupportedVersion,
  UnsupportedDtype,
  TruncatedFile,
  IoFailure,
};

const char* errc_name(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what, std::vector<std::int64_t> where = {})
      : std::runtime_error(std::string(errc_name(code)) + ": " + what),
        code_(code),
        where_(std::move(where)) {}

  Errc code() const noexcept { return code_; }
  const char* name() const noexcept { return errc_name(code_); }
  /// Line numbers, frame indices or step indices attached to the error.
  const std::vector<std::int64_t>& where() const noexcept { return where_; }

 private:
  Errc code_;
  std::vector<std::int64_t> where_;
};

/// Worker count for data-parallel loops. Reads REFRAME_THREADS once
/// (0 or unset = hardware concurrency).
unsigned worker_count();

/// Runs fn(i) for i in [0, n). Iterations must be independent; results are
/// identical for every worker count.
void parallel_for(int n, const std::function<void(int)>& fn);

}  // namespace reframe

#endif  // REFRAME_COMMON_HPP
