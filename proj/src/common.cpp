#include "reframe/common.hpp"

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <thread>

namespace reframe {

const char* errc_name(Errc code) {
  switch (code) {
    case Errc::NonPositiveDepth: return "NonPositiveDepth";
    case Errc::InvalidPose: return "InvalidPose";
    case Errc::InvalidIntrinsics: return "InvalidIntrinsics";
    case Errc::MalformedLine: return "MalformedLine";
    case Errc::EmptyTrajectory: return "EmptyTrajectory";
    case Errc::NonIncreasingTimestamps: return "NonIncreasingTimestamps";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::InvalidFrameCount: return "InvalidFrameCount";
    case Errc::MissingOrbitRadius: return "MissingOrbitRadius";
    case Errc::TooFewFrames: return "TooFewFrames";
    case Errc::WindowTooSmall: return "WindowTooSmall";
    case Errc::InconsistentShapes: return "InconsistentShapes";
    case Errc::DisconnectedGraph: return "DisconnectedGraph";
    case Errc::NonFiniteLoss: return "NonFiniteLoss";
    case Errc::InvalidBetaRange: return "InvalidBetaRange";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::DegenerateAlpha: return "DegenerateAlpha";
    case Errc::StepOrderViolation: return "StepOrderViolation";
    case Errc::InvalidCounts: return "InvalidCounts";
    case Errc::PoseCountMismatch: return "PoseCountMismatch";
    case Errc::NonDivisibleFactor: return "NonDivisibleFactor";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::NonFiniteLatent: return "NonFiniteLatent";
    case Errc::EmptyMask: return "EmptyMask";
    case Errc::InvalidSpec: return "InvalidSpec";
    case Errc::FrameOutOfRange: return "FrameOutOfRange";
    case Errc::BadMagic: return "BadMagic";
    case Errc::BadCRC: return "BadCRC";
    case Errc::UnsupportedVersion: return "UnsupportedVersion";
    case Errc::UnsupportedDtype: return "UnsupportedDtype";
    case Errc::TruncatedFile: return "TruncatedFile";
    case Errc::IoFailure: return "IoFailure";
  }
  return "Unknown";
}

unsigned worker_count() {
  static const unsigned count = [] {
    unsigned requested = 0;
    if (const char* env = std::getenv("REFRAME_THREADS")) {
      requested = static_cast<unsigned>(std::strtoul(env, nullptr, 10));
    }
    if (requested == 0) requested = std::thread::hardware_concurrency();
    return std::max(1u, requested);
  }();
  return count;
}

void parallel_for(int n, const std::function<void(int)>& fn) {
  const int workers = static_cast<int>(std::min<unsigned>(worker_count(), std::max(n, 0)));
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (int i = w; i < n; i += workers) fn(i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace reframe
