#ifndef REFRAME_METRICS_HPP
#define REFRAME_METRICS_HPP

#include <optional>
#include <vector>

#include "reframe/trajectory.hpp"
#include "reframe/video.hpp"

namespace reframe {

struct PoseErrorReport {
  double rot_error{0};    // radians, summed over frames
  double trans_error{0};  // unitless, summed over frames
  std::vector<double> rot_per_frame;
  std::vector<double> trans_per_frame;
};

/// sum_j arccos(clamp((tr(R_est R_gt^T) - 1) / 2, -1, 1)). Inputs are used
/// as given (callers relativize).
double rot_error(const Trajectory& est, const Trajectory& gt, std::vector<double>* per_frame = nullptr);

/// Both trajectories are relativized and normalized to unit translation sum,
/// then sum_j |T_gt_j - T_est_j|.
double trans_error(const Trajectory& est, const Trajectory& gt, std::vector<double>* per_frame = nullptr);

/// Relativizes both inputs, then evaluates rot_error and trans_error.
PoseErrorReport pose_errors(const Trajectory& est, const Trajectory& gt);

/// Peak signal-to-noise ratio with peak 1. `exact` marks identical inputs
/// (the dB value is then +inf).
struct Psnr {
  double db{0};
  bool exact{false};
};

/// Over all pixels, or over mask=1 pixels (all channels) when a mask is
/// given. Throws EmptyMask when the mask has no known pixel.
Psnr psnr(const PixelVideo& a, const PixelVideo& b, const OcclusionMask* mask = nullptr);

}  // namespace reframe

#endif  // REFRAME_METRICS_HPP
