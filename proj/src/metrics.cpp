#include "reframe/metrics.hpp"

#include <cmath>
#include <limits>

namespace reframe {

namespace {

void require_same_length(const Trajectory& est, const Trajectory& gt) {
  if (est.size() != gt.size()) {
    throw Error(Errc::LengthMismatch, "trajectories differ in length",
                {static_cast<std::int64_t>(est.size()), static_cast<std::int64_t>(gt.size())});
  }
}

}  // namespace

double rot_error(const Trajectory& est, const Trajectory& gt, std::vector<double>* per_frame) {
  require_same_length(est, gt);
  if (per_frame) per_frame->clear();
  double total = 0.0;
  for (std::size_t j = 0; j < est.size(); ++j) {
    const double angle = rotation_angle(est[j].pose.rotation() * gt[j].pose.rotation().transpose());
    if (per_frame) per_frame->push_back(angle);
    total += angle;
  }
  return total;
}

double trans_error(const Trajectory& est, const Trajectory& gt, std::vector<double>* per_frame) {
  require_same_length(est, gt);
  const Trajectory e = normalize_translation(relativize(est), 1.0);
  const Trajectory g = normalize_translation(relativize(gt), 1.0);
  if (per_frame) per_frame->clear();
  double total = 0.0;
  for (std::size_t j = 0; j < e.size(); ++j) {
    const double d = (g[j].pose.translation() - e[j].pose.translation()).norm();
    if (per_frame) per_frame->push_back(d);
    total += d;
  }
  return total;
}

PoseErrorReport pose_errors(const Trajectory& est, const Trajectory& gt) {
  PoseErrorReport report;
  report.rot_error = rot_error(relativize(est), relativize(gt), &report.rot_per_frame);
  report.trans_error = trans_error(est, gt, &report.trans_per_frame);
  return report;
}

Psnr psnr(const PixelVideo& a, const PixelVideo& b, const OcclusionMask* mask) {
  require_same_shape(a, b);
  double sum = 0.0;
  std::size_t count = 0;
  if (!mask) {
    sum = (a.array() - b.array()).square().sum();
    count = static_cast<std::size_t>(a.array().size());
  } else {
    if (mask->frames() != a.frames() || mask->height() != a.height() || mask->width() != a.width()) {
      throw Error(Errc::ShapeMismatch, "mask does not match the video");
    }
    for (int f = 0; f < a.frames(); ++f) {
      for (int y = 0; y < a.height(); ++y) {
        for (int x = 0; x < a.width(); ++x) {
          if (!(*mask)(f, y, x)) continue;
          for (int c = 0; c < a.channels(); ++c) {
            const double d = a(f, c, y, x) - b(f, c, y, x);
            sum += d * d;
            ++count;
          }
        }
      }
    }
  }
  if (count == 0) throw Error(Errc::EmptyMask, "no known pixels to compare");
  const double mse = sum / double(count);
  if (mse == 0.0) return {std::numeric_limits<double>::infinity(), true};
  return {10.0 * std::log10(1.0 / mse), false};
}

}  // namespace reframe
