#ifndef REFRAME_ALIGNMENT_HPP
#define REFRAME_ALIGNMENT_HPP

// Global alignment of pairwise point maps. Each edge (n, m) of the frame
// graph carries two point maps expressed in camera n; the optimizer finds
// world point maps P, one world-from-camera pose per frame and one scale per
// edge minimizing
//
//   sum_e sum_{v in e} sum_i C_i^{v,e} | P_i^v - s_e (T_n Q_i^{v,e}) |
//
// with T_n the pose of the edge's reference frame and an unsquared norm.
// Frame 0 is pinned to the identity and sum_e log s_e = 0.

#include <cstdint>
#include <vector>

#include "reframe/geometry.hpp"
#include "reframe/video.hpp"

namespace reframe {

struct Edge {
  int ref{0};
  int src{0};
  bool operator==(const Edge&) const = default;
  auto operator<=>(const Edge&) const = default;
};

/// Every ordered pair inside each sliding window of `window` consecutive
/// frames, deduplicated, sorted by (ref, src). Frames are 0-based.
std::vector<Edge> build_graph(int frame_count, int window);

struct EdgeObservation {
  int ref_frame{0};
  int src_frame{0};
  PointMap pointmap_ref;  // frame ref, camera-ref coordinates
  PointMap pointmap_src;  // frame src, camera-ref coordinates
  Eigen::ArrayXd confidence_ref;
  Eigen::ArrayXd confidence_src;
};

struct AlignmentState {
  std::vector<PointMap> global_pointmaps;  // world coordinates
  std::vector<Posed> frame_poses;          // world-from-camera
  Eigen::VectorXd log_scales;              // one per edge
};

/// Throws InconsistentShapes when an edge refers to missing frames or grid
/// sizes disagree.
double alignment_loss(const AlignmentState& state, const std::vector<EdgeObservation>& observations);

enum class LearningRateSchedule {
  Constant,
  /// Geometric decay from learning_rate to final_learning_rate over the
  /// second half of the run.
  ExponentialTail,
};

struct AlignmentConfig {
  int steps{300};
  double learning_rate{0.01};
  double final_learning_rate{1e-6};
  LearningRateSchedule schedule{LearningRateSchedule::Constant};
  std::uint64_t seed{0};
};

struct AlignmentResult {
  AlignmentState state;
  double initial_loss{0};
  double final_loss{0};
};

/// Adam on the analytic gradient of alignment_loss. Rotations are unit
/// quaternions renormalized after every step; the log-scale mean is removed
/// after every step. Initialization: depths of frame n come from its first
/// edge (as reference if possible), poses identity, log scales zero.
/// The seed is recorded for reproducibility; the initialization itself is
/// deterministic. Returns the last iterate, or the initial state when the
/// last iterate's loss is higher.
AlignmentResult optimize_alignment(const std::vector<EdgeObservation>& observations,
                                   const std::vector<Intrinsicsd>& intrinsics, const AlignmentConfig& config = {});

/// Flat parameter view of the objective, exposed for gradient checks.
/// World points are tied to their camera: P_n,i = T_n (d_n,i * ray_i), with
/// ray_i = ((u - cx) / fx, (v - cy) / fy, 1) at pixel i's center.
/// Layout: [depth (frames x pixels) | per frame n >= 1: quaternion (w, x, y,
/// z), translation | log scales]. Rotation matrices use the unit-quaternion
/// polynomial, so the objective is smooth away from zero residuals.
class AlignmentProblem {
 public:
  AlignmentProblem(const std::vector<EdgeObservation>& observations, const std::vector<Intrinsicsd>& intrinsics);

  Eigen::Index parameter_count() const;
  Eigen::VectorXd pack(const AlignmentState& state) const;
  AlignmentState unpack(const Eigen::VectorXd& x) const;
  /// Loss at x; fills grad (resized) when non-null.
  double evaluate(const Eigen::VectorXd& x, Eigen::VectorXd* grad) const;

  int frames() const { return frames_; }
  int height() const { return height_; }
  int width() const { return width_; }

 private:
  Eigen::Index pose_offset(int frame) const;
  Eigen::Index scale_offset() const;

  const std::vector<EdgeObservation>& observations_;
  std::vector<Eigen::Matrix3Xd> rays_;
  int frames_;
  int height_;
  int width_;
};

/// Frames not connected to frame 0 through the edges; empty when connected.
std::vector<int> unreachable_frames(const std::vector<Edge>& edges, int frame_count);

}  // namespace reframe

#endif  // REFRAME_ALIGNMENT_HPP
