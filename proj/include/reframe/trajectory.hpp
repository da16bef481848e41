#ifndef REFRAME_TRAJECTORY_HPP
#define REFRAME_TRAJECTORY_HPP

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "reframe/geometry.hpp"

namespace reframe {

struct TrajectoryFrame {
  std::int64_t timestamp{0};
  Posed pose;
  std::optional<Intrinsicsd> intrinsics;
};

/// Non-empty sequence of camera-from-world poses with strictly increasing
/// timestamps.
class Trajectory {
 public:
  explicit Trajectory(std::vector<TrajectoryFrame> frames);

  /// Timestamps 0..n-1, no intrinsics.
  static Trajectory from_poses(const std::vector<Posed>& poses);

  std::size_t size() const { return frames_.size(); }
  const TrajectoryFrame& operator[](std::size_t i) const { return frames_[i]; }
  const std::vector<TrajectoryFrame>& frames() const { return frames_; }
  std::vector<Posed> poses() const;

  auto begin() const { return frames_.begin(); }
  auto end() const { return frames_.end(); }

 private:
  std::vector<TrajectoryFrame> frames_;
};

/// Reads the RealEstate10K camera text format. The first line is an opaque
/// source identifier; every further non-empty line holds 19 fields:
///   timestamp fx fy cx cy 0 0 r11 r12 r13 t1 r21 r22 r23 t2 r31 r32 r33 t3
/// with intrinsics normalized by the image size (scaled back here by
/// width/height) and a camera-from-world 3x4 matrix.
Trajectory parse_realestate(std::istream& in, int width, int height, std::string* source_id = nullptr);
Trajectory parse_realestate(const std::string& text, int width, int height, std::string* source_id = nullptr);

/// Delta_j = P_j * inverse(P_1); the first frame becomes exactly identity.
Trajectory relativize(const Trajectory& t);

/// Scales every translation by target_scale / sum_j |t_j| (no-op when the sum
/// is <= 1e-12). Rotations are left untouched.
Trajectory normalize_translation(const Trajectory& t, double target_scale);

/// target_j = relative_j * original_j (left multiplication).
Trajectory compose_targets(const Trajectory& relative, const Trajectory& original);

enum class BasicMotion {
  ZoomIn,
  ZoomOut,
  PanLeft,
  PanRight,
  PanUp,
  PanDown,
  RotateCW,
  RotateCCW,
  OrbitCW,
  OrbitCCW,
};

/// Parses "zoom-in", "pan-right", "rotate-cw", "orbit-ccw", ...
BasicMotion parse_basic_motion(const std::string& name);
std::string basic_motion_name(BasicMotion kind);

/// Linear ramp from identity to `magnitude` (scene units or radians) over
/// `frames` poses. Signs follow the image: PanRight/PanDown shift content
/// toward +u/+v (pose translation +x/+y), ZoomIn brings content closer
/// (translation -z), RotateCW spins content clockwise on screen (+angle
/// about the view axis). Orbits swing the camera around the point
/// orbit_radius ahead of the first camera and keep it aimed there; OrbitCW
/// moves the camera toward +x.
Trajectory basic_trajectory(BasicMotion kind, double magnitude, int frames,
                            std::optional<double> orbit_radius = std::nullopt);

}  // namespace reframe

#endif  // REFRAME_TRAJECTORY_HPP
