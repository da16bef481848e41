#ifndef REFRAME_SYNTHSCENE_HPP
#define REFRAME_SYNTHSCENE_HPP

// Procedural scenes with exact ground truth, rendered by analytic ray
// casting (a fronto-parallel textured plane plus optional moving spheres).
// All randomness comes from SplitMix64 (see rng.hpp), so a spec and a seed
// determine every output.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "reframe/alignment.hpp"
#include "reframe/geometry.hpp"
#include "reframe/trajectory.hpp"
#include "reframe/video.hpp"

namespace reframe {

enum class SceneKind { Static, Dynamic };

struct SceneSpec {
  SceneKind kind{SceneKind::Static};
  int frames{16};
  int width{64};
  int height{48};
  std::uint64_t seed{0};
  /// Source camera motion, ramped linearly over the sequence: total yaw
  /// (degrees, world-from-camera rotation about +y) and total sideways
  /// travel of the camera center along +x.
  double camera_yaw_deg{0.0};
  double camera_shift{0.0};
};

struct Sphere {
  Eigen::Vector3d center;    // position at frame 0
  Eigen::Vector3d velocity;  // world units per frame
  double radius{0.0};
  Eigen::Vector3d albedo;
};

struct SceneModel {
  SceneSpec spec;
  double background_depth{4.0};
  /// Per channel: two plane waves a*sin(2 pi (kx x + ky y) + phase).
  struct Wave {
    double amplitude, kx, ky, phase;
  };
  std::array<std::array<Wave, 2>, 3> background_waves{};
  std::vector<Sphere> movers;

  Eigen::Vector3d mover_position(std::size_t i, int frame) const {
    return movers[i].center + double(frame) * movers[i].velocity;
  }
  Eigen::Vector3d background_color(double x, double y) const;
};

SceneModel make_scene(const SceneSpec& spec);

struct GroundTruthView {
  Eigen::Matrix3Xd color;  // rgb per pixel
  Eigen::ArrayXd depth;
  PointMap pointmap;       // world coordinates
  PixelMask validity;
};

/// Nearest analytic hit per pixel center for the camera `pose`
/// (camera-from-world) at time `frame_index`.
GroundTruthView render_gt(const SceneModel& scene, const Posed& pose, const Intrinsicsd& intrinsics, int frame_index);

struct GroundTruthBundle {
  PixelVideo frames;
  std::vector<Eigen::ArrayXd> depth;
  std::vector<PointMap> pointmaps;
  std::vector<PixelMask> validity;
  Trajectory source_poses;
  Intrinsicsd intrinsics;
};

/// Camera path described by the spec's camera_yaw_deg / camera_shift.
Trajectory source_trajectory(const SceneSpec& spec);

/// Default intrinsics for a spec: focal length = width, centered.
Intrinsicsd scene_intrinsics(const SceneSpec& spec);

/// Renders frame j from poses[j] for every frame.
GroundTruthBundle render_bundle(const SceneModel& scene, const Trajectory& poses, const Intrinsicsd& intrinsics);

/// Convenience: make_scene + source_trajectory + render_bundle.
GroundTruthBundle make_bundle(const SceneSpec& spec);

/// Stand-in for a two-view reconstructor. For edge (n, m) both frames'
/// ground-truth point maps are expressed in camera n and perturbed by
/// Gaussian noise of std noise_sigma; confidence = 1 / (1 + |grad depth|)
/// of each frame's own depth map (central differences, one-sided at borders).
std::vector<EdgeObservation> emit_edge_observations(const GroundTruthBundle& bundle, const std::vector<Edge>& edges,
                                                    double noise_sigma, std::uint64_t seed);

/// Confidence map used by emit_edge_observations.
Eigen::ArrayXd depth_confidence(const Eigen::ArrayXd& depth, int height, int width);

SceneKind parse_scene_kind(const std::string& name);
std::string scene_kind_name(SceneKind kind);

}  // namespace reframe

#endif  // REFRAME_SYNTHSCENE_HPP
