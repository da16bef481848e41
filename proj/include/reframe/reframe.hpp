#ifndef REFRAME_REFRAME_HPP
#define REFRAME_REFRAME_HPP

#include <optional>
#include <string>
#include <vector>

#include "reframe/geometry.hpp"
#include "reframe/scheduler.hpp"
#include "reframe/video.hpp"

namespace reframe {

struct ColoredPoint {
  Point3 position;  // world
  Eigen::Vector3d color;
  int frame{0};
  int source_index{0};  // row-major pixel index in the source frame
};

/// One colored point set per video frame, all in one world frame.
struct TimeAwarePointCloud {
  std::vector<std::vector<ColoredPoint>> frames;

  int frame_count() const { return static_cast<int>(frames.size()); }
  std::size_t total_points() const;
};

/// One point per valid pixel per frame, colored from that frame.
TimeAwarePointCloud lift_frames(const PixelVideo& video, const std::vector<PointMap>& pointmaps,
                                const std::vector<PixelMask>& validity);

enum class CloudMode {
  /// Frame j renders only the points lifted from frame j.
  TimeAware,
  /// Every frame renders the union of all frames' points.
  TimeStatic,
};

CloudMode parse_cloud_mode(const std::string& name);
std::string cloud_mode_name(CloudMode mode);

struct Rendering {
  PixelVideo image;
  OcclusionMask mask;
};

/// Forward point splatting with a z-buffer. A point projected to (u, v)
/// covers the pixel centers inside the axis-aligned square of side
/// splat_radius centered on (u, v), boundary included. Points with camera
/// depth <= 1e-4 are culled. The nearest depth wins; ties go to the lower
/// frame index, then the lower source pixel index. Uncovered pixels get
/// mask 0 and color 0.
Rendering render_cloud(const TimeAwarePointCloud& cloud, const std::vector<Posed>& target_poses,
                       const Intrinsicsd& intrinsics, CloudMode mode, double splat_radius = 1.0);

/// A latent cell is 1 iff every pixel it covers is 1.
OcclusionMask downsample_mask(const OcclusionMask& mask, int factor);

/// Stand-in for the VAE.
class Codec {
 public:
  virtual ~Codec() = default;
  virtual LatentVideo encode(const PixelVideo& x) const = 0;
  virtual PixelVideo decode(const LatentVideo& z) const = 0;
  virtual int spatial_factor() const = 0;
};

/// Latent = pixels, three channels.
class IdentityCodec : public Codec {
 public:
  LatentVideo encode(const PixelVideo& x) const override;
  PixelVideo decode(const LatentVideo& z) const override;
  int spatial_factor() const override { return 1; }
};

/// Average-pool encoder and nearest-neighbor decoder with a square factor.
class PoolingCodec : public Codec {
 public:
  explicit PoolingCodec(int factor = 4);
  LatentVideo encode(const PixelVideo& x) const override;
  PixelVideo decode(const LatentVideo& z) const override;
  int spatial_factor() const override { return factor_; }

 private:
  int factor_;
};

/// What the reconstruction stage knows about the video: world point maps,
/// their validity, the source cameras and the shared intrinsics.
struct SceneInputs {
  std::vector<PointMap> pointmaps;
  std::vector<PixelMask> validity;
  std::vector<Posed> source_poses;
  Intrinsicsd intrinsics;
};

struct ReframeOutcome {
  LatentVideo z0_estimate;
  LatentVideo z0_reframed;
  OcclusionMask latent_mask;
  PixelVideo x0_reframed;
  OcclusionMask pixel_mask;
  std::vector<Posed> target_poses;
};

struct ReframeOptions {
  CloudMode mode{CloudMode::TimeAware};
  double splat_radius{1.0};
  std::optional<Condition> condition;
};

/// Clean estimate at timestep t (kClean skips the denoiser), decode and clamp
/// to [0, 1], lift with the scene point maps, render from target_poses,
/// re-encode, and downsample the mask to latent resolution.
ReframeOutcome reframe_latent(const LatentVideo& z_t, int t, Denoiser& denoiser, const Codec& codec,
                              const SceneInputs& scene, const std::vector<Posed>& target_poses,
                              const NoiseSchedule& sched, const ReframeOptions& options = {});

}  // namespace reframe

#endif  // REFRAME_REFRAME_HPP
