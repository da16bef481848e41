#include "reframe/reframe.hpp"

#include <cmath>
#include <limits>
#include <tuple>

namespace reframe {

std::size_t TimeAwarePointCloud::total_points() const {
  std::size_t n = 0;
  for (const auto& f : frames) n += f.size();
  return n;
}

TimeAwarePointCloud lift_frames(const PixelVideo& video, const std::vector<PointMap>& pointmaps,
                                const std::vector<PixelMask>& validity) {
  const int frames = video.frames();
  const int h = video.height();
  const int w = video.width();
  const Eigen::Index pixels = Eigen::Index(h) * w;
  if (video.channels() != 3 || static_cast<int>(pointmaps.size()) != frames ||
      static_cast<int>(validity.size()) != frames) {
    throw Error(Errc::ShapeMismatch, "video, point maps and validity must agree on frames");
  }
  TimeAwarePointCloud cloud;
  cloud.frames.resize(static_cast<std::size_t>(frames));
  for (int f = 0; f < frames; ++f) {
    if (pointmaps[f].height != h || pointmaps[f].width != w || validity[f].size() != pixels) {
      throw Error(Errc::ShapeMismatch, "point map or validity size differs from the video", {f});
    }
    auto& points = cloud.frames[f];
    for (Eigen::Index i = 0; i < pixels; ++i) {
      if (!validity[f][i]) continue;
      const int y = static_cast<int>(i / w);
      const int x = static_cast<int>(i % w);
      points.push_back({pointmaps[f].points.col(i), {video(f, 0, y, x), video(f, 1, y, x), video(f, 2, y, x)}, f,
                        static_cast<int>(i)});
    }
  }
  return cloud;
}

CloudMode parse_cloud_mode(const std::string& name) {
  if (name == "time-aware") return CloudMode::TimeAware;
  if (name == "time-static") return CloudMode::TimeStatic;
  throw Error(Errc::InvalidConfig, "unknown cloud mode '" + name + "'");
}

std::string cloud_mode_name(CloudMode mode) { return mode == CloudMode::TimeAware ? "time-aware" : "time-static"; }

namespace {

constexpr double kNearPlane = 1e-4;

struct DepthKey {
  double depth;
  int frame;
  int source;
  bool operator<(const DepthKey& o) const { return std::tie(depth, frame, source) < std::tie(o.depth, o.frame, o.source); }
};

}  // namespace

Rendering render_cloud(const TimeAwarePointCloud& cloud, const std::vector<Posed>& target_poses,
                       const Intrinsicsd& k, CloudMode mode, double splat_radius) {
  const int frames = cloud.frame_count();
  if (static_cast<int>(target_poses.size()) != frames) {
    throw Error(Errc::PoseCountMismatch, "one target pose per frame required", {long(target_poses.size()), frames});
  }
  if (!(splat_radius > 0)) throw Error(Errc::InvalidConfig, "splat radius must be positive");
  k.validate();
  const int h = k.height;
  const int w = k.width;
  Rendering out{PixelVideo(frames, 3, h, w), OcclusionMask(frames, h, w)};
  const double half = splat_radius / 2.0;

  parallel_for(frames, [&](int j) {
    const Posed& pose = target_poses[j];
    std::vector<DepthKey> zbuf(std::size_t(h) * w, DepthKey{std::numeric_limits<double>::infinity(), 0, 0});
    std::vector<const ColoredPoint*> winner(std::size_t(h) * w, nullptr);

    auto splat = [&](const ColoredPoint& p) {
      const Eigen::Vector3d pc = pose * p.position;
      if (!(pc.z() > kNearPlane)) return;
      const double u = k.fx * pc.x() / pc.z() + k.cx;
      const double v = k.fy * pc.y() / pc.z() + k.cy;
      const double x_lo = std::max(std::ceil(u - half), 0.0), x_hi = std::min(std::floor(u + half), double(w - 1));
      const double y_lo = std::max(std::ceil(v - half), 0.0), y_hi = std::min(std::floor(v + half), double(h - 1));
      if (!(x_lo <= x_hi) || !(y_lo <= y_hi)) return;
      const DepthKey key{pc.z(), p.frame, p.source_index};
      for (int y = int(y_lo); y <= int(y_hi); ++y) {
        for (int x = int(x_lo); x <= int(x_hi); ++x) {
          const std::size_t i = std::size_t(y) * w + x;
          if (key < zbuf[i]) {
            zbuf[i] = key;
            winner[i] = &p;
          }
        }
      }
    };

    if (mode == CloudMode::TimeAware) {
      for (const auto& p : cloud.frames[j]) splat(p);
    } else {
      for (const auto& frame : cloud.frames) {
        for (const auto& p : frame) splat(p);
      }
    }

    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const ColoredPoint* p = winner[std::size_t(y) * w + x];
        if (!p) continue;
        out.mask(j, y, x) = 1;
        for (int c = 0; c < 3; ++c) out.image(j, c, y, x) = p->color[c];
      }
    }
  });
  return out;
}

OcclusionMask downsample_mask(const OcclusionMask& mask, int factor) {
  if (factor < 1 || mask.height() % factor != 0 || mask.width() % factor != 0) {
    throw Error(Errc::NonDivisibleFactor, "factor must divide the mask size", {factor, mask.height(), mask.width()});
  }
  if (factor == 1) return mask;
  const int h = mask.height() / factor;
  const int w = mask.width() / factor;
  OcclusionMask out(mask.frames(), h, w, 1);
  for (int f = 0; f < mask.frames(); ++f) {
    for (int y = 0; y < mask.height(); ++y) {
      for (int x = 0; x < mask.width(); ++x) {
        if (!mask(f, y, x)) out(f, y / factor, x / factor) = 0;
      }
    }
  }
  return out;
}

LatentVideo IdentityCodec::encode(const PixelVideo& x) const { return LatentVideo(x.shape(), x.array()); }

PixelVideo IdentityCodec::decode(const LatentVideo& z) const { return PixelVideo(z.shape(), z.array()); }

PoolingCodec::PoolingCodec(int factor) : factor_(factor) {
  if (factor < 1) throw Error(Errc::NonDivisibleFactor, "pooling factor must be positive", {factor});
}

LatentVideo PoolingCodec::encode(const PixelVideo& x) const {
  if (x.height() % factor_ != 0 || x.width() % factor_ != 0) {
    throw Error(Errc::NonDivisibleFactor, "pooling factor must divide the frame size", {factor_});
  }
  LatentVideo z(x.frames(), x.channels(), x.height() / factor_, x.width() / factor_);
  const double area = double(factor_) * factor_;
  for (int f = 0; f < x.frames(); ++f) {
    for (int c = 0; c < x.channels(); ++c) {
      for (int y = 0; y < x.height(); ++y) {
        for (int xx = 0; xx < x.width(); ++xx) z(f, c, y / factor_, xx / factor_) += x(f, c, y, xx) / area;
      }
    }
  }
  return z;
}

PixelVideo PoolingCodec::decode(const LatentVideo& z) const {
  PixelVideo x(z.frames(), z.channels(), z.height() * factor_, z.width() * factor_);
  for (int f = 0; f < x.frames(); ++f) {
    for (int c = 0; c < x.channels(); ++c) {
      for (int y = 0; y < x.height(); ++y) {
        for (int xx = 0; xx < x.width(); ++xx) x(f, c, y, xx) = z(f, c, y / factor_, xx / factor_);
      }
    }
  }
  return x;
}

ReframeOutcome reframe_latent(const LatentVideo& z_t, int t, Denoiser& denoiser, const Codec& codec,
                              const SceneInputs& scene, const std::vector<Posed>& target_poses,
                              const NoiseSchedule& sched, const ReframeOptions& options) {
  ReframeOutcome out;
  if (t == kClean) {
    out.z0_estimate = z_t;
  } else {
    const LatentVideo eps = denoiser.predict(z_t, t, options.condition);
    out.z0_estimate = estimate_x0(z_t, eps, t, sched);
  }
  PixelVideo x0 = codec.decode(out.z0_estimate);
  x0.array() = x0.array().cwiseMax(0.0).cwiseMin(1.0);
  if (x0.height() != scene.intrinsics.height || x0.width() != scene.intrinsics.width) {
    throw Error(Errc::ShapeMismatch, "decoded frames do not match the intrinsics image size");
  }

  const TimeAwarePointCloud cloud = lift_frames(x0, scene.pointmaps, scene.validity);
  Rendering rendering = render_cloud(cloud, target_poses, scene.intrinsics, options.mode, options.splat_radius);
  out.z0_reframed = codec.encode(rendering.image);
  out.latent_mask = downsample_mask(rendering.mask, codec.spatial_factor());
  out.x0_reframed = std::move(rendering.image);
  out.pixel_mask = std::move(rendering.mask);
  out.target_poses = target_poses;
  return out;
}

}  // namespace reframe
