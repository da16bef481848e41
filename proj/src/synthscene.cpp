#include "reframe/synthscene.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "reframe/rng.hpp"

namespace reframe {

namespace {

constexpr double kNear = 1e-4;

}  // namespace

Eigen::Vector3d SceneModel::background_color(double x, double y) const {
  Eigen::Vector3d c;
  for (int ch = 0; ch < 3; ++ch) {
    double v = 0.5;
    for (const auto& w : background_waves[ch]) {
      v += w.amplitude * std::sin(2.0 * std::numbers::pi * (w.kx * x + w.ky * y) + w.phase);
    }
    c[ch] = v;
  }
  return c;
}

SceneModel make_scene(const SceneSpec& spec) {
  if (spec.frames < 2 || spec.width < 8 || spec.height < 8) {
    throw Error(Errc::InvalidSpec, "need frames >= 2 and resolution >= 8x8", {spec.frames, spec.width, spec.height});
  }
  if (!std::isfinite(spec.camera_yaw_deg) || !std::isfinite(spec.camera_shift)) {
    throw Error(Errc::InvalidSpec, "camera motion must be finite");
  }
  SplitMix64 rng(spec.seed);
  SceneModel scene;
  scene.spec = spec;
  scene.background_depth = rng.uniform(3.5, 4.5);
  for (auto& channel : scene.background_waves) {
    for (auto& wave : channel) {
      const double freq = rng.uniform(0.12, 0.3);
      const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
      wave = {0.18, freq * std::cos(angle), freq * std::sin(angle), rng.uniform(0.0, 2.0 * std::numbers::pi)};
    }
  }
  if (spec.kind == SceneKind::Dynamic) {
    const int count = 2;
    for (int i = 0; i < count; ++i) {
      Sphere s;
      const double depth = rng.uniform(1.8, 2.6);
      // Start on the left or right third and travel across the view.
      const double side = i % 2 == 0 ? -1.0 : 1.0;
      s.center = {side * rng.uniform(0.35, 0.55) * depth * 0.5, rng.uniform(-0.2, 0.2) * depth * 0.5, depth};
      const double travel = rng.uniform(0.6, 0.9) * depth * 0.5;
      s.velocity = {-side * travel / double(spec.frames - 1), rng.uniform(-0.1, 0.1) / double(spec.frames - 1), 0.0};
      s.radius = rng.uniform(0.25, 0.4);
      s.albedo = {rng.uniform(0.3, 1.0), rng.uniform(0.3, 1.0), rng.uniform(0.3, 1.0)};
      scene.movers.push_back(s);
    }
  }
  return scene;
}

GroundTruthView render_gt(const SceneModel& scene, const Posed& pose, const Intrinsicsd& k, int frame_index) {
  if (frame_index < 0 || frame_index >= scene.spec.frames) {
    throw Error(Errc::FrameOutOfRange, "frame index outside the scene", {frame_index});
  }
  const int h = k.height;
  const int w = k.width;
  const Eigen::Index pixels = Eigen::Index(h) * w;
  GroundTruthView view;
  view.color = Eigen::Matrix3Xd::Zero(3, pixels);
  view.depth = Eigen::ArrayXd::Zero(pixels);
  view.pointmap = PointMap(h, w);
  view.validity = PixelMask::Zero(pixels);

  const Eigen::Matrix3d world_from_cam = pose.rotation().transpose();
  const Eigen::Vector3d center = -(world_from_cam * pose.translation());
  const Eigen::Vector3d light = Eigen::Vector3d(-0.4, -0.6, -1.0).normalized();

  std::vector<Eigen::Vector3d> mover_centers;
  for (std::size_t i = 0; i < scene.movers.size(); ++i) mover_centers.push_back(scene.mover_position(i, frame_index));

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      // Camera-space direction with unit z, so the ray parameter is the depth.
      const Eigen::Vector3d dir_cam((x - k.cx) / k.fx, (y - k.cy) / k.fy, 1.0);
      const Eigen::Vector3d dir = world_from_cam * dir_cam;
      double best = std::numeric_limits<double>::infinity();
      Eigen::Vector3d color = Eigen::Vector3d::Zero();

      if (dir.z() > 0) {
        const double s = (scene.background_depth - center.z()) / dir.z();
        if (s > kNear && s < best) {
          best = s;
          const Eigen::Vector3d hit = center + s * dir;
          color = scene.background_color(hit.x(), hit.y());
        }
      }
      for (std::size_t i = 0; i < scene.movers.size(); ++i) {
        const Eigen::Vector3d oc = center - mover_centers[i];
        const double a = dir.squaredNorm();
        const double b = 2.0 * dir.dot(oc);
        const double c = oc.squaredNorm() - scene.movers[i].radius * scene.movers[i].radius;
        const double disc = b * b - 4 * a * c;
        if (disc < 0) continue;
        const double s = (-b - std::sqrt(disc)) / (2 * a);
        if (s > kNear && s < best) {
          best = s;
          const Eigen::Vector3d hit = center + s * dir;
          const Eigen::Vector3d normal = (hit - mover_centers[i]).normalized();
          const double shade = 0.55 + 0.45 * std::max(0.0, normal.dot(light));
          color = scene.movers[i].albedo * shade;
        }
      }
      if (std::isfinite(best)) {
        const Eigen::Index i = Eigen::Index(y) * w + x;
        view.depth[i] = best;
        view.pointmap.points.col(i) = center + best * dir;
        view.color.col(i) = color.cwiseMax(0.0).cwiseMin(1.0);
        view.validity[i] = 1;
      }
    }
  }
  return view;
}

Trajectory source_trajectory(const SceneSpec& spec) {
  std::vector<Posed> poses;
  const double yaw = spec.camera_yaw_deg * std::numbers::pi / 180.0;
  for (int j = 0; j < spec.frames; ++j) {
    const double s = double(j) / double(spec.frames - 1);
    const Eigen::Matrix3d world_from_cam = axis_angle<double>(Eigen::Vector3d::UnitY(), yaw * s);
    const Eigen::Vector3d center(spec.camera_shift * s, 0.0, 0.0);
    const Eigen::Matrix3d r = world_from_cam.transpose();
    poses.push_back(j == 0 ? Posed::identity() : Posed(r, -(r * center)));
  }
  return Trajectory::from_poses(poses);
}

Intrinsicsd scene_intrinsics(const SceneSpec& spec) { return Intrinsicsd::centered(spec.width, spec.height); }

GroundTruthBundle render_bundle(const SceneModel& scene, const Trajectory& poses, const Intrinsicsd& intrinsics) {
  const int frames = scene.spec.frames;
  if (static_cast<int>(poses.size()) != frames) {
    throw Error(Errc::PoseCountMismatch, "one pose per frame required", {long(poses.size()), frames});
  }
  std::vector<GroundTruthView> views(static_cast<std::size_t>(frames));
  parallel_for(frames, [&](int j) { views[j] = render_gt(scene, poses[j].pose, intrinsics, j); });

  GroundTruthBundle bundle{PixelVideo(frames, 3, intrinsics.height, intrinsics.width), {}, {}, {}, poses, intrinsics};
  const Eigen::Index pixels = Eigen::Index(intrinsics.height) * intrinsics.width;
  for (int j = 0; j < frames; ++j) {
    for (int c = 0; c < 3; ++c) {
      bundle.frames.array().segment(bundle.frames.index(j, c, 0, 0), pixels) = views[j].color.row(c).transpose().array();
    }
    bundle.depth.push_back(std::move(views[j].depth));
    bundle.pointmaps.push_back(std::move(views[j].pointmap));
    bundle.validity.push_back(std::move(views[j].validity));
  }
  return bundle;
}

GroundTruthBundle make_bundle(const SceneSpec& spec) {
  return render_bundle(make_scene(spec), source_trajectory(spec), scene_intrinsics(spec));
}

Eigen::ArrayXd depth_confidence(const Eigen::ArrayXd& depth, int height, int width) {
  Eigen::ArrayXd conf(depth.size());
  auto at = [&](int y, int x) { return depth[Eigen::Index(y) * width + x]; };
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const int x0 = std::max(x - 1, 0), x1 = std::min(x + 1, width - 1);
      const int y0 = std::max(y - 1, 0), y1 = std::min(y + 1, height - 1);
      const double dx = (at(y, x1) - at(y, x0)) / double(std::max(x1 - x0, 1));
      const double dy = (at(y1, x) - at(y0, x)) / double(std::max(y1 - y0, 1));
      conf[Eigen::Index(y) * width + x] = 1.0 / (1.0 + std::sqrt(dx * dx + dy * dy));
    }
  }
  return conf;
}

std::vector<EdgeObservation> emit_edge_observations(const GroundTruthBundle& bundle, const std::vector<Edge>& edges,
                                                    double noise_sigma, std::uint64_t seed) {
  const int frames = static_cast<int>(bundle.pointmaps.size());
  const int h = bundle.intrinsics.height;
  const int w = bundle.intrinsics.width;
  std::vector<Eigen::ArrayXd> confidence;
  for (const auto& d : bundle.depth) confidence.push_back(depth_confidence(d, h, w));

  std::vector<EdgeObservation> out;
  out.reserve(edges.size());
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const auto [n, m] = edges[e];
    if (n < 0 || m < 0 || n >= frames || m >= frames || n == m) {
      throw Error(Errc::InconsistentShapes, "edge outside the sequence", {n, m});
    }
    const Posed& cam_from_world = bundle.source_poses[static_cast<std::size_t>(n)].pose;
    SplitMix64 rng(stream_seed(seed, e));
    auto express = [&](const PointMap& world) {
      PointMap p(h, w);
      p.points = (cam_from_world.rotation() * world.points).colwise() + cam_from_world.translation();
      if (noise_sigma > 0) {
        for (Eigen::Index i = 0; i < p.points.size(); ++i) p.points.data()[i] += noise_sigma * rng.gaussian();
      }
      return p;
    };
    EdgeObservation o;
    o.ref_frame = n;
    o.src_frame = m;
    o.pointmap_ref = express(bundle.pointmaps[n]);
    o.pointmap_src = express(bundle.pointmaps[m]);
    o.confidence_ref = confidence[n];
    o.confidence_src = confidence[m];
    out.push_back(std::move(o));
  }
  return out;
}

SceneKind parse_scene_kind(const std::string& name) {
  if (name == "static") return SceneKind::Static;
  if (name == "dynamic") return SceneKind::Dynamic;
  throw Error(Errc::InvalidSpec, "unknown scene kind '" + name + "'");
}

std::string scene_kind_name(SceneKind kind) { return kind == SceneKind::Static ? "static" : "dynamic"; }

}  // namespace reframe
