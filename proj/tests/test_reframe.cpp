#include <algorithm>
#include <numbers>

#include "helpers.hpp"
#include "reframe/metrics.hpp"
#include "reframe/reframe.hpp"
#include "reframe/synthscene.hpp"

using namespace reframe;
using reframe::test::check_errc;
using reframe::test::max_abs_diff;
using reframe::test::random_latent;

namespace {

PixelVideo random_pixels(int frames, int h, int w, std::uint64_t seed) {
  SplitMix64 rng(seed);
  PixelVideo x(frames, 3, h, w);
  for (Eigen::Index i = 0; i < x.array().size(); ++i) x.array()[i] = rng.uniform();
  return x;
}

std::vector<PixelMask> full_validity(int frames, int pixels) {
  return std::vector<PixelMask>(std::size_t(frames), PixelMask::Ones(pixels));
}

ColoredPoint point(const Point3& p, const Eigen::Vector3d& color, int frame, int source) {
  return ColoredPoint{p, color, frame, source};
}

SceneInputs scene_inputs(const GroundTruthBundle& b) {
  return SceneInputs{b.pointmaps, b.validity, b.source_poses.poses(), b.intrinsics};
}

PixelVideo render_truth(const SceneModel& scene, const std::vector<Posed>& poses, const Intrinsicsd& k) {
  PixelVideo out(int(poses.size()), 3, k.height, k.width);
  for (int f = 0; f < int(poses.size()); ++f) {
    const auto view = render_gt(scene, poses[std::size_t(f)], k, f);
    for (int c = 0; c < 3; ++c)
      for (int y = 0; y < k.height; ++y)
        for (int x = 0; x < k.width; ++x) out(f, c, y, x) = view.color(c, y * k.width + x);
  }
  return out;
}

const Intrinsicsd kSmall(4, 4, 2, 2, 4, 4);

}  // namespace

TEST_CASE("lift_frames examples") {
  const auto video = random_pixels(2, 4, 4, 1);
  std::vector<PointMap> maps(2, PointMap(4, 4));
  auto cloud = lift_frames(video, maps, full_validity(2, 16));
  CHECK(cloud.total_points() == 32);
  CHECK(cloud.frames[0].size() == 16);
  CHECK(cloud.frames[1].size() == 16);

  auto none = std::vector<PixelMask>(2, PixelMask::Zero(16));
  CHECK(lift_frames(video, maps, none).total_points() == 0);

  auto one = none;
  one[0][1 * 4 + 2] = 1;  // row 1, column 2
  maps[0].at(1, 2) = Point3(0, 0, 2);
  auto single = lift_frames(video, maps, one);
  REQUIRE(single.total_points() == 1);
  const auto& p = single.frames[0][0];
  CHECK(p.position.isApprox(Point3(0, 0, 2)));
  for (int c = 0; c < 3; ++c) CHECK(p.color[c] == video(0, c, 1, 2));
  CHECK(p.frame == 0);
  CHECK(p.source_index == 6);

  check_errc([&] { lift_frames(video, std::vector<PointMap>(1, PointMap(4, 4)), none); }, Errc::ShapeMismatch);
  check_errc([&] { lift_frames(video, std::vector<PointMap>(2, PointMap(3, 4)), none); }, Errc::ShapeMismatch);
}

TEST_CASE("render_cloud examples") {
  TimeAwarePointCloud empty;
  empty.frames.resize(2);
  auto r = render_cloud(empty, {Posed::identity(), Posed::identity()}, kSmall, CloudMode::TimeAware);
  CHECK(r.mask.coverage() == 0.0);
  CHECK((r.image.array() == 0.0).all());

  TimeAwarePointCloud two;
  two.frames.resize(1);
  two.frames[0].push_back(point({0, 0, 2}, {1, 0, 0}, 0, 0));
  two.frames[0].push_back(point({0, 0, 1}, {0, 1, 0}, 0, 1));
  auto z = render_cloud(two, {Posed::identity()}, kSmall, CloudMode::TimeAware);
  CHECK(z.mask(0, 2, 2) == 1);
  CHECK(z.image(0, 1, 2, 2) == 1.0);
  CHECK(z.image(0, 0, 2, 2) == 0.0);
  CHECK(z.mask.coverage() == doctest::Approx(1.0 / 16));

  check_errc([&] { render_cloud(two, {}, kSmall, CloudMode::TimeAware); }, Errc::PoseCountMismatch);
}

TEST_CASE("render_cloud tie-break and culling") {
  TimeAwarePointCloud cloud;
  cloud.frames.resize(2);
  cloud.frames[1].push_back(point({0, 0, 1}, {0, 0, 1}, 1, 0));
  cloud.frames[0].push_back(point({0, 0, 1}, {1, 0, 0}, 0, 5));
  cloud.frames[0].push_back(point({0, 0, 1}, {0, 1, 0}, 0, 3));
  cloud.frames[0].push_back(point({0, 0, -1}, {1, 1, 1}, 0, 0));
  cloud.frames[0].push_back(point({0, 0, 5e-5}, {1, 1, 1}, 0, 1));
  auto r = render_cloud(cloud, {Posed::identity(), Posed::identity()}, kSmall, CloudMode::TimeStatic);
  // Equal depths: lower frame, then lower source pixel.
  for (int f = 0; f < 2; ++f) {
    CHECK(r.image(f, 1, 2, 2) == 1.0);
    CHECK(r.image(f, 0, 2, 2) == 0.0);
    CHECK(r.mask.coverage() == doctest::Approx(2.0 / 32));
  }
  // A square of side 2 reaches the neighbors whose centers lie on its edge.
  auto wide = render_cloud(cloud, {Posed::identity(), Posed::identity()}, kSmall, CloudMode::TimeAware, 2.0);
  CHECK(wide.mask(1, 1, 1) == 1);
  CHECK(wide.mask(1, 3, 3) == 1);
  CHECK(wide.mask(1, 0, 0) == 0);
}

TEST_CASE("render_cloud reproduces the source frames at the source poses") {
  SceneSpec spec;
  spec.seed = 2;
  spec.camera_yaw_deg = 8;
  spec.camera_shift = 0.2;
  const auto b = make_bundle(spec);
  const auto cloud = lift_frames(b.frames, b.pointmaps, b.validity);
  const auto r = render_cloud(cloud, b.source_poses.poses(), b.intrinsics, CloudMode::TimeAware);
  CHECK(r.mask.coverage() > 0.99);
  double worst = 0;
  for (int f = 0; f < r.mask.frames(); ++f)
    for (int y = 0; y < r.mask.height(); ++y)
      for (int x = 0; x < r.mask.width(); ++x)
        if (r.mask(f, y, x))
          for (int c = 0; c < 3; ++c) worst = std::max(worst, std::abs(r.image(f, c, y, x) - b.frames(f, c, y, x)));
  CHECK(worst == 0.0);
}

TEST_CASE("downsample_mask examples") {
  OcclusionMask m(2, 4, 6);
  SplitMix64 rng(3);
  for (auto& v : m.values()) v = std::uint8_t(rng.next() & 1);
  CHECK(downsample_mask(m, 1) == m);
  CHECK(downsample_mask(OcclusionMask(2, 4, 6, 1), 2) == OcclusionMask(2, 2, 3, 1));
  OcclusionMask one_hole(1, 2, 2, 1);
  one_hole(0, 1, 0) = 0;
  CHECK(downsample_mask(one_hole, 2)(0, 0, 0) == 0);
  check_errc([&] { downsample_mask(m, 4); }, Errc::NonDivisibleFactor);
  check_errc([&] { downsample_mask(m, 0); }, Errc::NonDivisibleFactor);
}

TEST_CASE("codecs") {
  const auto x = random_pixels(2, 8, 12, 4);
  IdentityCodec identity;
  CHECK((identity.decode(identity.encode(x)).array() == x.array()).all());
  PoolingCodec pool(4);
  const auto z = pool.encode(x);
  CHECK(z.shape() == VideoShape{2, 3, 2, 3});
  CHECK(pool.decode(z).shape() == x.shape());
  CHECK(z(1, 2, 1, 2) == doctest::Approx((x.array().segment(x.index(1, 2, 4, 8), 4).sum() +
                                          x.array().segment(x.index(1, 2, 5, 8), 4).sum() +
                                          x.array().segment(x.index(1, 2, 6, 8), 4).sum() +
                                          x.array().segment(x.index(1, 2, 7, 8), 4).sum()) /
                                         16));
  const auto latent = random_latent(VideoShape{2, 3, 2, 3}, 5);
  CHECK(max_abs_diff(pool.encode(pool.decode(latent)).array(), latent.array()) < 1e-6);
  check_errc([&] { pool.encode(random_pixels(1, 6, 8, 1)); }, Errc::NonDivisibleFactor);
}

TEST_CASE("reframe_latent examples") {
  SceneSpec spec;
  spec.frames = 4;
  spec.seed = 6;
  spec.camera_shift = 0.2;
  const auto b = make_bundle(spec);
  const auto sched = make_schedule();
  const auto scene = scene_inputs(b);
  IdentityCodec codec;
  const LatentVideo target = codec.encode(b.frames);
  OracleDenoiser oracle(target, sched);
  const LatentVideo z_t = add_noise(target, 319, gaussian_latent(target.shape(), 1), sched);

  SUBCASE("identity reframe") {
    const auto out = reframe_latent(z_t, 319, oracle, codec, scene, scene.source_poses, sched);
    CHECK(out.latent_mask.coverage() > 0.99);
    double worst = 0;
    for (int f = 0; f < 4; ++f)
      for (int y = 0; y < b.intrinsics.height; ++y)
        for (int x = 0; x < b.intrinsics.width; ++x)
          if (out.latent_mask(f, y, x))
            for (int c = 0; c < 3; ++c)
              worst = std::max(worst, std::abs(out.z0_reframed(f, c, y, x) - out.z0_estimate(f, c, y, x)));
    CHECK(worst < 1e-5);
  }
  SUBCASE("nothing valid") {
    auto blind = scene;
    for (auto& v : blind.validity) v.setZero();
    const auto out = reframe_latent(z_t, 319, oracle, codec, blind, scene.source_poses, sched);
    CHECK(out.latent_mask.coverage() == 0.0);
    CHECK((out.z0_reframed.array() == 0.0).all());
  }
  SUBCASE("10 degree pan matches the analytic render") {
    std::vector<Posed> targets;
    for (const auto& p : scene.source_poses) {
      targets.push_back(compose(Posed::from_rotation(axis_angle<double>(Eigen::Vector3d::UnitY(), 10 * std::numbers::pi / 180)), p));
    }
    const auto out = reframe_latent(z_t, 319, oracle, codec, scene, targets, sched);
    const auto truth = render_truth(make_scene(spec), targets, b.intrinsics);
    CHECK(out.pixel_mask.coverage() > 0.6);
    CHECK(psnr(out.x0_reframed, truth, &out.pixel_mask).db >= 35.0);
  }
  SUBCASE("pooling codec downsamples the mask") {
    PoolingCodec pool(4);
    const LatentVideo pooled = pool.encode(b.frames);
    OracleDenoiser pooled_oracle(pooled, sched);
    const auto out = reframe_latent(pooled, kClean, pooled_oracle, pool, scene, scene.source_poses, sched);
    CHECK(out.latent_mask == downsample_mask(out.pixel_mask, 4));
    CHECK(out.z0_reframed.shape() == pooled.shape());
  }
}

TEST_CASE("property: larger splats never lose coverage") {
  SceneSpec spec;
  spec.kind = SceneKind::Dynamic;
  spec.frames = 3;
  spec.seed = 8;
  const auto b = make_bundle(spec);
  const auto cloud = lift_frames(b.frames, b.pointmaps, b.validity);
  std::vector<Posed> targets;
  for (const auto& p : b.source_poses.poses()) targets.push_back(compose(Posed::from_translation({0.3, 0.1, -0.2}), p));
  SplitMix64 rng(9);
  for (int trial = 0; trial < 6; ++trial) {
    const double r1 = rng.uniform(0.2, 2.5);
    const double r2 = r1 + rng.uniform(0.0, 1.5);
    const auto small = render_cloud(cloud, targets, b.intrinsics, CloudMode::TimeAware, r1);
    const auto large = render_cloud(cloud, targets, b.intrinsics, CloudMode::TimeAware, r2);
    bool monotone = true;
    for (std::size_t i = 0; i < small.mask.size(); ++i) monotone &= !(small.mask.values()[i] && !large.mask.values()[i]);
    CHECK(monotone);
  }
}

TEST_CASE("property: rendering is deterministic and independent of point order") {
  SceneSpec spec;
  spec.kind = SceneKind::Dynamic;
  spec.frames = 3;
  spec.seed = 10;
  spec.camera_yaw_deg = 5;
  const auto b = make_bundle(spec);
  auto cloud = lift_frames(b.frames, b.pointmaps, b.validity);
  std::vector<Posed> targets;
  for (const auto& p : b.source_poses.poses()) targets.push_back(compose(Posed::from_translation({-0.4, 0, 0.3}), p));
  for (CloudMode mode : {CloudMode::TimeAware, CloudMode::TimeStatic}) {
    const auto a = render_cloud(cloud, targets, b.intrinsics, mode, 1.5);
    const auto again = render_cloud(cloud, targets, b.intrinsics, mode, 1.5);
    auto shuffled = cloud;
    for (auto& frame : shuffled.frames) std::reverse(frame.begin(), frame.end());
    const auto c = render_cloud(shuffled, targets, b.intrinsics, mode, 1.5);
    CHECK((a.image.array() == again.image.array()).all());
    CHECK(a.mask == again.mask);
    CHECK((a.image.array() == c.image.array()).all());
    CHECK(a.mask == c.mask);
  }
}

TEST_CASE("property: time-aware equals time-static on a static scene seen from a fixed camera") {
  SceneSpec spec;
  spec.frames = 3;
  spec.seed = 11;
  const auto b = make_bundle(spec);
  const auto cloud = lift_frames(b.frames, b.pointmaps, b.validity);
  std::vector<Posed> targets(3, Posed(axis_angle<double>(Eigen::Vector3d::UnitY(), 0.05), Eigen::Vector3d(0.2, 0, 0)));
  const auto aware = render_cloud(cloud, targets, b.intrinsics, CloudMode::TimeAware);
  const auto fixed = render_cloud(cloud, targets, b.intrinsics, CloudMode::TimeStatic);
  double worst = 0;
  for (int f = 0; f < 3; ++f)
    for (int y = 0; y < b.intrinsics.height; ++y)
      for (int x = 0; x < b.intrinsics.width; ++x)
        if (aware.mask(f, y, x) && fixed.mask(f, y, x))
          for (int c = 0; c < 3; ++c) worst = std::max(worst, std::abs(aware.image(f, c, y, x) - fixed.image(f, c, y, x)));
  CHECK(worst < 1e-6);
}

TEST_CASE("cloud mode names") {
  CHECK(parse_cloud_mode("time-aware") == CloudMode::TimeAware);
  CHECK(parse_cloud_mode(cloud_mode_name(CloudMode::TimeStatic)) == CloudMode::TimeStatic);
  check_errc([] { parse_cloud_mode("sideways"); }, Errc::InvalidConfig);
}
