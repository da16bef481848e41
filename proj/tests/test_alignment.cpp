#include <Eigen/Geometry>

#include <numbers>
#include <set>

#include "helpers.hpp"
#include "reframe/alignment.hpp"
#include "reframe/synthscene.hpp"

using namespace reframe;
using reframe::test::check_errc;
using reframe::test::random_pose;
using reframe::test::random_vector;

namespace {

PointMap single_point(const Eigen::Vector3d& p) {
  PointMap m(1, 1);
  m.at(0, 0) = p;
  return m;
}

EdgeObservation one_pixel_edge(const Eigen::Vector3d& q, double confidence) {
  EdgeObservation e;
  e.ref_frame = 0;
  e.src_frame = 1;
  e.pointmap_ref = single_point(q);
  e.pointmap_src = single_point(Eigen::Vector3d::Zero());
  e.confidence_ref = Eigen::ArrayXd::Constant(1, confidence);
  e.confidence_src = Eigen::ArrayXd::Zero(1);
  return e;
}

AlignmentState one_pixel_state() {
  AlignmentState s;
  s.global_pointmaps = {single_point(Eigen::Vector3d::Zero()), single_point(Eigen::Vector3d::Zero())};
  s.frame_poses = {Posed::identity(), Posed::identity()};
  s.log_scales = Eigen::VectorXd::Zero(1);
  return s;
}

/// Random observations on a 2x2 grid for every edge of `frames` frames.
std::vector<EdgeObservation> random_observations(SplitMix64& rng, int frames) {
  std::vector<EdgeObservation> obs;
  for (const Edge& e : build_graph(frames, frames)) {
    EdgeObservation o;
    o.ref_frame = e.ref;
    o.src_frame = e.src;
    o.pointmap_ref = PointMap(2, 2);
    o.pointmap_src = PointMap(2, 2);
    for (int i = 0; i < 4; ++i) {
      o.pointmap_ref.points.col(i) = random_vector(rng) + Eigen::Vector3d(0, 0, 3);
      o.pointmap_src.points.col(i) = random_vector(rng) + Eigen::Vector3d(0, 0, 3);
    }
    o.confidence_ref = Eigen::ArrayXd::NullaryExpr(4, [&] { return rng.uniform(0.2, 1.0); });
    o.confidence_src = Eigen::ArrayXd::NullaryExpr(4, [&] { return rng.uniform(0.2, 1.0); });
    obs.push_back(o);
  }
  return obs;
}

AlignmentState random_state(SplitMix64& rng, int frames, int edges) {
  AlignmentState s;
  for (int n = 0; n < frames; ++n) {
    PointMap m(2, 2);
    for (int i = 0; i < 4; ++i) m.points.col(i) = random_vector(rng, 2);
    s.global_pointmaps.push_back(m);
    s.frame_poses.push_back(random_pose(rng));
  }
  s.log_scales = Eigen::VectorXd::NullaryExpr(edges, [&] { return rng.uniform(-0.5, 0.5); });
  return s;
}

AlignmentState transform_world(const AlignmentState& s, const Posed& g) {
  AlignmentState out = s;
  for (auto& m : out.global_pointmaps) {
    m.points = (g.rotation() * m.points).colwise() + g.translation();
  }
  for (auto& p : out.frame_poses) p = compose(g, p);
  return out;
}

struct Recovery {
  double max_rotation_deg{0};
  double max_scale_error{0};
  double max_oracle_scale_gap{0};
  double max_oracle_rotation_gap_deg{0};
};

/// Compares the optimizer's poses with the generator's, and its edge scales
/// and reference poses with a closed-form similarity fit of each edge's
/// observations onto the recovered world points.
Recovery assess(const GroundTruthBundle& truth, const std::vector<EdgeObservation>& obs, const AlignmentResult& r) {
  Recovery out;
  const auto& state = r.state;
  for (std::size_t n = 0; n < state.frame_poses.size(); ++n) {
    const Posed gt = compose(truth.source_poses[0].pose, inverse(truth.source_poses[n].pose));
    const double angle = rotation_angle(state.frame_poses[n].rotation() * gt.rotation().transpose());
    out.max_rotation_deg = std::max(out.max_rotation_deg, angle * 180 / std::numbers::pi);
  }
  for (std::size_t e = 0; e < obs.size(); ++e) {
    const double s = std::exp(state.log_scales[Eigen::Index(e)]);
    out.max_scale_error = std::max(out.max_scale_error, std::abs(s - 1));
    const auto& o = obs[e];
    const Eigen::Index n = o.pointmap_ref.pixels();
    Eigen::Matrix3Xd src(3, 2 * n), dst(3, 2 * n);
    src << o.pointmap_ref.points, o.pointmap_src.points;
    dst << state.global_pointmaps[std::size_t(o.ref_frame)].points, state.global_pointmaps[std::size_t(o.src_frame)].points;
    const Eigen::Matrix4d fit = Eigen::umeyama(src, dst, true);
    const double oracle_scale = fit.topLeftCorner<3, 3>().col(0).norm();
    const Eigen::Matrix3d oracle_rotation = fit.topLeftCorner<3, 3>() / oracle_scale;
    out.max_oracle_scale_gap = std::max(out.max_oracle_scale_gap, std::abs(s / oracle_scale - 1));
    const double gap = rotation_angle(oracle_rotation * state.frame_poses[std::size_t(o.ref_frame)].rotation().transpose());
    out.max_oracle_rotation_gap_deg = std::max(out.max_oracle_rotation_gap_deg, gap * 180 / std::numbers::pi);
  }
  return out;
}

}  // namespace

TEST_CASE("build_graph examples") {
  CHECK(build_graph(3, 3).size() == 6);
  CHECK(build_graph(2, 3) == std::vector<Edge>{{0, 1}, {1, 0}});
  const auto edges = build_graph(16, 3);
  CHECK(edges.size() == 58);
  // Independent enumeration: every window start, every ordered pair, deduplicated.
  std::set<std::pair<int, int>> oracle;
  for (int start = 0; start + 1 < 16; ++start) {
    const int end = std::min(start + 3, 16);
    for (int a = start; a < end; ++a)
      for (int b = start; b < end; ++b)
        if (a != b) oracle.insert({a, b});
  }
  REQUIRE(oracle.size() == edges.size());
  auto it = oracle.begin();
  for (const Edge& e : edges) {
    CHECK(e.ref == it->first);
    CHECK(e.src == it->second);
    ++it;
  }
  check_errc([] { build_graph(1, 3); }, Errc::TooFewFrames);
  check_errc([] { build_graph(4, 1); }, Errc::WindowTooSmall);
}

TEST_CASE("alignment_loss examples") {
  auto state = one_pixel_state();
  CHECK(alignment_loss(state, {one_pixel_edge({3, 4, 0}, 1.0)}) == doctest::Approx(5.0));
  CHECK(alignment_loss(state, {one_pixel_edge({3, 4, 0}, 0.5)}) == doctest::Approx(2.5));
  CHECK(alignment_loss(state, {one_pixel_edge({0, 0, 0}, 1.0)}) == 0.0);

  auto bad = one_pixel_edge({1, 1, 1}, 1.0);
  bad.src_frame = 5;
  check_errc([&] { alignment_loss(state, {bad}); }, Errc::InconsistentShapes);
  auto wide = one_pixel_edge({1, 1, 1}, 1.0);
  wide.pointmap_ref = PointMap(1, 2);
  check_errc([&] { alignment_loss(state, {wide}); }, Errc::InconsistentShapes);
}

TEST_CASE("optimize_alignment keeps an exact fit at zero") {
  SceneSpec spec;
  spec.frames = 3;
  spec.width = 16;
  spec.height = 12;
  const auto truth = make_bundle(spec);
  const auto obs = emit_edge_observations(truth, build_graph(3, 3), 0.0, 1);
  const auto r = optimize_alignment(obs, std::vector<Intrinsicsd>(3, truth.intrinsics), {.steps = 20});
  CHECK(r.initial_loss == 0.0);
  CHECK(r.final_loss == 0.0);
  CHECK(r.state.frame_poses[0].isApprox(Posed::identity(), 0.0));
}

TEST_CASE("optimize_alignment never returns a worse state than its start") {
  SceneSpec spec;
  spec.frames = 4;
  spec.width = 16;
  spec.height = 12;
  const auto truth = make_bundle(spec);
  auto obs = emit_edge_observations(truth, build_graph(4, 3), 0.0, 1);
  // Rounding-level residuals, as after a float32 round trip.
  for (auto& o : obs) o.pointmap_src.points = o.pointmap_src.points.cast<float>().cast<double>();
  const auto r = optimize_alignment(obs, std::vector<Intrinsicsd>(4, truth.intrinsics), {.steps = 50});
  CHECK(r.initial_loss > 0.0);
  CHECK(r.final_loss <= r.initial_loss);
  CHECK(alignment_loss(r.state, obs) == doctest::Approx(r.final_loss).epsilon(1e-9));
  for (const auto& p : r.state.frame_poses) CHECK(p.isApprox(Posed::identity(), 1e-12));
}

TEST_CASE("optimize_alignment reports unreachable frames") {
  SceneSpec spec;
  spec.frames = 3;
  spec.width = 16;
  spec.height = 12;
  const auto truth = make_bundle(spec);
  const auto obs = emit_edge_observations(truth, {{0, 2}, {2, 0}}, 0.0, 1);
  bool thrown = false;
  try {
    optimize_alignment(obs, std::vector<Intrinsicsd>(3, truth.intrinsics));
  } catch (const Error& e) {
    thrown = true;
    CHECK(e.code() == Errc::DisconnectedGraph);
    CHECK(e.where() == std::vector<std::int64_t>{1});
  }
  CHECK(thrown);
  CHECK(unreachable_frames({{0, 1}, {2, 3}}, 4) == std::vector<int>{2, 3});
}

TEST_CASE("optimize_alignment recovers a 3-frame synthetic sequence") {
  SceneSpec spec;
  spec.frames = 3;
  spec.width = 32;
  spec.height = 24;
  spec.seed = 7;
  spec.camera_yaw_deg = 10;
  spec.camera_shift = 0.3;
  const auto truth = make_bundle(spec);
  const std::vector<Intrinsicsd> intrinsics(3, truth.intrinsics);

  SUBCASE("zero noise") {
    const auto obs = emit_edge_observations(truth, build_graph(3, 3), 0.0, 11);
    const auto r = optimize_alignment(obs, intrinsics);
    const auto rec = assess(truth, obs, r);
    CHECK(rec.max_rotation_deg < 1.0);
    CHECK(rec.max_scale_error < 0.01);
    CHECK(rec.max_oracle_scale_gap < 0.01);
    CHECK(rec.max_oracle_rotation_gap_deg < 1.0);
    CHECK(r.final_loss < r.initial_loss / 10);
    CHECK(r.state.frame_poses[0].isApprox(Posed::identity(), 0.0));
    CHECK(std::abs(r.state.log_scales.sum()) < 1e-12);
  }
  SUBCASE("noise 0.01") {
    const auto obs = emit_edge_observations(truth, build_graph(3, 3), 0.01, 11);
    const auto r = optimize_alignment(obs, intrinsics);
    CHECK(assess(truth, obs, r).max_rotation_deg < 2.0);
  }
}

TEST_CASE("optimize_alignment is deterministic") {
  SceneSpec spec;
  spec.frames = 3;
  spec.width = 16;
  spec.height = 12;
  spec.camera_yaw_deg = 6;
  const auto truth = make_bundle(spec);
  const auto obs = emit_edge_observations(truth, build_graph(3, 3), 0.01, 2);
  const std::vector<Intrinsicsd> intrinsics(3, truth.intrinsics);
  const auto a = optimize_alignment(obs, intrinsics, {.steps = 40});
  const auto b = optimize_alignment(obs, intrinsics, {.steps = 40});
  CHECK(a.final_loss == b.final_loss);
  CHECK((a.state.log_scales.array() == b.state.log_scales.array()).all());
  for (std::size_t n = 0; n < 3; ++n) {
    CHECK(a.state.frame_poses[n].isApprox(b.state.frame_poses[n], 0.0));
    CHECK((a.state.global_pointmaps[n].points.array() == b.state.global_pointmaps[n].points.array()).all());
  }
}

TEST_CASE("property: analytic gradient matches central differences") {
  SplitMix64 rng(12);
  const Intrinsicsd k(2, 2, 0.5, 0.5, 2, 2);
  for (int trial = 0; trial < 20; ++trial) {
    const auto obs = random_observations(rng, 2);
    AlignmentProblem problem(obs, {k, k});
    AlignmentState state = random_state(rng, 2, int(obs.size()));
    state.frame_poses[0] = Posed::identity();
    // Keep the depths positive and away from zero residuals.
    for (auto& m : state.global_pointmaps) m.points.row(2).array() = m.points.row(2).array().abs() + 1.0;
    Eigen::VectorXd x = problem.pack(state);
    Eigen::VectorXd grad;
    problem.evaluate(x, &grad);
    Eigen::VectorXd numeric(x.size());
    const double h = 1e-5;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      Eigen::VectorXd xp = x, xm = x;
      xp[i] += h;
      xm[i] -= h;
      numeric[i] = (problem.evaluate(xp, nullptr) - problem.evaluate(xm, nullptr)) / (2 * h);
    }
    const double rel = (numeric - grad).norm() / std::max(grad.norm(), 1e-12);
    CHECK(rel < 1e-4);
  }
}

TEST_CASE("property: pack and unpack are consistent with alignment_loss") {
  SplitMix64 rng(13);
  const Intrinsicsd k(2, 2, 0.5, 0.5, 2, 2);
  const auto obs = random_observations(rng, 3);
  AlignmentProblem problem(obs, {k, k, k});
  AlignmentState state = random_state(rng, 3, int(obs.size()));
  state.frame_poses[0] = Posed::identity();
  const Eigen::VectorXd x = problem.pack(state);
  const AlignmentState back = problem.unpack(x);
  CHECK(problem.evaluate(x, nullptr) == doctest::Approx(alignment_loss(back, obs)).epsilon(1e-12));
  CHECK(problem.pack(back).isApprox(x, 1e-12));
}

TEST_CASE("property: loss is non-negative and gauge invariant") {
  SplitMix64 rng(14);
  for (int trial = 0; trial < 50; ++trial) {
    const auto obs = random_observations(rng, 3);
    AlignmentState state = random_state(rng, 3, int(obs.size()));
    const double base = alignment_loss(state, obs);
    CHECK(base >= 0);

    const Posed spin = Posed::from_rotation(random_pose(rng).rotation());
    CHECK(std::abs(alignment_loss(transform_world(state, spin), obs) - base) < 1e-6 * std::max(1.0, base));

    // A translated gauge only cancels at unit scales.
    AlignmentState unit = state;
    unit.log_scales.setZero();
    const double unit_loss = alignment_loss(unit, obs);
    const Posed rigid = random_pose(rng);
    CHECK(std::abs(alignment_loss(transform_world(unit, rigid), obs) - unit_loss) < 1e-6 * std::max(1.0, unit_loss));
  }
}
