#include "reframe/alignment.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <set>

namespace reframe {

std::vector<Edge> build_graph(int frame_count, int window) {
  if (frame_count < 2) throw Error(Errc::TooFewFrames, "need at least two frames", {frame_count});
  if (window < 2) throw Error(Errc::WindowTooSmall, "window must hold at least two frames", {window});
  std::set<Edge> edges;
  const int last_start = std::max(0, frame_count - window);
  for (int start = 0; start <= last_start; ++start) {
    const int end = std::min(start + window, frame_count);
    for (int n = start; n < end; ++n) {
      for (int m = start; m < end; ++m) {
        if (n != m) edges.insert({n, m});
      }
    }
  }
  return {edges.begin(), edges.end()};
}

std::vector<int> unreachable_frames(const std::vector<Edge>& edges, int frame_count) {
  std::vector<std::vector<int>> adjacency(static_cast<std::size_t>(frame_count));
  for (const auto& e : edges) {
    if (e.ref < 0 || e.src < 0 || e.ref >= frame_count || e.src >= frame_count) continue;
    adjacency[e.ref].push_back(e.src);
    adjacency[e.src].push_back(e.ref);
  }
  std::vector<bool> seen(static_cast<std::size_t>(frame_count), false);
  std::queue<int> queue;
  if (frame_count > 0) {
    seen[0] = true;
    queue.push(0);
  }
  while (!queue.empty()) {
    const int n = queue.front();
    queue.pop();
    for (int m : adjacency[n]) {
      if (!seen[m]) {
        seen[m] = true;
        queue.push(m);
      }
    }
  }
  std::vector<int> missing;
  for (int n = 0; n < frame_count; ++n) {
    if (!seen[n]) missing.push_back(n);
  }
  return missing;
}

namespace {

void check_observations(const std::vector<EdgeObservation>& observations, int frames, int height, int width) {
  for (std::size_t e = 0; e < observations.size(); ++e) {
    const auto& o = observations[e];
    const auto pixels = Eigen::Index(height) * width;
    const bool ok = o.ref_frame >= 0 && o.ref_frame < frames && o.src_frame >= 0 && o.src_frame < frames &&
                    o.ref_frame != o.src_frame && o.pointmap_ref.height == height && o.pointmap_ref.width == width &&
                    o.pointmap_src.height == height && o.pointmap_src.width == width &&
                    o.pointmap_ref.pixels() == pixels && o.pointmap_src.pixels() == pixels &&
                    o.confidence_ref.size() == pixels && o.confidence_src.size() == pixels;
    if (!ok) throw Error(Errc::InconsistentShapes, "edge " + std::to_string(e) + " does not match the state", {long(e)});
  }
}

Eigen::Matrix3d quaternion_matrix(const Eigen::Vector4d& q) {
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  Eigen::Matrix3d r;
  r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
       2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
       2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return r;
}

/// Chain rule from dL/dR to dL/dq for the polynomial above.
Eigen::Vector4d quaternion_gradient(const Eigen::Vector4d& q, const Eigen::Matrix3d& g) {
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  Eigen::Matrix3d dw, dx, dy, dz;
  dw << 0, -2 * z, 2 * y, 2 * z, 0, -2 * x, -2 * y, 2 * x, 0;
  dx << 0, 2 * y, 2 * z, 2 * y, -4 * x, -2 * w, 2 * z, 2 * w, -4 * x;
  dy << -4 * y, 2 * x, 2 * w, 2 * x, 0, 2 * z, -2 * w, 2 * z, -4 * y;
  dz << -4 * z, -2 * w, 2 * x, 2 * w, -4 * z, 2 * y, 2 * x, 2 * y, 0;
  return {g.cwiseProduct(dw).sum(), g.cwiseProduct(dx).sum(), g.cwiseProduct(dy).sum(), g.cwiseProduct(dz).sum()};
}

Eigen::Vector4d matrix_quaternion(const Eigen::Matrix3d& r) {
  Eigen::Quaterniond q(r);
  q.normalize();
  return {q.w(), q.x(), q.y(), q.z()};
}

}  // namespace

double alignment_loss(const AlignmentState& state, const std::vector<EdgeObservation>& observations) {
  const int frames = static_cast<int>(state.global_pointmaps.size());
  if (frames == 0 || state.frame_poses.size() != state.global_pointmaps.size() ||
      state.log_scales.size() != static_cast<Eigen::Index>(observations.size())) {
    throw Error(Errc::InconsistentShapes, "state sizes do not match the observations");
  }
  const int height = state.global_pointmaps[0].height;
  const int width = state.global_pointmaps[0].width;
  for (const auto& p : state.global_pointmaps) {
    if (p.height != height || p.width != width) throw Error(Errc::InconsistentShapes, "point map sizes differ");
  }
  check_observations(observations, frames, height, width);

  double loss = 0.0;
  for (std::size_t e = 0; e < observations.size(); ++e) {
    const auto& o = observations[e];
    const Posed& tau = state.frame_poses[o.ref_frame];
    const double s = std::exp(state.log_scales[static_cast<Eigen::Index>(e)]);
    auto term = [&](const PointMap& world, const PointMap& q, const Eigen::ArrayXd& c) {
      const Eigen::Matrix3Xd mapped = s * ((tau.rotation() * q.points).colwise() + tau.translation());
      return (c * (world.points - mapped).colwise().norm().transpose().array()).sum();
    };
    loss += term(state.global_pointmaps[o.ref_frame], o.pointmap_ref, o.confidence_ref);
    loss += term(state.global_pointmaps[o.src_frame], o.pointmap_src, o.confidence_src);
  }
  return loss;
}

AlignmentProblem::AlignmentProblem(const std::vector<EdgeObservation>& observations,
                                   const std::vector<Intrinsicsd>& intrinsics)
    : observations_(observations), frames_(static_cast<int>(intrinsics.size())) {
  if (observations.empty()) throw Error(Errc::InconsistentShapes, "no observations");
  height_ = observations.front().pointmap_ref.height;
  width_ = observations.front().pointmap_ref.width;
  check_observations(observations, frames_, height_, width_);
  for (const auto& k : intrinsics) {
    Eigen::Matrix3Xd rays(3, Eigen::Index(height_) * width_);
    for (int y = 0; y < height_; ++y) {
      for (int x = 0; x < width_; ++x) {
        rays.col(Eigen::Index(y) * width_ + x) << (x - k.cx) / k.fx, (y - k.cy) / k.fy, 1.0;
      }
    }
    rays_.push_back(std::move(rays));
  }
}

Eigen::Index AlignmentProblem::pose_offset(int frame) const {
  return Eigen::Index(frames_) * height_ * width_ + Eigen::Index(frame - 1) * 7;
}

Eigen::Index AlignmentProblem::scale_offset() const { return pose_offset(frames_); }

Eigen::Index AlignmentProblem::parameter_count() const {
  return scale_offset() + static_cast<Eigen::Index>(observations_.size());
}

Eigen::VectorXd AlignmentProblem::pack(const AlignmentState& state) const {
  Eigen::VectorXd x(parameter_count());
  const Eigen::Index pixels = Eigen::Index(height_) * width_;
  for (int n = 0; n < frames_; ++n) {
    const Posed camera = inverse(state.frame_poses[n]);
    for (Eigen::Index i = 0; i < pixels; ++i) x[n * pixels + i] = (camera * state.global_pointmaps[n].points.col(i)).z();
  }
  for (int n = 1; n < frames_; ++n) {
    x.segment<4>(pose_offset(n)) = matrix_quaternion(state.frame_poses[n].rotation());
    x.segment<3>(pose_offset(n) + 4) = state.frame_poses[n].translation();
  }
  x.tail(observations_.size()) = state.log_scales;
  return x;
}

AlignmentState AlignmentProblem::unpack(const Eigen::VectorXd& x) const {
  AlignmentState state;
  const Eigen::Index pixels = Eigen::Index(height_) * width_;
  state.frame_poses.push_back(Posed::identity());
  for (int n = 1; n < frames_; ++n) {
    const Eigen::Vector4d q = x.segment<4>(pose_offset(n)).normalized();
    state.frame_poses.push_back(Posed::unchecked(quaternion_matrix(q), x.segment<3>(pose_offset(n) + 4)));
  }
  for (int n = 0; n < frames_; ++n) {
    PointMap p(height_, width_);
    const Eigen::Matrix3Xd local = rays_[n] * x.segment(n * pixels, pixels).asDiagonal();
    p.points = (state.frame_poses[n].rotation() * local).colwise() + state.frame_poses[n].translation();
    state.global_pointmaps.push_back(std::move(p));
  }
  state.log_scales = x.tail(observations_.size());
  return state;
}

double AlignmentProblem::evaluate(const Eigen::VectorXd& x, Eigen::VectorXd* grad) const {
  const Eigen::Index pixels = Eigen::Index(height_) * width_;
  if (grad) grad->setZero(parameter_count());

  std::vector<Eigen::Matrix3d> rotations(frames_, Eigen::Matrix3d::Identity());
  std::vector<Eigen::Vector3d> translations(frames_, Eigen::Vector3d::Zero());
  for (int n = 1; n < frames_; ++n) {
    rotations[n] = quaternion_matrix(x.segment<4>(pose_offset(n)));
    translations[n] = x.segment<3>(pose_offset(n) + 4);
  }
  std::vector<Eigen::Matrix3Xd> local(frames_), world(frames_);
  for (int n = 0; n < frames_; ++n) {
    local[n] = rays_[n] * x.segment(n * pixels, pixels).asDiagonal();
    world[n] = (rotations[n] * local[n]).colwise() + translations[n];
  }
  std::vector<Eigen::Matrix3d> grad_rotations(frames_, Eigen::Matrix3d::Zero());
  std::vector<Eigen::Vector3d> grad_translations(frames_, Eigen::Vector3d::Zero());
  std::vector<Eigen::Matrix3Xd> grad_world(frames_, Eigen::Matrix3Xd::Zero(3, grad ? pixels : 0));

  double loss = 0.0;
  for (std::size_t e = 0; e < observations_.size(); ++e) {
    const auto& o = observations_[e];
    const int n = o.ref_frame;
    const Eigen::Index scale_index = scale_offset() + static_cast<Eigen::Index>(e);
    const double s = std::exp(x[scale_index]);
    double grad_s = 0.0;

    auto view = [&](int frame, const PointMap& q, const Eigen::ArrayXd& c) {
      const Eigen::Matrix3Xd mapped = (rotations[n] * q.points).colwise() + translations[n];
      const Eigen::Matrix3Xd residual = world[frame] - s * mapped;
      const Eigen::ArrayXd norms = residual.colwise().norm().transpose().array();
      loss += (c * norms).sum();
      if (!grad) return;
      // d|r|/dr = r / |r|; zero at the kink.
      const Eigen::ArrayXd weight = (norms > 0.0).select(c / norms, 0.0);
      const Eigen::Matrix3Xd g = residual * weight.matrix().asDiagonal();
      grad_world[frame] += g;
      grad_s -= (g.array() * mapped.array()).sum();
      grad_rotations[n] -= s * g * q.points.transpose();
      grad_translations[n] -= s * g.rowwise().sum();
    };
    view(o.ref_frame, o.pointmap_ref, o.confidence_ref);
    view(o.src_frame, o.pointmap_src, o.confidence_src);
    if (grad) (*grad)[scale_index] += grad_s * s;
  }
  if (grad) {
    for (int n = 0; n < frames_; ++n) {
      // P = R (d ray) + t
      grad->segment(n * pixels, pixels) =
          ((rotations[n].transpose() * grad_world[n]).array() * rays_[n].array()).colwise().sum().transpose();
      grad_rotations[n] += grad_world[n] * local[n].transpose();
      grad_translations[n] += grad_world[n].rowwise().sum();
      if (n == 0) continue;
      grad->segment<4>(pose_offset(n)) += quaternion_gradient(x.segment<4>(pose_offset(n)), grad_rotations[n]);
      grad->segment<3>(pose_offset(n) + 4) += grad_translations[n];
    }
  }
  return loss;
}

namespace {

double learning_rate_at(const AlignmentConfig& config, int step) {
  switch (config.schedule) {
    case LearningRateSchedule::Constant:
      return config.learning_rate;
    case LearningRateSchedule::ExponentialTail: {
      const int hold = config.steps / 2;
      if (step < hold || config.steps - hold <= 1) return config.learning_rate;
      const double progress = double(step - hold) / double(config.steps - hold - 1);
      return config.learning_rate * std::pow(config.final_learning_rate / config.learning_rate, progress);
    }
  }
  return config.learning_rate;
}

}  // namespace

AlignmentResult optimize_alignment(const std::vector<EdgeObservation>& observations,
                                   const std::vector<Intrinsicsd>& intrinsics, const AlignmentConfig& config) {
  const int frames = static_cast<int>(intrinsics.size());
  if (frames < 2) throw Error(Errc::TooFewFrames, "need at least two frames", {frames});
  if (config.steps < 1) throw Error(Errc::InvalidConfig, "steps must be >= 1", {config.steps});
  if (!(config.learning_rate > 0) || !(config.final_learning_rate > 0)) {
    throw Error(Errc::InvalidConfig, "learning rates must be positive");
  }
  std::vector<Edge> edges;
  for (const auto& o : observations) edges.push_back({o.ref_frame, o.src_frame});
  for (const auto& e : edges) {
    if (e.ref < 0 || e.src < 0 || e.ref >= frames || e.src >= frames) {
      throw Error(Errc::InconsistentShapes, "edge refers to a frame outside the sequence", {e.ref, e.src});
    }
  }
  if (auto missing = unreachable_frames(edges, frames); !missing.empty()) {
    throw Error(Errc::DisconnectedGraph, "frames not connected to frame 0",
                std::vector<std::int64_t>(missing.begin(), missing.end()));
  }

  const AlignmentProblem problem(observations, intrinsics);

  AlignmentState init;
  init.frame_poses.assign(frames, Posed::identity());
  init.log_scales = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(observations.size()));
  for (int n = 0; n < frames; ++n) {
    const PointMap* source = nullptr;
    for (const auto& o : observations) {
      if (o.ref_frame == n) {
        source = &o.pointmap_ref;
        break;
      }
    }
    if (!source) {
      for (const auto& o : observations) {
        if (o.src_frame == n) {
          source = &o.pointmap_src;
          break;
        }
      }
    }
    init.global_pointmaps.push_back(*source);
  }

  Eigen::VectorXd x = problem.pack(init);
  Eigen::VectorXd grad;
  Eigen::VectorXd m = Eigen::VectorXd::Zero(x.size());
  Eigen::VectorXd v = Eigen::VectorXd::Zero(x.size());
  constexpr double beta1 = 0.9, beta2 = 0.999, epsilon = 1e-8;
  const auto scales = Eigen::seqN(x.size() - Eigen::Index(observations.size()), Eigen::Index(observations.size()));

  AlignmentResult result;
  const Eigen::VectorXd start = x;
  for (int step = 0; step < config.steps; ++step) {
    const double loss = problem.evaluate(x, &grad);
    if (!std::isfinite(loss) || !grad.allFinite()) {
      throw Error(Errc::NonFiniteLoss, "loss diverged", {step});
    }
    if (step == 0) result.initial_loss = loss;
    m = beta1 * m + (1 - beta1) * grad;
    v = beta2 * v + (1 - beta2) * grad.cwiseAbs2();
    const double correction1 = 1 - std::pow(beta1, step + 1);
    const double correction2 = 1 - std::pow(beta2, step + 1);
    const double lr = learning_rate_at(config, step);
    x.array() -= lr * (m.array() / correction1) / ((v.array() / correction2).sqrt() + epsilon);

    for (int n = 1; n < frames; ++n) {
      auto q = x.segment<4>(Eigen::Index(frames) * problem.height() * problem.width() + Eigen::Index(n - 1) * 7);
      q.normalize();
    }
    x(scales).array() -= x(scales).mean();
  }
  result.final_loss = problem.evaluate(x, nullptr);
  if (!std::isfinite(result.final_loss)) throw Error(Errc::NonFiniteLoss, "loss diverged", {config.steps});
  // The unsquared norm keeps a unit-size gradient down to zero residual, so
  // fixed-rate steps orbit a minimum instead of settling. An input that is
  // already aligned would come back worse than it went in.
  if (result.final_loss > result.initial_loss) {
    x = start;
    result.final_loss = result.initial_loss;
  }
  result.state = problem.unpack(x);
  return result;
}

}  // namespace reframe
