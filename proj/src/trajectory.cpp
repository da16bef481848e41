#include "reframe/trajectory.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <sstream>

namespace reframe {

Trajectory::Trajectory(std::vector<TrajectoryFrame> frames) : frames_(std::move(frames)) {
  if (frames_.empty()) throw Error(Errc::EmptyTrajectory, "trajectory has no frames");
  for (std::size_t i = 1; i < frames_.size(); ++i) {
    if (frames_[i].timestamp <= frames_[i - 1].timestamp) {
      throw Error(Errc::NonIncreasingTimestamps, "timestamps must be strictly increasing",
                  {static_cast<std::int64_t>(i)});
    }
  }
}

Trajectory Trajectory::from_poses(const std::vector<Posed>& poses) {
  std::vector<TrajectoryFrame> frames;
  frames.reserve(poses.size());
  for (std::size_t i = 0; i < poses.size(); ++i) frames.push_back({static_cast<std::int64_t>(i), poses[i], {}});
  return Trajectory(std::move(frames));
}

std::vector<Posed> Trajectory::poses() const {
  std::vector<Posed> out;
  out.reserve(frames_.size());
  for (const auto& f : frames_) out.push_back(f.pose);
  return out;
}

namespace {

bool parse_double(std::string_view token, double& out) {
  const char* first = token.data();
  const char* last = first + token.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && std::isfinite(out);
}

bool parse_int(std::string_view token, std::int64_t& out) {
  const char* first = token.data();
  const char* last = first + token.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

std::vector<std::string_view> split_spaces(std::string_view line) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && line[i] == ' ') ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ') ++i;
    if (i > start) tokens.push_back(line.substr(start, i - start));
  }
  return tokens;
}

}  // namespace

Trajectory parse_realestate(std::istream& in, int width, int height, std::string* source_id) {
  std::vector<TrajectoryFrame> frames;
  std::string line;
  std::int64_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!have_header) {
      have_header = true;
      if (source_id) *source_id = line;
      continue;
    }
    if (line.find_first_not_of(' ') == std::string::npos) continue;

    const auto tokens = split_spaces(line);
    if (tokens.size() != 19) {
      throw Error(Errc::MalformedLine, "expected 19 fields, got " + std::to_string(tokens.size()), {line_no});
    }
    std::int64_t timestamp = 0;
    if (!parse_int(tokens[0], timestamp)) {
      double as_real = 0;
      if (!parse_double(tokens[0], as_real) || as_real != std::floor(as_real)) {
        throw Error(Errc::MalformedLine, "timestamp is not an integer", {line_no});
      }
      timestamp = static_cast<std::int64_t>(as_real);
    }
    double v[18];
    for (int i = 0; i < 18; ++i) {
      if (!parse_double(tokens[i + 1], v[i])) throw Error(Errc::MalformedLine, "non-numeric field", {line_no});
    }
    Eigen::Matrix3d r;
    Eigen::Vector3d t;
    for (int row = 0; row < 3; ++row) {
      for (int col = 0; col < 3; ++col) r(row, col) = v[6 + row * 4 + col];
      t(row) = v[6 + row * 4 + 3];
    }
    try {
      Intrinsicsd k(v[0] * width, v[1] * height, v[2] * width, v[3] * height, width, height);
      frames.push_back({timestamp, Posed(r, t), k});
    } catch (const Error& e) {
      throw Error(e.code(), std::string(e.what()) + " (line " + std::to_string(line_no) + ")", {line_no});
    }
  }
  if (frames.empty()) throw Error(Errc::EmptyTrajectory, "no frame lines");
  return Trajectory(std::move(frames));
}

Trajectory parse_realestate(const std::string& text, int width, int height, std::string* source_id) {
  std::istringstream in(text);
  return parse_realestate(in, width, height, source_id);
}

Trajectory relativize(const Trajectory& t) {
  const Posed first_inv = inverse(t[0].pose);
  std::vector<TrajectoryFrame> frames = t.frames();
  for (std::size_t j = 0; j < frames.size(); ++j) {
    frames[j].pose = j == 0 ? Posed::identity() : compose(t[j].pose, first_inv);
  }
  return Trajectory(std::move(frames));
}

Trajectory normalize_translation(const Trajectory& t, double target_scale) {
  double sum = 0.0;
  for (const auto& f : t) sum += f.pose.translation().norm();
  if (sum <= 1e-12) return t;
  const double factor = target_scale / sum;
  std::vector<TrajectoryFrame> frames = t.frames();
  for (auto& f : frames) f.pose = Posed::unchecked(f.pose.rotation(), f.pose.translation() * factor);
  return Trajectory(std::move(frames));
}

Trajectory compose_targets(const Trajectory& relative, const Trajectory& original) {
  if (relative.size() != original.size()) {
    throw Error(Errc::LengthMismatch, "relative and original trajectories differ in length",
                {static_cast<std::int64_t>(relative.size()), static_cast<std::int64_t>(original.size())});
  }
  std::vector<TrajectoryFrame> frames = original.frames();
  for (std::size_t j = 0; j < frames.size(); ++j) frames[j].pose = compose(relative[j].pose, original[j].pose);
  return Trajectory(std::move(frames));
}

namespace {

constexpr std::pair<BasicMotion, const char*> kMotionNames[] = {
    {BasicMotion::ZoomIn, "zoom-in"},       {BasicMotion::ZoomOut, "zoom-out"},
    {BasicMotion::PanLeft, "pan-left"},     {BasicMotion::PanRight, "pan-right"},
    {BasicMotion::PanUp, "pan-up"},         {BasicMotion::PanDown, "pan-down"},
    {BasicMotion::RotateCW, "rotate-cw"},   {BasicMotion::RotateCCW, "rotate-ccw"},
    {BasicMotion::OrbitCW, "orbit-cw"},     {BasicMotion::OrbitCCW, "orbit-ccw"},
};

}  // namespace

BasicMotion parse_basic_motion(const std::string& name) {
  for (const auto& [kind, text] : kMotionNames) {
    if (name == text) return kind;
  }
  throw Error(Errc::InvalidConfig, "unknown motion kind '" + name + "'");
}

std::string basic_motion_name(BasicMotion kind) {
  for (const auto& [k, text] : kMotionNames) {
    if (k == kind) return text;
  }
  return "unknown";
}

Trajectory basic_trajectory(BasicMotion kind, double magnitude, int frames, std::optional<double> orbit_radius) {
  if (frames < 2) throw Error(Errc::InvalidFrameCount, "need at least two frames", {frames});
  if (!std::isfinite(magnitude)) throw Error(Errc::InvalidConfig, "magnitude must be finite");
  const bool orbit = kind == BasicMotion::OrbitCW || kind == BasicMotion::OrbitCCW;
  if (orbit && !(orbit_radius && *orbit_radius > 0)) {
    throw Error(Errc::MissingOrbitRadius, "orbit trajectories need a positive orbit radius");
  }

  std::vector<Posed> poses;
  poses.reserve(frames);
  for (int j = 0; j < frames; ++j) {
    const double s = magnitude * double(j) / double(frames - 1);
    Eigen::Vector3d t = Eigen::Vector3d::Zero();
    Eigen::Matrix3d r = Eigen::Matrix3d::Identity();
    switch (kind) {
      case BasicMotion::ZoomIn: t.z() = -s; break;
      case BasicMotion::ZoomOut: t.z() = s; break;
      case BasicMotion::PanLeft: t.x() = -s; break;
      case BasicMotion::PanRight: t.x() = s; break;
      case BasicMotion::PanUp: t.y() = -s; break;
      case BasicMotion::PanDown: t.y() = s; break;
      case BasicMotion::RotateCW: r = axis_angle<double>(Eigen::Vector3d::UnitZ(), s); break;
      case BasicMotion::RotateCCW: r = axis_angle<double>(Eigen::Vector3d::UnitZ(), -s); break;
      case BasicMotion::OrbitCW:
      case BasicMotion::OrbitCCW: {
        // World-from-camera rotation about +y by theta; the camera center sits
        // on a circle of radius orbit_radius around the look-at point.
        const double theta = kind == BasicMotion::OrbitCW ? -s : s;
        const double radius = *orbit_radius;
        const Eigen::Matrix3d world_from_cam = axis_angle<double>(Eigen::Vector3d::UnitY(), theta);
        const Eigen::Vector3d target(0, 0, radius);
        const Eigen::Vector3d center = target + world_from_cam * Eigen::Vector3d(0, 0, -radius);
        r = world_from_cam.transpose();
        t = -(r * center);
        break;
      }
    }
    poses.push_back(j == 0 ? Posed::identity() : Posed(r, t));
  }
  return Trajectory::from_poses(poses);
}

}  // namespace reframe
