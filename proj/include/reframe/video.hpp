#ifndef REFRAME_VIDEO_HPP
#define REFRAME_VIDEO_HPP

#include <Eigen/Core>

#include <cstdint>
#include <vector>

#include "reframe/common.hpp"
#include "reframe/geometry.hpp"

namespace reframe {

struct VideoShape {
  int frames{0}, channels{0}, height{0}, width{0};

  Eigen::Index size() const { return Eigen::Index(frames) * channels * height * width; }
  bool operator==(const VideoShape&) const = default;
};

/// Dense frames x channels x height x width block, row-major in that order.
/// The Tag keeps latent and pixel videos apart at compile time.
template <typename Scalar, typename Tag>
class VideoTensor {
 public:
  using Array = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

  VideoTensor() = default;
  explicit VideoTensor(const VideoShape& shape) : shape_(shape), data_(Array::Zero(shape.size())) {
    if (shape.frames < 0 || shape.channels < 0 || shape.height < 0 || shape.width < 0) {
      throw Error(Errc::ShapeMismatch, "negative extent");
    }
  }
  VideoTensor(const VideoShape& shape, Array data) : shape_(shape), data_(std::move(data)) {
    if (data_.size() != shape_.size()) throw Error(Errc::ShapeMismatch, "data extent does not match shape");
  }
  VideoTensor(int frames, int channels, int height, int width)
      : VideoTensor(VideoShape{frames, channels, height, width}) {}

  const VideoShape& shape() const { return shape_; }
  int frames() const { return shape_.frames; }
  int channels() const { return shape_.channels; }
  int height() const { return shape_.height; }
  int width() const { return shape_.width; }

  Eigen::Index index(int f, int c, int y, int x) const {
    return ((Eigen::Index(f) * shape_.channels + c) * shape_.height + y) * shape_.width + x;
  }
  Scalar& operator()(int f, int c, int y, int x) { return data_[index(f, c, y, x)]; }
  Scalar operator()(int f, int c, int y, int x) const { return data_[index(f, c, y, x)]; }

  Array& array() { return data_; }
  const Array& array() const { return data_; }

  bool allFinite() const { return data_.allFinite(); }

 private:
  VideoShape shape_;
  Array data_;
};

struct LatentTag;
struct PixelTag;

/// Latent codes z_t, the object the sampler denoises.
using LatentVideo = VideoTensor<double, LatentTag>;
/// Decoded RGB frames, values in [0, 1] (not enforced for intermediate results).
using PixelVideo = VideoTensor<double, PixelTag>;

template <typename Scalar, typename Tag>
void require_same_shape(const VideoTensor<Scalar, Tag>& a, const VideoTensor<Scalar, Tag>& b) {
  if (!(a.shape() == b.shape())) throw Error(Errc::ShapeMismatch, "video shapes differ");
}

/// Per-frame {0,1} field, 1 = known (rendered), 0 = unknown.
class OcclusionMask {
 public:
  OcclusionMask() = default;
  OcclusionMask(int frames, int height, int width, std::uint8_t fill = 0)
      : frames_(frames), height_(height), width_(width), data_(std::size_t(frames) * height * width, fill) {}

  int frames() const { return frames_; }
  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t size() const { return data_.size(); }

  std::size_t index(int f, int y, int x) const { return (std::size_t(f) * height_ + y) * width_ + x; }
  std::uint8_t& operator()(int f, int y, int x) { return data_[index(f, y, x)]; }
  std::uint8_t operator()(int f, int y, int x) const { return data_[index(f, y, x)]; }

  const std::vector<std::uint8_t>& values() const { return data_; }
  std::vector<std::uint8_t>& values() { return data_; }

  /// Fraction of cells equal to 1.
  double coverage() const {
    if (data_.empty()) return 0.0;
    std::size_t known = 0;
    for (auto v : data_) known += v;
    return double(known) / double(data_.size());
  }

  bool operator==(const OcclusionMask&) const = default;

 private:
  int frames_{0}, height_{0}, width_{0};
  std::vector<std::uint8_t> data_;
};

/// H x W grid of 3D points, one column per pixel in row-major order.
struct PointMap {
  int height{0}, width{0};
  Eigen::Matrix3Xd points;

  PointMap() = default;
  PointMap(int h, int w) : height(h), width(w), points(Eigen::Matrix3Xd::Zero(3, Eigen::Index(h) * w)) {}

  Eigen::Index pixels() const { return points.cols(); }
  auto at(int y, int x) { return points.col(Eigen::Index(y) * width + x); }
  auto at(int y, int x) const { return points.col(Eigen::Index(y) * width + x); }
};

/// Per-pixel {0,1} field of a single frame.
using PixelMask = Eigen::Array<std::uint8_t, Eigen::Dynamic, 1>;

}  // namespace reframe

#endif  // REFRAME_VIDEO_HPP
