#ifndef REFRAME_GEOMETRY_HPP
#define REFRAME_GEOMETRY_HPP

// Rigid poses and the pinhole camera. Camera-from-world everywhere: a Pose
// maps world coordinates into camera coordinates. Right-handed, the camera
// looks down +z, image u grows rightward and v downward, and pixel (i, j)
// has its center at u = i, v = j.

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>

#include "reframe/common.hpp"

namespace reframe {

template <typename Scalar>
using Vector3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using Matrix3 = Eigen::Matrix<Scalar, 3, 3>;

using Point3 = Vector3<double>;

template <typename Scalar>
class Pose {
 public:
  using Vec = Vector3<Scalar>;
  using Mat = Matrix3<Scalar>;

  Pose() : rotation_(Mat::Identity()), translation_(Vec::Zero()) {}

  /// Throws InvalidPose unless R is orthonormal with det +1 (1e-6 per entry)
  /// and every entry is finite.
  Pose(const Mat& rotation, const Vec& translation) : rotation_(rotation), translation_(translation) {
    if (!rotation_.allFinite() || !translation_.allFinite()) {
      throw Error(Errc::InvalidPose, "non-finite pose entry");
    }
    const Scalar tol = Scalar(1e-6);
    if (((rotation_.transpose() * rotation_ - Mat::Identity()).cwiseAbs().maxCoeff() > tol) ||
        std::abs(rotation_.determinant() - Scalar(1)) > tol) {
      throw Error(Errc::InvalidPose, "rotation is not a proper orthonormal matrix");
    }
  }

  static Pose identity() { return Pose(); }
  static Pose from_translation(const Vec& t) { return unchecked(Mat::Identity(), t); }
  static Pose from_rotation(const Mat& r) { return Pose(r, Vec::Zero()); }

  /// Skips validation; for results of operations that preserve the invariants.
  static Pose unchecked(const Mat& rotation, const Vec& translation) {
    Pose p;
    p.rotation_ = rotation;
    p.translation_ = translation;
    return p;
  }

  const Mat& rotation() const { return rotation_; }
  const Vec& translation() const { return translation_; }

  Vec operator*(const Vec& p) const { return rotation_ * p + translation_; }

  Eigen::Matrix<Scalar, 3, 4> matrix() const {
    Eigen::Matrix<Scalar, 3, 4> m;
    m << rotation_, translation_;
    return m;
  }

  bool isApprox(const Pose& other, Scalar tol) const {
    return (rotation_ - other.rotation_).cwiseAbs().maxCoeff() <= tol &&
           (translation_ - other.translation_).cwiseAbs().maxCoeff() <= tol;
  }

  template <typename Other>
  Pose<Other> cast() const {
    return Pose<Other>::unchecked(rotation_.template cast<Other>(), translation_.template cast<Other>());
  }

 private:
  Mat rotation_;
  Vec translation_;
};

using Posed = Pose<double>;

/// Applies b then a.
template <typename Scalar>
Pose<Scalar> compose(const Pose<Scalar>& a, const Pose<Scalar>& b) {
  return Pose<Scalar>::unchecked(a.rotation() * b.rotation(), a.rotation() * b.translation() + a.translation());
}

template <typename Scalar>
Pose<Scalar> operator*(const Pose<Scalar>& a, const Pose<Scalar>& b) {
  return compose(a, b);
}

template <typename Scalar>
Pose<Scalar> inverse(const Pose<Scalar>& p) {
  const Matrix3<Scalar> rt = p.rotation().transpose();
  return Pose<Scalar>::unchecked(rt, -(rt * p.translation()));
}

/// Rotation angle of R in [0, pi]. The cosine comes from the trace, clamped to
/// [-1, 1]; the sine from the skew part keeps small angles accurate where
/// acos alone loses half the digits.
template <typename Derived>
typename Derived::Scalar rotation_angle(const Eigen::MatrixBase<Derived>& r) {
  using Scalar = typename Derived::Scalar;
  const Scalar c = std::clamp((r.trace() - Scalar(1)) / Scalar(2), Scalar(-1), Scalar(1));
  const Eigen::Matrix<Scalar, 3, 1> skew(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1));
  return std::atan2(skew.norm() / Scalar(2), c);
}

template <typename Scalar>
Matrix3<Scalar> axis_angle(const Vector3<Scalar>& axis, Scalar angle) {
  return Eigen::AngleAxis<Scalar>(angle, axis.normalized()).toRotationMatrix();
}

template <typename Scalar>
struct Intrinsics {
  Scalar fx{1}, fy{1};
  Scalar cx{0}, cy{0};
  int width{1}, height{1};

  Intrinsics() = default;
  Intrinsics(Scalar fx_, Scalar fy_, Scalar cx_, Scalar cy_, int width_, int height_)
      : fx(fx_), fy(fy_), cx(cx_), cy(cy_), width(width_), height(height_) {
    validate();
  }

  /// Focal length equal to the image width, principal point at the center.
  static Intrinsics centered(int width, int height) {
    return Intrinsics(Scalar(width), Scalar(width), Scalar(width) / 2, Scalar(height) / 2, width, height);
  }

  void validate() const {
    if (!(fx > 0) || !(fy > 0) || width <= 0 || height <= 0 || !(cx >= 0) || !(cx < width) || !(cy >= 0) ||
        !(cy < height)) {
      throw Error(Errc::InvalidIntrinsics, "focal lengths must be positive and the principal point inside the image");
    }
  }

  bool operator==(const Intrinsics&) const = default;
};

using Intrinsicsd = Intrinsics<double>;

template <typename Scalar>
struct Projection {
  Scalar u, v, depth;
};

template <typename Scalar>
Projection<Scalar> project(const Intrinsics<Scalar>& k, const Vector3<Scalar>& p_cam) {
  if (!(p_cam.z() > 0)) throw Error(Errc::NonPositiveDepth, "point is behind or on the camera plane");
  return {k.fx * p_cam.x() / p_cam.z() + k.cx, k.fy * p_cam.y() / p_cam.z() + k.cy, p_cam.z()};
}

template <typename Scalar>
Vector3<Scalar> unproject(const Intrinsics<Scalar>& k, Scalar u, Scalar v, Scalar depth) {
  if (!(depth > 0)) throw Error(Errc::NonPositiveDepth, "depth must be positive");
  return {(u - k.cx) * depth / k.fx, (v - k.cy) * depth / k.fy, depth};
}

}  // namespace reframe

#endif  // REFRAME_GEOMETRY_HPP
