#pragma once

// Core geometric types and primitives. Camera frame convention: x right,
// y down, z forward; the road lies at positive y below the camera.

#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "roadscale/errors.hpp"

namespace roadscale {

template <typename Scalar>
using Vector2 = Eigen::Matrix<Scalar, 2, 1>;
template <typename Scalar>
using Vector3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using Matrix3 = Eigen::Matrix<Scalar, 3, 3>;
template <typename Scalar>
using Matrix4 = Eigen::Matrix<Scalar, 4, 4>;

/// Tolerance for accepting a matrix as a rotation (per entry of RᵀR − I and on det R − 1).
template <typename Scalar>
constexpr Scalar rotation_tolerance() {
  if constexpr (std::numeric_limits<Scalar>::digits >= 53) {
    return Scalar(1e-9);
  } else {
    return Scalar(1e-4);
  }
}

/// Pixels closer than this to the principal row cannot be assigned a ground depth.
inline constexpr double kHorizonGuardPx = 1.0;

template <typename Derived>
bool is_rotation(const Eigen::MatrixBase<Derived>& R) {
  using Scalar = typename Derived::Scalar;
  const Scalar tol = rotation_tolerance<Scalar>();
  const auto I = Matrix3<Scalar>::Identity();
  if (!R.allFinite()) return false;
  if (((R.transpose() * R) - I).cwiseAbs().maxCoeff() > tol) return false;
  return std::abs(R.determinant() - Scalar(1)) <= tol;
}

template <typename Scalar>
struct Pixel {
  Scalar u{0};
  Scalar v{0};

  Pixel() = default;
  Pixel(Scalar u_, Scalar v_) : u(u_), v(v_) {}
  explicit Pixel(const Vector2<Scalar>& p) : u(p.x()), v(p.y()) {}

  Vector2<Scalar> vec() const { return {u, v}; }
  Vector3<Scalar> homogeneous() const { return {u, v, Scalar(1)}; }
  bool finite() const { return std::isfinite(u) && std::isfinite(v); }
};

template <typename Scalar>
class CameraModel {
 public:
  CameraModel(Scalar fx, Scalar fy, Scalar cx, Scalar cy, Scalar camera_height_m)
      : fx_(fx), fy_(fy), cx_(cx), cy_(cy), height_(camera_height_m) {
    if (!(fx > 0) || !(fy > 0)) throw Error(ErrorCode::InvalidArgument, "focal lengths must be positive");
    if (!(camera_height_m > 0)) throw Error(ErrorCode::InvalidArgument, "camera height must be positive");
    if (!std::isfinite(cx) || !std::isfinite(cy)) throw Error(ErrorCode::InvalidArgument, "principal point must be finite");
  }

  Scalar fx() const { return fx_; }
  Scalar fy() const { return fy_; }
  Scalar cx() const { return cx_; }
  Scalar cy() const { return cy_; }
  Scalar camera_height_m() const { return height_; }

  Matrix3<Scalar> K() const {
    Matrix3<Scalar> k;
    k << fx_, 0, cx_, 0, fy_, cy_, 0, 0, 1;
    return k;
  }

  Matrix3<Scalar> K_inverse() const {
    Matrix3<Scalar> k;
    k << 1 / fx_, 0, -cx_ / fx_, 0, 1 / fy_, -cy_ / fy_, 0, 0, 1;
    return k;
  }

  /// Normalized image coordinates (x/z, y/z, 1) of a pixel.
  Vector3<Scalar> normalize(const Pixel<Scalar>& p) const {
    return {(p.u - cx_) / fx_, (p.v - cy_) / fy_, Scalar(1)};
  }

 private:
  Scalar fx_, fy_, cx_, cy_, height_;
};

/// Rigid transform x ↦ R·x + t.
template <typename Scalar>
class Pose {
 public:
  Pose() : R_(Matrix3<Scalar>::Identity()), t_(Vector3<Scalar>::Zero()) {}

  Pose(const Matrix3<Scalar>& R, const Vector3<Scalar>& t) : R_(R), t_(t) {
    if (!is_rotation(R_)) throw Error(ErrorCode::InvalidRotation, "matrix is not a rotation");
    if (!t_.allFinite()) throw Error(ErrorCode::InvalidArgument, "translation must be finite");
  }

  static Pose Identity() { return Pose(); }

  /// Builds a pose from a 3x4 or 4x4 [R|t] matrix.
  template <typename Derived>
  static Pose FromMatrix(const Eigen::MatrixBase<Derived>& m) {
    return Pose(m.template block<3, 3>(0, 0), m.template block<3, 1>(0, 3));
  }

  const Matrix3<Scalar>& R() const { return R_; }
  const Vector3<Scalar>& t() const { return t_; }

  Matrix4<Scalar> matrix() const {
    Matrix4<Scalar> m = Matrix4<Scalar>::Identity();
    m.template block<3, 3>(0, 0) = R_;
    m.template block<3, 1>(0, 3) = t_;
    return m;
  }

  Vector3<Scalar> operator*(const Vector3<Scalar>& x) const { return R_ * x + t_; }

  template <typename Other>
  Pose<Other> cast() const {
    return Pose<Other>(R_.template cast<Other>(), t_.template cast<Other>());
  }

 private:
  Matrix3<Scalar> R_;
  Vector3<Scalar> t_;
};

/// 7-DOF transform x ↦ s·R·x + t.
template <typename Scalar>
class Similarity {
 public:
  Similarity() : scale_(1), R_(Matrix3<Scalar>::Identity()), t_(Vector3<Scalar>::Zero()) {}

  Similarity(Scalar scale, const Matrix3<Scalar>& R, const Vector3<Scalar>& t) : scale_(scale), R_(R), t_(t) {
    if (!(scale > 0) || !std::isfinite(scale)) throw Error(ErrorCode::InvalidArgument, "similarity scale must be positive");
    if (!is_rotation(R_)) throw Error(ErrorCode::InvalidRotation, "matrix is not a rotation");
  }

  Scalar scale() const { return scale_; }
  const Matrix3<Scalar>& R() const { return R_; }
  const Vector3<Scalar>& t() const { return t_; }

  Vector3<Scalar> operator*(const Vector3<Scalar>& x) const { return scale_ * (R_ * x) + t_; }

  /// Applies the similarity to a world-from-camera pose (rotation composed, position mapped).
  Pose<Scalar> operator*(const Pose<Scalar>& p) const { return Pose<Scalar>(R_ * p.R(), (*this) * p.t()); }

 private:
  Scalar scale_;
  Matrix3<Scalar> R_;
  Vector3<Scalar> t_;
};

/// A tracked feature: pixel in the previous frame, pixel in the current frame, and
/// its triangulated position in the previous camera frame (relative units).
/// `id` is the index of the originating correspondence.
template <typename Scalar>
struct TrackedPoint {
  Pixel<Scalar> pixel;
  Pixel<Scalar> pixel_next;
  Vector3<Scalar> point3d = Vector3<Scalar>::Zero();
  std::size_t id = 0;

  Scalar height() const { return point3d.y(); }
  Scalar depth() const { return point3d.z(); }
};

using Pixeld = Pixel<double>;
using CameraModeld = CameraModel<double>;
using Posed = Pose<double>;
using Similarityd = Similarity<double>;
using TrackedPointd = TrackedPoint<double>;
using Vector2d = Vector2<double>;
using Vector3d = Vector3<double>;
using Matrix3d = Matrix3<double>;
using Matrix4d = Matrix4<double>;

/// (Ra·Rb, Ra·tb + ta): apply b first, then a.
template <typename Scalar>
Pose<Scalar> compose(const Pose<Scalar>& a, const Pose<Scalar>& b) {
  return Pose<Scalar>(a.R() * b.R(), a.R() * b.t() + a.t());
}

template <typename Scalar>
Pose<Scalar> invert(const Pose<Scalar>& p) {
  const Matrix3<Scalar> Rt = p.R().transpose();
  return Pose<Scalar>(Rt, -(Rt * p.t()));
}

template <typename Derived>
Matrix3<typename Derived::Scalar> skew(const Eigen::MatrixBase<Derived>& v) {
  EIGEN_STATIC_ASSERT_VECTOR_SPECIFIC_SIZE(Derived, 3);
  using Scalar = typename Derived::Scalar;
  Matrix3<Scalar> S;
  S << Scalar(0), -v(2), v(1), v(2), Scalar(0), -v(0), -v(1), v(0), Scalar(0);
  return S;
}

template <typename Scalar>
Pixel<Scalar> project(const CameraModel<Scalar>& cam, const Vector3<Scalar>& X) {
  if (!(X.z() > 0)) throw Error(ErrorCode::NonPositiveDepth, "point is not in front of the camera");
  return {cam.fx() * X.x() / X.z() + cam.cx(), cam.fy() * X.y() / X.z() + cam.cy()};
}

template <typename Scalar>
Vector3<Scalar> backproject(const CameraModel<Scalar>& cam, const Pixel<Scalar>& p, Scalar depth) {
  return {(p.u - cam.cx()) * depth / cam.fx(), (p.v - cam.cy()) * depth / cam.fy(), depth};
}

/// Depth of a ground point at height `height` seen at image row `v`: height·fy / (v − cy).
template <typename Scalar>
Scalar ground_depth_from_row(const CameraModel<Scalar>& cam, Scalar height, Scalar v) {
  const Scalar dv = v - cam.cy();
  if (!(std::abs(dv) >= Scalar(kHorizonGuardPx))) {
    throw Error(ErrorCode::HorizonRow, "row " + std::to_string(v) + " is within the horizon guard band");
  }
  return height * cam.fy() / dv;
}

/// Geodesic angle of a rotation matrix, in radians.
template <typename Derived>
typename Derived::Scalar rotation_angle(const Eigen::MatrixBase<Derived>& R) {
  using Scalar = typename Derived::Scalar;
  const Matrix3<Scalar> m = R;
  return Eigen::AngleAxis<Scalar>(m).angle();
}

/// Rotation exp map of a 3-vector (axis·angle).
template <typename Derived>
Matrix3<typename Derived::Scalar> exp_so3(const Eigen::MatrixBase<Derived>& w) {
  using Scalar = typename Derived::Scalar;
  const Scalar theta = w.norm();
  if (theta == Scalar(0)) return Matrix3<Scalar>::Identity();
  return Eigen::AngleAxis<Scalar>(theta, w / theta).toRotationMatrix();
}

}  // namespace roadscale
