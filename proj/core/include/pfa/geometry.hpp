#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace pfa {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double deg_to_rad(double deg) { return deg * kPi / 180.0; }
inline constexpr double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

/// Rigid transform from model frame to camera frame: x_cam = R * x_model + t.
/// Translation is in meters.
struct RigidPose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static RigidPose identity() { return {}; }

  Vec3 transform(const Vec3& p) const { return rotation * p + translation; }
  RigidPose inverse() const;
  RigidPose operator*(const RigidPose& rhs) const;

  /// Orthonormality and det(R) = +1 within `tol`.
  bool is_valid(double tol = 1e-9) const;

  bool operator==(const RigidPose&) const = default;
};

bool is_rotation(const Mat3& r, double tol = 1e-9);

/// Rodrigues exponential of an axis-angle vector (radians).
Mat3 exp_so3(const Vec3& omega);

/// Axis-angle vector of a rotation (radians).
Vec3 log_so3(const Mat3& r);

Mat3 rotation_about(const Vec3& axis, double angle_rad);

/// Pinhole intrinsics. Pixel (x, y) has its center at integer coordinates,
/// origin at the top-left pixel, y pointing down.
struct CameraIntrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 1;
  int height = 1;

  Mat3 matrix() const;
  Mat3 inverse_matrix() const;

  /// Throws Error(kInvalidInput) when fx, fy <= 0 or the principal point is
  /// outside [0, width) x [0, height).
  void validate() const;
  bool is_valid() const;

  bool operator==(const CameraIntrinsics&) const = default;
};

/// Projects a model point through `pose` and `K`.
/// Throws Error(kBehindCamera) when the camera-frame depth is not positive.
Vec2 project(const CameraIntrinsics& K, const RigidPose& pose, const Vec3& p);

/// Projects a camera-frame point. Throws Error(kBehindCamera) for z <= 0.
Vec2 project_camera(const CameraIntrinsics& K, const Vec3& x_cam);

/// Camera-frame point at depth `z` seen through pixel `u`.
Vec3 back_project(const CameraIntrinsics& K, const Vec2& u, double z);

/// Angle of Ra^T Rb in degrees, in [0, 180].
double geodesic_distance(const Mat3& ra, const Mat3& rb);

/// Haar-uniform rotations from normalized 4D Gaussian quaternions.
std::vector<Mat3> sample_rotations(std::size_t n, std::uint64_t seed);

}  // namespace pfa
