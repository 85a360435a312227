#include "pfa/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "pfa/error.hpp"
#include "pfa/random.hpp"

namespace pfa {

RigidPose RigidPose::inverse() const {
  RigidPose inv;
  inv.rotation = rotation.transpose();
  inv.translation = -(inv.rotation * translation);
  return inv;
}

RigidPose RigidPose::operator*(const RigidPose& rhs) const {
  RigidPose out;
  out.rotation = rotation * rhs.rotation;
  out.translation = rotation * rhs.translation + translation;
  return out;
}

bool RigidPose::is_valid(double tol) const {
  return is_rotation(rotation, tol) && translation.allFinite();
}

bool is_rotation(const Mat3& r, double tol) {
  if (!r.allFinite()) return false;
  const double ortho = (r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff();
  return ortho < tol && std::abs(r.determinant() - 1.0) < tol;
}

Mat3 exp_so3(const Vec3& omega) {
  const double angle = omega.norm();
  if (angle == 0.0) return Mat3::Identity();
  return Eigen::AngleAxisd(angle, omega / angle).toRotationMatrix();
}

Vec3 log_so3(const Mat3& r) {
  const Eigen::AngleAxisd aa(r);
  return aa.axis() * aa.angle();
}

Mat3 rotation_about(const Vec3& axis, double angle_rad) {
  return Eigen::AngleAxisd(angle_rad, axis.normalized()).toRotationMatrix();
}

Mat3 CameraIntrinsics::matrix() const {
  Mat3 k;
  k << fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
  return k;
}

Mat3 CameraIntrinsics::inverse_matrix() const {
  Mat3 k;
  k << 1.0 / fx, 0.0, -cx / fx, 0.0, 1.0 / fy, -cy / fy, 0.0, 0.0, 1.0;
  return k;
}

bool CameraIntrinsics::is_valid() const {
  return std::isfinite(fx) && std::isfinite(fy) && fx > 0.0 && fy > 0.0 &&
         width > 0 && height > 0 && cx >= 0.0 && cx < width && cy >= 0.0 &&
         cy < height;
}

void CameraIntrinsics::validate() const {
  if (is_valid()) return;
  std::ostringstream msg;
  msg << "invalid camera intrinsics: fx=" << fx << " fy=" << fy << " cx=" << cx
      << " cy=" << cy << " size=" << width << "x" << height;
  throw Error(ErrorCode::kInvalidInput, msg.str());
}

Vec2 project_camera(const CameraIntrinsics& K, const Vec3& x) {
  if (!(x.z() > 0.0)) {
    std::ostringstream msg;
    msg << "point behind camera (depth " << x.z() << ")";
    throw Error(ErrorCode::kBehindCamera, msg.str());
  }
  return {K.fx * x.x() / x.z() + K.cx, K.fy * x.y() / x.z() + K.cy};
}

Vec2 project(const CameraIntrinsics& K, const RigidPose& pose, const Vec3& p) {
  return project_camera(K, pose.transform(p));
}

Vec3 back_project(const CameraIntrinsics& K, const Vec2& u, double z) {
  return {(u.x() - K.cx) * z / K.fx, (u.y() - K.cy) * z / K.fy, z};
}

double geodesic_distance(const Mat3& ra, const Mat3& rb) {
  // atan2(sin, cos) of the relative angle; equal to the clamped arccos of
  // (trace - 1) / 2 but well conditioned near 0 and 180 degrees.
  const Mat3 rel = ra.transpose() * rb;
  const double c = std::clamp((rel.trace() - 1.0) / 2.0, -1.0, 1.0);
  const Vec3 axis(rel(2, 1) - rel(1, 2), rel(0, 2) - rel(2, 0), rel(1, 0) - rel(0, 1));
  const double s = std::min(axis.norm() / 2.0, 1.0);
  return std::clamp(rad_to_deg(std::atan2(s, c)), 0.0, 180.0);
}

std::vector<Mat3> sample_rotations(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Mat3> out;
  out.reserve(n);
  while (out.size() < n) {
    Eigen::Vector4d q(rng.normal(), rng.normal(), rng.normal(), rng.normal());
    const double norm = q.norm();
    if (norm < 1e-12) continue;
    q /= norm;
    out.push_back(Eigen::Quaterniond(q[0], q[1], q[2], q[3]).toRotationMatrix());
  }
  return out;
}

}  // namespace pfa
