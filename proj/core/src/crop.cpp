#include "pfa/crop.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "pfa/error.hpp"

namespace pfa {

CropTransform::CropTransform(const Mat3& matrix, int out_size) : matrix_(matrix), out_size_(out_size) {
  const double s = matrix(0, 0);
  const bool similarity = matrix(1, 1) == s && matrix(0, 1) == 0.0 && matrix(1, 0) == 0.0 &&
                          matrix(2, 0) == 0.0 && matrix(2, 1) == 0.0 && matrix(2, 2) == 1.0;
  if (!similarity || !(s > 0.0) || !std::isfinite(s) || !matrix.allFinite()) {
    throw Error(ErrorCode::kInvalidInput, "crop transform must be a uniform-scale similarity with s > 0");
  }
  if (out_size <= 0) throw Error(ErrorCode::kInvalidInput, "crop size must be positive");
}

Mat3 CropTransform::inverse_matrix() const {
  const double s = scale();
  Mat3 inv;
  inv << 1.0 / s, 0.0, -matrix_(0, 2) / s, 0.0, 1.0 / s, -matrix_(1, 2) / s, 0.0, 0.0, 1.0;
  return inv;
}

CropTransform compute_crop(const RigidPose& pose, const CameraIntrinsics& K, const MeshModel& mesh,
                           int out_size, double pad) {
  if (!(pad > 0.0)) throw Error(ErrorCode::kInvalidInput, "crop padding must be positive");
  Vec2 lo = Vec2::Constant(std::numeric_limits<double>::infinity());
  Vec2 hi = -lo;
  for (const Vec3& v : mesh.vertices()) {
    const Vec2 u = project(K, pose, v);
    lo = lo.cwiseMin(u);
    hi = hi.cwiseMax(u);
  }
  const Vec2 extent = hi - lo;
  const double side = pad * std::max(extent.x(), extent.y());
  if (!(side > 0.0) || !std::isfinite(side)) {
    throw Error(ErrorCode::kDegenerate, "projected mesh collapses to a point; cannot build a crop");
  }
  const Vec2 center = 0.5 * (lo + hi);
  const double s = out_size / side;
  Mat3 m;
  m << s, 0.0, 0.5 * out_size - s * center.x(), 0.0, s, 0.5 * out_size - s * center.y(), 0.0, 0.0, 1.0;
  return CropTransform(m, out_size);
}

Vec2 align_intrinsics(const Vec2& u, const CameraIntrinsics& K_r, const CameraIntrinsics& K_t) {
  return {K_r.fx * (u.x() - K_t.cx) / K_t.fx + K_r.cx, K_r.fy * (u.y() - K_t.cy) / K_t.fy + K_r.cy};
}

Vec2 lift_to_image(const Vec2& u_crop, const CropTransform& M, const CameraIntrinsics& K_r,
                   const CameraIntrinsics& K_t) {
  return align_intrinsics(M.apply_inverse(u_crop), K_t, K_r);
}

Vec2 target_to_crop(const Vec2& u, const CropTransform& M, const CameraIntrinsics& K_r,
                    const CameraIntrinsics& K_t) {
  return M.apply(align_intrinsics(u, K_r, K_t));
}

}  // namespace pfa
