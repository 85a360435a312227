#pragma once

#include "pfa/geometry.hpp"
#include "pfa/mesh.hpp"

namespace pfa {

inline constexpr double kDefaultCropPad = 1.2;

/// Axis-aligned 2D similarity (uniform scale s > 0 plus translation) mapping
/// image pixels to a square crop frame of side out_size.
class CropTransform {
 public:
  CropTransform() = default;
  /// Throws kInvalidInput unless `matrix` has the form [s 0 tx; 0 s ty; 0 0 1]
  /// with s > 0, and out_size > 0.
  CropTransform(const Mat3& matrix, int out_size);

  static CropTransform identity(int out_size) { return CropTransform(Mat3::Identity(), out_size); }

  const Mat3& matrix() const { return matrix_; }
  Mat3 inverse_matrix() const;
  double scale() const { return matrix_(0, 0); }
  int out_size() const { return out_size_; }

  Vec2 apply(const Vec2& u) const { return scale() * u + matrix_.block<2, 1>(0, 2); }
  Vec2 apply_inverse(const Vec2& u) const { return (u - matrix_.block<2, 1>(0, 2)) / scale(); }

  /// Whether a crop-frame position lies in [0, out_size)^2.
  bool contains(const Vec2& u) const {
    return u.x() >= 0.0 && u.y() >= 0.0 && u.x() < out_size_ && u.y() < out_size_;
  }

 private:
  Mat3 matrix_ = Mat3::Identity();
  int out_size_ = 1;
};

/// Maps the square of side pad * max(bbox width, bbox height), centered on the
/// bounding box of the projected mesh vertices, onto [0, out_size)^2.
/// Throws kBehindCamera if a vertex is behind the camera and kDegenerate if
/// the projection collapses to a point.
CropTransform compute_crop(const RigidPose& pose, const CameraIntrinsics& K, const MeshModel& mesh,
                           int out_size, double pad = kDefaultCropPad);

/// Applies K_r * K_t^-1 to a target-camera pixel.
Vec2 align_intrinsics(const Vec2& u, const CameraIntrinsics& K_r, const CameraIntrinsics& K_t);

/// Maps a crop-frame pixel back to the original target image:
/// (K_r K_t^-1)^-1 * M^-1 * u_crop.
Vec2 lift_to_image(const Vec2& u_crop, const CropTransform& M, const CameraIntrinsics& K_r,
                   const CameraIntrinsics& K_t);

/// Forward map of a target image pixel into the crop frame: M * K_r * K_t^-1 * u.
Vec2 target_to_crop(const Vec2& u, const CropTransform& M, const CameraIntrinsics& K_r,
                    const CameraIntrinsics& K_t);

}  // namespace pfa
