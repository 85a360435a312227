#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "pfa/geometry.hpp"
#include "pfa/mesh.hpp"

namespace pfa {

using Vec3f = Eigen::Vector3f;

/// Bit-packed row-major boolean image.
class PixelMask {
 public:
  PixelMask() = default;
  PixelMask(int width, int height);

  int width() const { return width_; }
  int height() const { return height_; }
  bool in_bounds(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }

  bool test(int x, int y) const {
    return (words_[word_index(x, y)] >> (x & 63)) & 1U;
  }
  void set(int x, int y, bool value = true);

  std::size_t count() const;
  /// Number of set pixels in row y strictly left of x.
  std::size_t count_in_row_before(int x, int y) const;
  std::size_t count_in_row(int y) const { return count_in_row_before(width_, y); }

  /// Set pixels in row-major order as (x, y).
  template <typename Fn>
  void for_each_set(Fn&& fn) const {
    for (int y = 0; y < height_; ++y) {
      for (int w = 0; w < words_per_row_; ++w) {
        std::uint64_t bits = words_[static_cast<std::size_t>(y) * words_per_row_ + w];
        while (bits) {
          const int bit = __builtin_ctzll(bits);
          fn(w * 64 + bit, y);
          bits &= bits - 1;
        }
      }
    }
  }

  bool operator==(const PixelMask&) const = default;

 private:
  std::size_t word_index(int x, int y) const {
    return static_cast<std::size_t>(y) * words_per_row_ + (x >> 6);
  }

  int width_ = 0;
  int height_ = 0;
  int words_per_row_ = 0;
  std::vector<std::uint64_t> words_;
};

/// Per-pixel model-space surface points of a rendered view.
///
/// Only masked pixels carry data; points, depths and shades are stored packed
/// in row-major mask order. Depth is the camera-frame z in meters and is
/// finite and positive exactly on masked pixels.
class CoordinateMap {
 public:
  CoordinateMap() = default;
  CoordinateMap(int width, int height) : mask_(width, height), row_start_(height + 1, 0) {}
  /// Throws kInvalidInput when array sizes disagree with the mask count or a
  /// depth is not finite and positive.
  CoordinateMap(PixelMask mask, std::vector<Vec3f> points, std::vector<double> depth,
                std::vector<float> shade);

  int width() const { return mask_.width(); }
  int height() const { return mask_.height(); }
  const PixelMask& mask() const { return mask_; }
  std::size_t size() const { return points_.size(); }

  bool valid(int x, int y) const { return mask_.in_bounds(x, y) && mask_.test(x, y); }
  /// Packed index of a masked pixel.
  std::optional<std::size_t> index(int x, int y) const;

  std::span<const Vec3f> points() const { return points_; }
  std::span<const double> depths() const { return depth_; }
  std::span<const float> shades() const { return shade_; }

  /// Depth at a pixel; +infinity when unmasked or out of bounds.
  double depth_at(int x, int y) const;

  /// Bilinear interpolation of model points at a continuous pixel position.
  /// Every neighbor with non-zero weight must be masked, otherwise nullopt.
  std::optional<Vec3> sample(const Vec2& u) const;

  /// Copy whose depths are recomputed as the camera-frame z of the stored
  /// (single precision) points under `pose`.
  CoordinateMap with_depth_from(const RigidPose& pose) const;

  bool operator==(const CoordinateMap&) const = default;

 private:
  PixelMask mask_;
  std::vector<std::size_t> row_start_;
  std::vector<Vec3f> points_;
  std::vector<double> depth_;
  std::vector<float> shade_;
};

/// Dense rasterization result before packing: per-pixel nearest triangle and
/// its perspective-correct barycentric coordinates.
struct RasterBuffers {
  int width = 0;
  int height = 0;
  std::vector<double> depth;          // +inf where no triangle covers the pixel
  std::vector<std::int32_t> triangle; // -1 where empty
  std::vector<Vec3> barycentric;

  std::size_t at(int x, int y) const { return static_cast<std::size_t>(y) * width + x; }
};

/// Near clipping plane (meters, camera frame).
inline constexpr double kNearPlane = 1e-5;
/// Depth differences below this are ties, resolved by lower triangle index.
inline constexpr double kDepthTie = 1e-9;

/// Z-buffered rasterization with a top-left fill rule, sampling at integer
/// pixel centers. Triangles crossing the near plane are clipped.
RasterBuffers rasterize_buffers(const MeshModel& mesh, const RigidPose& pose,
                                const CameraIntrinsics& K, int width, int height);

/// Coordinate map of `mesh` under `pose`, with Lambertian shade for a light
/// pointing from the camera center towards the object center.
CoordinateMap rasterize(const MeshModel& mesh, const RigidPose& pose, const CameraIntrinsics& K,
                        int width, int height);
inline CoordinateMap rasterize(const MeshModel& mesh, const RigidPose& pose,
                               const CameraIntrinsics& K) {
  return rasterize(mesh, pose, K, K.width, K.height);
}

struct Occluder {
  MeshModel mesh;
  RigidPose pose;
};

/// Synthetic target scene: one object plus occluding meshes.
struct SceneSpec {
  MeshModel object;
  RigidPose object_pose;
  std::vector<Occluder> occluders;
  CameraIntrinsics K;
  std::uint64_t background_seed = 0;
};

struct SceneRender {
  /// The target object rendered alone.
  CoordinateMap object;
  /// Object pixels not hidden by any occluder.
  PixelMask visible;
  /// Joint z-buffer over the object and all occluders (+inf where empty).
  std::vector<double> scene_depth;
  /// Camera-frame interpolated vertex normals of the object, packed like
  /// `object.points()`.
  std::vector<Vec3f> object_normals;

  double scene_depth_at(int x, int y) const;
};

SceneRender rasterize_scene(const SceneSpec& scene, int width, int height);
inline SceneRender rasterize_scene(const SceneSpec& scene) {
  return rasterize_scene(scene, scene.K.width, scene.K.height);
}

}  // namespace pfa
