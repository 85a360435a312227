#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pfa/crop.hpp"
#include "pfa/exemplar.hpp"
#include "pfa/raster.hpp"

namespace pfa {

inline constexpr std::uint32_t kFlowFileVersion = 1;

/// Dense displacement field from exemplar-crop pixels to target-crop pixels.
/// Invalid pixels carry zero displacement.
class FlowField {
 public:
  FlowField() = default;
  FlowField(int width, int height);

  int width() const { return width_; }
  int height() const { return height_; }
  const PixelMask& valid_mask() const { return valid_; }
  bool valid(int x, int y) const { return valid_.test(x, y); }
  std::size_t valid_count() const { return valid_.count(); }

  Vec2 at(int x, int y) const {
    const std::size_t i = index(x, y);
    return {du_[i], dv_[i]};
  }
  /// Stores the displacement (rounded to single precision) and marks it valid.
  /// Throws kInvalidInput for non-finite values.
  void set(int x, int y, const Vec2& d);
  void invalidate(int x, int y);

  bool operator==(const FlowField&) const = default;

 private:
  std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width_ + x; }

  int width_ = 0;
  int height_ = 0;
  std::vector<float> du_;
  std::vector<float> dv_;
  PixelMask valid_;
};

/// Degradation model standing in for flow-network error.
struct FlowNoiseSpec {
  double gaussian_sigma = 0.0;  // pixels
  double outlier_ratio = 0.0;   // fraction in [0, 1]
  double outlier_range = 0.0;   // pixels
  double dropout_ratio = 0.0;   // fraction in [0, 1]
  std::uint64_t seed = 0;

  /// Throws kInvalidInput when a ratio leaves [0, 1] or sigma/range < 0.
  void validate() const;
  bool is_noop() const {
    return gaussian_sigma == 0.0 && outlier_ratio == 0.0 && dropout_ratio == 0.0;
  }

  /// sigma 1 px, 10% outliers within +-32 px, 20% dropout.
  static FlowNoiseSpec paper_gap(std::uint64_t seed = 0);
};

/// Model point seen at crop pixel (x, y) of an exemplar: bilinear lookup of
/// the coordinate map at M_r^-1 (x, y), or nullopt outside the exemplar mask.
std::optional<Vec3> exemplar_crop_point(const Exemplar& exemplar, const CropTransform& M_r, int x, int y);

/// Target scene prepared for oracle queries (rendered once, reused for every
/// exemplar).
class TargetView {
 public:
  explicit TargetView(SceneSpec scene);

  const SceneSpec& scene() const { return scene_; }
  const SceneRender& render() const { return render_; }

 private:
  SceneSpec scene_;
  SceneRender render_;
};

/// Occlusion tolerance for the oracle's depth test.
double occlusion_epsilon(double z_bar);

/// Ground-truth flow from an exemplar crop to the target crop. A pixel is
/// valid when its model point p is inside the exemplar crop mask, lands on a
/// target pixel where the object is rendered, is not hidden (scene depth is
/// not smaller than depth(p) - eps), faces the target camera (interpolated
/// vertex normal at that pixel), and maps inside the target crop.
/// Throws kMeshHashMismatch when the exemplar and scene meshes differ.
FlowField oracle_flow(const Exemplar& exemplar, const CropTransform& M_r, const TargetView& target,
                      const RigidPose& target_gt, const CropTransform& M_t);
FlowField oracle_flow(const Exemplar& exemplar, const CropTransform& M_r, const SceneSpec& scene,
                      const RigidPose& target_gt, const CropTransform& M_t);

/// Applies dropout, outlier replacement and Gaussian noise to valid vectors.
/// Deterministic for a given spec.seed; a no-op spec returns the input.
FlowField degrade_flow(const FlowField& flow, const FlowNoiseSpec& spec);

/// Flow file: "PFAF", u32 version, u32 width, u32 height, bit-packed valid
/// mask, then f32 du, f32 dv per valid pixel in row-major order.
void save_flow(const FlowField& flow, const std::filesystem::path& path);
FlowField load_flow(const std::filesystem::path& path);
std::vector<std::uint8_t> encode_flow(const FlowField& flow);
FlowField decode_flow(std::span<const std::uint8_t> bytes);

/// Source of exemplar-to-target flow fields for the refinement pipeline.
class FlowProvider {
 public:
  virtual ~FlowProvider() = default;
  virtual FlowField flow(const Exemplar& exemplar, const CropTransform& M_r,
                         const CropTransform& M_t) const = 0;
};

/// Oracle flow on a synthetic scene, optionally degraded. The noise seed of
/// each exemplar is mix_seed(noise.seed, exemplar.id).
class OracleFlowProvider : public FlowProvider {
 public:
  OracleFlowProvider(SceneSpec scene, FlowNoiseSpec noise = {});
  FlowField flow(const Exemplar& exemplar, const CropTransform& M_r, const CropTransform& M_t) const override;

 private:
  TargetView target_;
  FlowNoiseSpec noise_;
};

/// Reads externally computed flow from <directory>/exemplar_<id>.pfaf.
class FileFlowProvider : public FlowProvider {
 public:
  explicit FileFlowProvider(std::filesystem::path directory);
  FlowField flow(const Exemplar& exemplar, const CropTransform& M_r, const CropTransform& M_t) const override;

  static std::filesystem::path file_for(const std::filesystem::path& directory, std::uint32_t exemplar_id);

 private:
  std::filesystem::path directory_;
};

}  // namespace pfa
