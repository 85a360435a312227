#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pfa/crop.hpp"
#include "pfa/exemplar.hpp"
#include "pfa/flow.hpp"
#include "pfa/ransac.hpp"

namespace pfa {

/// Lifted pixels farther than this fraction of the image size outside the
/// target image are dropped.
inline constexpr double kLiftMargin = 0.2;
inline constexpr std::size_t kMaxCorrespondences = 20000;

/// One correspondence per valid flow pixel, in row-major crop order: the
/// exemplar model point at the crop pixel paired with the flowed pixel
/// mapped back to the target image. Pixels whose exemplar point is missing or
/// whose lifted pixel leaves the margin are dropped.
/// Throws kConfiguration when the flow size differs from either crop.
std::vector<Correspondence> lift_correspondences(const Exemplar& exemplar, const FlowField& flow,
                                                 const CropTransform& M_r, const CropTransform& M_t,
                                                 const CameraIntrinsics& K_t);

/// Concatenation ordered by exemplar id, keeping each set's internal order.
std::vector<Correspondence> aggregate(std::span<const std::vector<Correspondence>> sets);

/// Keeps at most `cap` correspondences, taking an evenly strided share of
/// each exemplar proportional to its count. Input order is preserved.
std::vector<Correspondence> subsample(std::span<const Correspondence> c, std::size_t cap);

struct RefineConfig {
  std::size_t n_exemplars = 4;
  int crop_size = kExemplarSize;
  double crop_pad = kDefaultCropPad;
  std::size_t max_correspondences = kMaxCorrespondences;
  RansacConfig ransac;
  unsigned threads = 1;

  void validate() const;
};

struct ExemplarDiagnostics {
  std::uint32_t id = 0;
  double distance_deg = 0.0;
  std::size_t correspondences = 0;  // after lifting, before subsampling
  std::size_t inliers = 0;

  bool operator==(const ExemplarDiagnostics&) const = default;
};

struct RefineResult {
  PoseEstimate estimate;
  std::vector<ExemplarDiagnostics> exemplars;  // in retrieval order
};

/// RANSAC failure during refinement, with the per-exemplar diagnostics.
class RefineFailure : public RobustFailure {
 public:
  RefineFailure(const RobustFailure& cause, std::vector<ExemplarDiagnostics> exemplars)
      : RobustFailure(cause), exemplars_(std::move(exemplars)) {}

  const std::vector<ExemplarDiagnostics>& exemplars() const { return exemplars_; }

 private:
  std::vector<ExemplarDiagnostics> exemplars_;
};

/// One-shot refinement: retrieve the exemplars nearest to the initial
/// rotation, crop, obtain flow, lift, aggregate, subsample and run RANSAC-PnP.
/// Throws kMeshHashMismatch when the set was built from another mesh and
/// RefineFailure when RANSAC fails.
RefineResult refine_pose(const RigidPose& initial, const ExemplarSet& set, const MeshModel& mesh,
                         const CameraIntrinsics& K_t, const FlowProvider& flow, const RefineConfig& cfg = {});

}  // namespace pfa
