#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "pfa/error.hpp"
#include "pfa/pnp.hpp"

namespace pfa {

struct RansacConfig {
  double inlier_threshold = 2.0;  // pixels
  int max_iterations = 1000;
  double confidence = 0.999;
  int min_inliers = 12;
  std::uint64_t seed = 0;

  /// Throws kConfiguration unless threshold > 0, 0 < confidence < 1,
  /// max_iterations >= 1 and min_inliers >= 4.
  void validate() const;
};

struct PoseEstimate {
  RigidPose pose;
  std::size_t inlier_count = 0;
  std::vector<bool> inlier_ids;  // one flag per input correspondence
  double mean_reproj_err = 0.0;  // over inliers, pixels
  int iterations = 0;            // hypotheses drawn
};

/// No hypothesis reached min_inliers. Carries the best attempt when one exists.
class RobustFailure : public Error {
 public:
  RobustFailure(const std::string& message, std::optional<PoseEstimate> best)
      : Error(ErrorCode::kRobustFailure, message), best_(std::move(best)) {}

  const std::optional<PoseEstimate>& best_attempt() const { return best_; }

 private:
  std::optional<PoseEstimate> best_;
};

/// Inlier flags and mean inlier error of a pose under a pixel threshold.
/// Points behind the camera are outliers.
PoseEstimate score_pose(const RigidPose& pose, std::span<const Correspondence> c, const CameraIntrinsics& K,
                        double threshold);

/// Four-point sample degeneracy: any near-collinear triple or a near-flat
/// tetrahedron, relative to the sample's scale.
bool is_degenerate_sample(const std::array<Vec3, 4>& points, double tolerance = kDegenerateSpread);

/// Adaptive iteration bound log(1 - confidence) / log(1 - w^4).
int ransac_iteration_bound(double inlier_ratio, double confidence, int max_iterations);

/// Hypothesize-and-verify PnP over minimal 4-point samples, followed by
/// solve_pnp on the best inlier set. Deterministic for a given cfg.seed.
/// Throws RobustFailure when no hypothesis reaches cfg.min_inliers.
PoseEstimate ransac_pnp(std::span<const Correspondence> c, const CameraIntrinsics& K, const RansacConfig& cfg = {});

}  // namespace pfa
