#include "pfa/ransac.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "pfa/random.hpp"

namespace pfa {

void RansacConfig::validate() const {
  if (!(inlier_threshold > 0.0)) throw Error(ErrorCode::kConfiguration, "RANSAC inlier threshold must be > 0");
  if (!(confidence > 0.0 && confidence < 1.0)) {
    throw Error(ErrorCode::kConfiguration, "RANSAC confidence must be in (0, 1)");
  }
  if (max_iterations < 1) throw Error(ErrorCode::kConfiguration, "RANSAC max_iterations must be >= 1");
  if (min_inliers < 4) throw Error(ErrorCode::kConfiguration, "RANSAC min_inliers must be >= 4");
}

PoseEstimate score_pose(const RigidPose& pose, std::span<const Correspondence> c, const CameraIntrinsics& K,
                        double threshold) {
  PoseEstimate est;
  est.pose = pose;
  est.inlier_ids.assign(c.size(), false);
  double sum = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const Vec3 cam = pose.transform(c[i].p);
    if (!(cam.z() > 0.0)) continue;
    const double err = (project_camera(K, cam) - c[i].u).norm();
    if (err < threshold) {
      est.inlier_ids[i] = true;
      ++est.inlier_count;
      sum += err;
    }
  }
  est.mean_reproj_err = est.inlier_count > 0 ? sum / static_cast<double>(est.inlier_count) : 0.0;
  return est;
}

bool is_degenerate_sample(const std::array<Vec3, 4>& p, double tolerance) {
  double scale = 0.0;
  for (int i = 0; i < 4; ++i) {
    for (int j = i + 1; j < 4; ++j) scale = std::max(scale, (p[i] - p[j]).norm());
  }
  if (!(scale > 0.0)) return true;
  static constexpr int kTriples[4][3] = {{0, 1, 2}, {0, 1, 3}, {0, 2, 3}, {1, 2, 3}};
  for (const auto& t : kTriples) {
    const double area2 = (p[t[1]] - p[t[0]]).cross(p[t[2]] - p[t[0]]).norm();
    if (area2 < tolerance * scale * scale) return true;
  }
  const double volume6 = std::abs((p[1] - p[0]).dot((p[2] - p[0]).cross(p[3] - p[0])));
  return volume6 < tolerance * scale * scale * scale;
}

int ransac_iteration_bound(double inlier_ratio, double confidence, int max_iterations) {
  const double w4 = std::pow(std::clamp(inlier_ratio, 0.0, 1.0), 4);
  if (w4 >= 1.0) return std::min(1, max_iterations);
  if (w4 <= 0.0) return max_iterations;
  const double bound = std::ceil(std::log(1.0 - confidence) / std::log(1.0 - w4));
  if (!(bound < static_cast<double>(max_iterations))) return max_iterations;
  return std::max(1, static_cast<int>(bound));
}

PoseEstimate ransac_pnp(std::span<const Correspondence> c, const CameraIntrinsics& K, const RansacConfig& cfg) {
  cfg.validate();
  const std::size_t n = c.size();
  if (n < static_cast<std::size_t>(cfg.min_inliers)) {
    throw RobustFailure("only " + std::to_string(n) + " correspondences, fewer than min_inliers " +
                            std::to_string(cfg.min_inliers),
                        std::nullopt);
  }

  Rng rng(cfg.seed);
  std::optional<PoseEstimate> best;
  int needed = cfg.max_iterations;
  int drawn = 0;
  std::array<std::size_t, 4> idx{};
  std::array<Correspondence, 4> sample;
  while (drawn < needed) {
    ++drawn;
    for (int k = 0; k < 4; ++k) {
      bool fresh = false;
      while (!fresh) {
        idx[k] = static_cast<std::size_t>(rng.below(n));
        fresh = std::find(idx.begin(), idx.begin() + k, idx[k]) == idx.begin() + k;
      }
      sample[k] = c[idx[k]];
    }
    if (is_degenerate_sample({sample[0].p, sample[1].p, sample[2].p, sample[3].p})) continue;
    RigidPose hypothesis;
    try {
      hypothesis = solve_pnp(sample, K);
    } catch (const Error&) {
      continue;
    }
    PoseEstimate scored = score_pose(hypothesis, c, K, cfg.inlier_threshold);
    if (!best || scored.inlier_count > best->inlier_count) {
      best = std::move(scored);
      needed = ransac_iteration_bound(static_cast<double>(best->inlier_count) / static_cast<double>(n),
                                      cfg.confidence, cfg.max_iterations);
    }
  }

  if (!best || best->inlier_count < static_cast<std::size_t>(cfg.min_inliers)) {
    if (best) best->iterations = drawn;
    throw RobustFailure("no hypothesis reached " + std::to_string(cfg.min_inliers) + " inliers (best " +
                            std::to_string(best ? best->inlier_count : 0) + " of " + std::to_string(n) + ")",
                        best);
  }

  // Refit on the consensus set until it stops changing.
  PoseEstimate current = std::move(*best);
  for (int round = 0; round < 5; ++round) {
    std::vector<Correspondence> inliers;
    inliers.reserve(current.inlier_count);
    for (std::size_t i = 0; i < n; ++i) {
      if (current.inlier_ids[i]) inliers.push_back(c[i]);
    }
    PoseEstimate refit;
    try {
      refit = score_pose(solve_pnp(inliers, K), c, K, cfg.inlier_threshold);
    } catch (const Error&) {
      break;
    }
    if (refit.inlier_count < static_cast<std::size_t>(cfg.min_inliers)) break;
    const bool same = refit.inlier_ids == current.inlier_ids;
    current = std::move(refit);
    if (same) break;
  }
  current.iterations = drawn;
  return current;
}

}  // namespace pfa
