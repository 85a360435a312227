#pragma once

#include <span>
#include <utility>
#include <vector>

#include "pfa/geometry.hpp"
#include "pfa/mesh.hpp"

namespace pfa {

struct PoseErrorReport {
  double add = 0.0;             // meters
  double add_s = 0.0;           // meters
  double rotation_err = 0.0;    // degrees
  double translation_err = 0.0; // meters
};

/// Mean distance between corresponding vertices under the two poses.
double add_error(const RigidPose& gt, const RigidPose& pred, const MeshModel& mesh);

enum class NearestNeighborSearch {
  kAuto,        // brute force up to kBruteForceVertexLimit vertices, k-d tree above
  kBruteForce,
  kKdTree,
};

inline constexpr std::size_t kBruteForceVertexLimit = 5000;

/// Mean, over ground-truth-transformed vertices, of the distance to the
/// nearest prediction-transformed vertex.
double add_s_error(const RigidPose& gt, const RigidPose& pred, const MeshModel& mesh,
                   NearestNeighborSearch search = NearestNeighborSearch::kAuto);

PoseErrorReport evaluate_pose(const RigidPose& gt, const RigidPose& pred, const MeshModel& mesh);

/// Share of errors strictly below fraction * diameter. Non-finite errors
/// (failed estimates) count as misses. Throws kInvalidInput on an empty list
/// or a non-positive fraction.
double accuracy_threshold(std::span<const double> errors, double diameter, double fraction);
double accuracy_threshold(std::span<const double> errors, const MeshModel& mesh, double fraction);

/// Normalized area under the accuracy-vs-threshold curve on [0, max_threshold]
/// with errors clipped at max_threshold. Equals mean(1 - min(e, T) / T).
double auc_metric(std::span<const double> errors, double max_threshold = 0.10);

/// Accuracy-vs-threshold samples (threshold in meters, accuracy in [0, 1]) at
/// `samples` evenly spaced thresholds including 0 and max_threshold.
std::vector<std::pair<double, double>> accuracy_curve(std::span<const double> errors,
                                                      double max_threshold, int samples);

}  // namespace pfa
