#include "pfa/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "pfa/error.hpp"

namespace pfa {

namespace {

// Static 3D k-d tree over a point array; nodes are stored implicitly in the
// permuted index array (median split, recursive halves).
class KdTree {
 public:
  explicit KdTree(const std::vector<Vec3>& points) : points_(points), index_(points.size()) {
    std::iota(index_.begin(), index_.end(), 0);
    axis_.resize(points.size());
    build(0, index_.size(), 0);
  }

  double nearest_distance(const Vec3& q) const {
    double best = std::numeric_limits<double>::infinity();
    search(0, index_.size(), q, best);
    return std::sqrt(best);
  }

 private:
  void build(std::size_t lo, std::size_t hi, int depth) {
    if (hi - lo <= 1) return;
    // Split along the axis of largest extent.
    Vec3 mn = points_[index_[lo]], mx = mn;
    for (std::size_t i = lo; i < hi; ++i) {
      mn = mn.cwiseMin(points_[index_[i]]);
      mx = mx.cwiseMax(points_[index_[i]]);
    }
    int axis = 0;
    (mx - mn).maxCoeff(&axis);
    const std::size_t mid = lo + (hi - lo) / 2;
    std::nth_element(index_.begin() + lo, index_.begin() + mid, index_.begin() + hi,
                     [&](std::size_t a, std::size_t b) { return points_[a][axis] < points_[b][axis]; });
    axis_[mid] = static_cast<std::uint8_t>(axis);
    build(lo, mid, depth + 1);
    build(mid + 1, hi, depth + 1);
  }

  void search(std::size_t lo, std::size_t hi, const Vec3& q, double& best) const {
    if (lo >= hi) return;
    const std::size_t mid = lo + (hi - lo) / 2;
    const Vec3& p = points_[index_[mid]];
    best = std::min(best, (p - q).squaredNorm());
    if (hi - lo == 1) return;
    const int axis = axis_[mid];
    const double diff = q[axis] - p[axis];
    const bool left_first = diff < 0.0;
    if (left_first) {
      search(lo, mid, q, best);
      if (diff * diff < best) search(mid + 1, hi, q, best);
    } else {
      search(mid + 1, hi, q, best);
      if (diff * diff < best) search(lo, mid, q, best);
    }
  }

  const std::vector<Vec3>& points_;
  std::vector<std::size_t> index_;
  std::vector<std::uint8_t> axis_;
};

void require_errors(std::span<const double> errors) {
  if (errors.empty()) throw Error(ErrorCode::kInvalidInput, "metric over an empty error list is undefined");
}

}  // namespace

double add_error(const RigidPose& gt, const RigidPose& pred, const MeshModel& mesh) {
  double sum = 0.0;
  for (const Vec3& p : mesh.vertices()) {
    sum += (gt.transform(p) - pred.transform(p)).norm();
  }
  return sum / static_cast<double>(mesh.vertices().size());
}

double add_s_error(const RigidPose& gt, const RigidPose& pred, const MeshModel& mesh,
                   NearestNeighborSearch search) {
  const auto& vertices = mesh.vertices();
  if (search == NearestNeighborSearch::kAuto) {
    search = vertices.size() <= kBruteForceVertexLimit ? NearestNeighborSearch::kBruteForce
                                                        : NearestNeighborSearch::kKdTree;
  }
  double sum = 0.0;
  if (search == NearestNeighborSearch::kBruteForce) {
    std::vector<Vec3> pred_points(vertices.size());
    for (std::size_t j = 0; j < vertices.size(); ++j) pred_points[j] = pred.transform(vertices[j]);
    for (const Vec3& p : vertices) {
      const Vec3 x = gt.transform(p);
      double best = std::numeric_limits<double>::infinity();
      for (const Vec3& y : pred_points) best = std::min(best, (x - y).squaredNorm());
      sum += std::sqrt(best);
    }
  } else {
    // Distances are rigid-invariant, so query in the model frame of `pred`.
    const KdTree tree(vertices);
    const RigidPose rel = pred.inverse() * gt;
    for (const Vec3& p : vertices) sum += tree.nearest_distance(rel.transform(p));
  }
  return sum / static_cast<double>(vertices.size());
}

PoseErrorReport evaluate_pose(const RigidPose& gt, const RigidPose& pred, const MeshModel& mesh) {
  PoseErrorReport r;
  r.add = add_error(gt, pred, mesh);
  r.add_s = add_s_error(gt, pred, mesh);
  r.rotation_err = geodesic_distance(gt.rotation, pred.rotation);
  r.translation_err = (gt.translation - pred.translation).norm();
  return r;
}

double accuracy_threshold(std::span<const double> errors, double diameter, double fraction) {
  require_errors(errors);
  if (!(fraction > 0.0)) throw Error(ErrorCode::kInvalidInput, "accuracy fraction must be positive");
  const double limit = fraction * diameter;
  const auto hits = std::count_if(errors.begin(), errors.end(), [limit](double e) { return e < limit; });
  return static_cast<double>(hits) / static_cast<double>(errors.size());
}

double accuracy_threshold(std::span<const double> errors, const MeshModel& mesh, double fraction) {
  return accuracy_threshold(errors, mesh.diameter(), fraction);
}

double auc_metric(std::span<const double> errors, double max_threshold) {
  require_errors(errors);
  if (!(max_threshold > 0.0)) throw Error(ErrorCode::kInvalidInput, "AUC threshold must be positive");
  double sum = 0.0;
  for (double e : errors) {
    const double clipped = std::isnan(e) ? max_threshold : std::clamp(e, 0.0, max_threshold);
    sum += 1.0 - clipped / max_threshold;
  }
  return sum / static_cast<double>(errors.size());
}

std::vector<std::pair<double, double>> accuracy_curve(std::span<const double> errors,
                                                      double max_threshold, int samples) {
  require_errors(errors);
  if (samples < 2) throw Error(ErrorCode::kInvalidInput, "accuracy curve needs at least 2 samples");
  std::vector<double> sorted(errors.begin(), errors.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::pair<double, double>> curve;
  curve.reserve(samples);
  for (int i = 0; i < samples; ++i) {
    const double tau = max_threshold * i / (samples - 1);
    const auto below = std::lower_bound(sorted.begin(), sorted.end(), tau) - sorted.begin();
    curve.emplace_back(tau, static_cast<double>(below) / static_cast<double>(sorted.size()));
  }
  return curve;
}

}  // namespace pfa
