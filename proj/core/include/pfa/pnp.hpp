#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "pfa/geometry.hpp"

namespace pfa {

/// 3D model point paired with its observed pixel in the target image.
struct Correspondence {
  Vec3 p = Vec3::Zero();
  Vec2 u = Vec2::Zero();
  std::uint32_t exemplar_id = 0;

  bool operator==(const Correspondence&) const = default;
};

using Vec6 = Eigen::Matrix<double, 6, 1>;
using Jacobian26 = Eigen::Matrix<double, 2, 6>;

/// Pose increment: rotation exp(w) composed on the left, translation added.
/// delta = (w, v).
RigidPose apply_increment(const RigidPose& pose, const Vec6& delta);

/// project(K, pose, p) - u. Throws kBehindCamera for points at z <= 0.
Vec2 reprojection_residual(const RigidPose& pose, const Correspondence& c, const CameraIntrinsics& K);

/// Derivative of the residual with respect to the increment of apply_increment
/// at delta = 0.
Jacobian26 reprojection_jacobian(const RigidPose& pose, const Vec3& p, const CameraIntrinsics& K);

/// Sum of squared residuals; +inf when any point is at or behind the camera.
double reprojection_cost(const RigidPose& pose, std::span<const Correspondence> c, const CameraIntrinsics& K);

/// Ratios sqrt(lambda_2 / lambda_1) and sqrt(lambda_3 / lambda_1) of the
/// point covariance eigenvalues (descending): how far the set is from a line
/// and from a plane.
struct SpreadRatios {
  double line = 0.0;
  double plane = 0.0;
};
SpreadRatios spread_ratios(std::span<const Correspondence> c);

inline constexpr double kDegenerateSpread = 1e-6;

/// Closed-form EPnP estimate. Throws kSolver for fewer than 4 points or a
/// collinear or coplanar point set.
RigidPose epnp(std::span<const Correspondence> c, const CameraIntrinsics& K);

struct GaussNewtonOptions {
  int max_iterations = 20;
  double min_step = 1e-10;
};

struct GaussNewtonResult {
  RigidPose pose;
  /// Cost at the start and after each accepted step; non-increasing.
  std::vector<double> cost_history;
  int iterations = 0;
  bool converged = false;
};

/// Damped Gauss-Newton minimization of the reprojection cost.
GaussNewtonResult refine_gauss_newton(const RigidPose& initial, std::span<const Correspondence> c,
                                      const CameraIntrinsics& K, const GaussNewtonOptions& options = {});

/// EPnP followed by Gauss-Newton polish.
RigidPose solve_pnp(std::span<const Correspondence> c, const CameraIntrinsics& K);

}  // namespace pfa
