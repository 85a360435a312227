#include "pfa/jitter.hpp"

#include <cmath>

#include "pfa/error.hpp"
#include "pfa/random.hpp"

namespace pfa {

RigidPose pose_jitter(const RigidPose& pose, const CameraIntrinsics& K, const MeshModel& mesh,
                      double max_rot_deg, double max_reproj_px, std::uint64_t seed) {
  if (!(max_rot_deg >= 0.0) || !(max_reproj_px >= 0.0)) {
    throw Error(ErrorCode::kInvalidInput, "jitter bounds must be non-negative");
  }
  Rng rng(seed);
  Vec3 axis(rng.normal(), rng.normal(), rng.normal());
  while (axis.norm() < 1e-12) axis = Vec3(rng.normal(), rng.normal(), rng.normal());
  const double angle = deg_to_rad(max_rot_deg) * rng.uniform();
  const double radius = max_reproj_px * std::sqrt(rng.uniform());
  const double phi = 2.0 * kPi * rng.uniform();

  const Vec3 centroid = pose.transform(mesh.centroid());
  RigidPose out = pose;
  if (angle > 0.0) {
    const Mat3 delta = rotation_about(axis, angle);
    out.rotation = delta * pose.rotation;
    out.translation = delta * (pose.translation - centroid) + centroid;
  }
  if (radius > 0.0) {
    const Vec2 u = project_camera(K, centroid) + radius * Vec2(std::cos(phi), std::sin(phi));
    out.translation += back_project(K, u, centroid.z()) - centroid;
  }
  return out;
}

}  // namespace pfa
