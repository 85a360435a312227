#pragma once

#include <cstdint>

#include "pfa/geometry.hpp"
#include "pfa/mesh.hpp"

namespace pfa {

/// Perturbs `pose` the way a rough initialization network would.
///
/// The rotation is composed with a random rotation about the object centroid
/// (uniform axis, angle uniform in [0, max_rot_deg]); the centroid projection
/// is then displaced by a vector drawn uniformly from the disk of radius
/// max_reproj_px and the translation is back-projected at the centroid depth,
/// so the centroid reprojection moves by exactly that vector.
RigidPose pose_jitter(const RigidPose& pose, const CameraIntrinsics& K, const MeshModel& mesh,
                      double max_rot_deg, double max_reproj_px, std::uint64_t seed);

}  // namespace pfa
