#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "pfa/geometry.hpp"

namespace pfa {

using Triangle = std::array<std::uint32_t, 3>;
using MeshHash = std::array<std::uint8_t, 32>;

/// Immutable triangle mesh in the model frame (meters).
///
/// Construction validates the geometry (at least 4 finite vertices, indices in
/// range, no zero-area triangles) and caches the diameter, the outward vertex
/// normals and a SHA-256 digest of the canonical vertex/index data.
class MeshModel {
 public:
  MeshModel(std::vector<Vec3> vertices, std::vector<Triangle> triangles);

  const std::vector<Vec3>& vertices() const { return vertices_; }
  const std::vector<Triangle>& triangles() const { return triangles_; }
  /// Area-weighted vertex normals, oriented by the sign of the enclosed volume.
  const std::vector<Vec3>& vertex_normals() const { return normals_; }

  /// Maximum pairwise vertex distance.
  double diameter() const { return diameter_; }
  /// Maximum vertex distance from the model origin.
  double bounding_radius() const { return bounding_radius_; }
  Vec3 centroid() const { return centroid_; }
  const MeshHash& hash() const { return hash_; }

 private:
  std::vector<Vec3> vertices_;
  std::vector<Triangle> triangles_;
  std::vector<Vec3> normals_;
  double diameter_ = 0.0;
  double bounding_radius_ = 0.0;
  Vec3 centroid_ = Vec3::Zero();
  MeshHash hash_{};
};

std::string to_hex(const MeshHash& hash);

/// Axis-aligned box centered at the origin (8 vertices, 12 triangles).
MeshModel make_box(const Vec3& half_extents);

/// Asymmetric, star-shaped closed surface centered near the origin. With the
/// defaults it has 988 triangles and a diameter of roughly 2 * radius.
MeshModel make_lumpy_object(double radius, int rings = 20, int segments = 26);

}  // namespace pfa
