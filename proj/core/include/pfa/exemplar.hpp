#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "pfa/geometry.hpp"
#include "pfa/mesh.hpp"
#include "pfa/raster.hpp"

namespace pfa {

/// Exemplar render resolution (square) and default crop size.
inline constexpr int kExemplarSize = 256;

inline constexpr std::uint32_t kExemplarFileVersion = 1;

/// One pre-rendered view at pose (R, (0, 0, z_bar)).
struct Exemplar {
  std::uint32_t id = 0;
  RigidPose pose;
  CameraIntrinsics K_r;
  CoordinateMap coord_map;
  MeshHash mesh_hash{};

  bool operator==(const Exemplar&) const = default;
};

struct ExemplarSet {
  std::string object_name;
  MeshHash mesh_hash{};
  double z_bar = 1.0;
  CameraIntrinsics K_r;
  std::vector<Exemplar> exemplars;

  std::size_t size() const { return exemplars.size(); }
  /// Throws kMeshHashMismatch when `mesh` is not the mesh the set was built from.
  void require_mesh(const MeshModel& mesh) const;

  bool operator==(const ExemplarSet&) const = default;
};

struct ExemplarMatch {
  std::uint32_t id = 0;
  double distance_deg = 0.0;
};

/// Default exemplar camera: 256x256, principal point at the image center and a
/// focal length that makes the bounding sphere span `coverage` of the width.
CameraIntrinsics default_exemplar_intrinsics(const MeshModel& mesh, double z_bar, double coverage = 0.4);

/// Throws kConfiguration unless the mesh bounding sphere at (0, 0, z_bar) lies
/// in front of the camera and projects inside the K_r image for every rotation.
void check_exemplar_frustum(const MeshModel& mesh, double z_bar, const CameraIntrinsics& K_r);

/// Renders n exemplars with rotations sample_rotations(n, seed). Output is
/// ordered by id and independent of `threads`.
ExemplarSet generate_exemplar_set(const MeshModel& mesh, std::size_t n, double z_bar,
                                  const CameraIntrinsics& K_r, std::uint64_t seed,
                                  const std::string& object_name = "object", unsigned threads = 1);

/// Exemplar with a given id as generate_exemplar_set would produce it.
Exemplar render_exemplar(const MeshModel& mesh, std::uint32_t id, const Mat3& rotation, double z_bar,
                         const CameraIntrinsics& K_r);

/// Ascending geodesic rotation distance to `query`; ties go to the lower id.
/// Returns min(n, |set|) matches. Throws kConfiguration on an empty set and
/// kInvalidInput when n == 0.
std::vector<ExemplarMatch> query_nearest(const ExemplarSet& set, const RigidPose& query, std::size_t n);
std::vector<ExemplarMatch> query_nearest(std::span<const Mat3> rotations, const Mat3& query, std::size_t n);

/// Mean nearest-exemplar distance (degrees) over n_queries rotations drawn
/// with sample_rotations(n_queries, seed).
double mean_query_distance(const ExemplarSet& set, std::size_t n_queries, std::uint64_t seed);
double mean_query_distance(std::span<const Mat3> rotations, std::size_t n_queries, std::uint64_t seed);

/// Little-endian binary exemplar file ("PFAX", version 1).
void save_set(const ExemplarSet& set, const std::filesystem::path& path);
ExemplarSet load_set(const std::filesystem::path& path);
std::vector<std::uint8_t> encode_set(const ExemplarSet& set);
ExemplarSet decode_set(std::span<const std::uint8_t> bytes);

/// Streams exemplars to disk one at a time; the resulting file is identical
/// to save_set on the equivalent in-memory set.
class ExemplarSetWriter {
 public:
  ExemplarSetWriter(const std::filesystem::path& path, const std::string& object_name,
                    const MeshHash& mesh_hash, double z_bar, const CameraIntrinsics& K_r,
                    std::uint32_t count);
  void append(const Exemplar& exemplar);
  /// Throws kIo if fewer exemplars than announced were appended.
  void close();

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  std::uint32_t expected_ = 0;
  std::uint32_t written_ = 0;
  double z_bar_ = 0.0;
  CameraIntrinsics K_r_;
};

}  // namespace pfa
