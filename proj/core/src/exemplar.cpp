#include "pfa/exemplar.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <sstream>

#include "binary_io.hpp"
#include "pfa/error.hpp"
#include "pfa/parallel.hpp"

namespace pfa {

namespace {

constexpr char kMagic[4] = {'P', 'F', 'A', 'X'};

bool better(const ExemplarMatch& a, const ExemplarMatch& b) {
  return a.distance_deg < b.distance_deg || (a.distance_deg == b.distance_deg && a.id < b.id);
}

void encode_header(detail::ByteWriter& w, const std::string& object_name, const MeshHash& mesh_hash,
                   double z_bar, const CameraIntrinsics& K_r, std::uint32_t count) {
  w.put_bytes({reinterpret_cast<const std::uint8_t*>(kMagic), 4});
  w.put<std::uint32_t>(kExemplarFileVersion);
  w.put<std::uint32_t>(count);
  w.put<double>(z_bar);
  for (double v : {K_r.fx, K_r.fy, K_r.cx, K_r.cy, static_cast<double>(K_r.width),
                   static_cast<double>(K_r.height)}) {
    w.put<double>(v);
  }
  w.put_bytes(mesh_hash);
  w.put_string(object_name);
}

void encode_exemplar(detail::ByteWriter& w, const Exemplar& e) {
  w.put<std::uint32_t>(e.id);
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) w.put<double>(e.pose.rotation(r, c));
  }
  w.put_mask(e.coord_map.mask());
  for (const Vec3f& p : e.coord_map.points()) {
    w.put<float>(p.x());
    w.put<float>(p.y());
    w.put<float>(p.z());
  }
  for (float s : e.coord_map.shades()) w.put<float>(s);
}

void check_exemplar(const Exemplar& e, double z_bar, const CameraIntrinsics& K_r) {
  if (e.pose.translation != Vec3(0.0, 0.0, z_bar) || e.K_r != K_r ||
      e.coord_map.width() != K_r.width || e.coord_map.height() != K_r.height) {
    throw Error(ErrorCode::kInvalidInput,
                "exemplar " + std::to_string(e.id) + " does not match the set's z_bar/K_r");
  }
}

}  // namespace

void ExemplarSet::require_mesh(const MeshModel& mesh) const {
  if (mesh.hash() != mesh_hash) {
    throw Error(ErrorCode::kMeshHashMismatch, "exemplar set '" + object_name + "' was built from mesh " +
                                                  to_hex(mesh_hash) + ", got mesh " + to_hex(mesh.hash()));
  }
}

CameraIntrinsics default_exemplar_intrinsics(const MeshModel& mesh, double z_bar, double coverage) {
  const double r = mesh.bounding_radius();
  if (!(z_bar > r)) {
    throw Error(ErrorCode::kConfiguration, "z_bar must exceed the mesh bounding radius");
  }
  // Bounding sphere half-extent on the image is f * r / sqrt(z^2 - r^2).
  const double f = 0.5 * coverage * kExemplarSize * std::sqrt(z_bar * z_bar - r * r) / r;
  const double c = 0.5 * (kExemplarSize - 1);
  return {f, f, c, c, kExemplarSize, kExemplarSize};
}

void check_exemplar_frustum(const MeshModel& mesh, double z_bar, const CameraIntrinsics& K_r) {
  K_r.validate();
  const double r = mesh.bounding_radius();
  std::ostringstream msg;
  if (!(z_bar - r > kNearPlane)) {
    msg << "mesh (bounding radius " << r << " m) is not in front of the camera at z_bar=" << z_bar;
    throw Error(ErrorCode::kConfiguration, msg.str());
  }
  const double tan_half = r / std::sqrt(z_bar * z_bar - r * r);
  const double ex = K_r.fx * tan_half;
  const double ey = K_r.fy * tan_half;
  if (K_r.cx - ex < -0.5 || K_r.cx + ex > K_r.width - 0.5 || K_r.cy - ey < -0.5 ||
      K_r.cy + ey > K_r.height - 0.5) {
    msg << "mesh at z_bar=" << z_bar << " can leave the " << K_r.width << "x" << K_r.height
        << " exemplar view";
    throw Error(ErrorCode::kConfiguration, msg.str());
  }
}

Exemplar render_exemplar(const MeshModel& mesh, std::uint32_t id, const Mat3& rotation, double z_bar,
                         const CameraIntrinsics& K_r) {
  Exemplar e;
  e.id = id;
  e.pose.rotation = rotation;
  e.pose.translation = Vec3(0.0, 0.0, z_bar);
  e.K_r = K_r;
  e.mesh_hash = mesh.hash();
  // Depth is derived from the stored single-precision points so that a file
  // round trip reproduces it exactly.
  e.coord_map = rasterize(mesh, e.pose, K_r).with_depth_from(e.pose);
  return e;
}

ExemplarSet generate_exemplar_set(const MeshModel& mesh, std::size_t n, double z_bar,
                                  const CameraIntrinsics& K_r, std::uint64_t seed,
                                  const std::string& object_name, unsigned threads) {
  if (n == 0) throw Error(ErrorCode::kConfiguration, "exemplar count must be at least 1");
  if (K_r.width != kExemplarSize || K_r.height != kExemplarSize) {
    throw Error(ErrorCode::kConfiguration, "exemplar intrinsics must describe a 256x256 image");
  }
  check_exemplar_frustum(mesh, z_bar, K_r);
  const auto rotations = sample_rotations(n, seed);
  ExemplarSet set;
  set.object_name = object_name;
  set.mesh_hash = mesh.hash();
  set.z_bar = z_bar;
  set.K_r = K_r;
  set.exemplars.resize(n);
  parallel_for(n, threads, [&](std::size_t i) {
    set.exemplars[i] = render_exemplar(mesh, static_cast<std::uint32_t>(i), rotations[i], z_bar, K_r);
  });
  return set;
}

std::vector<ExemplarMatch> query_nearest(std::span<const Mat3> rotations, const Mat3& query, std::size_t n) {
  if (rotations.empty()) throw Error(ErrorCode::kConfiguration, "cannot query an empty exemplar set");
  if (n == 0) throw Error(ErrorCode::kInvalidInput, "query size must be at least 1");
  std::vector<ExemplarMatch> all(rotations.size());
  for (std::size_t i = 0; i < rotations.size(); ++i) {
    all[i] = {static_cast<std::uint32_t>(i), geodesic_distance(query, rotations[i])};
  }
  const std::size_t k = std::min(n, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(), better);
  all.resize(k);
  return all;
}

std::vector<ExemplarMatch> query_nearest(const ExemplarSet& set, const RigidPose& query, std::size_t n) {
  if (set.exemplars.empty()) throw Error(ErrorCode::kConfiguration, "cannot query an empty exemplar set");
  if (n == 0) throw Error(ErrorCode::kInvalidInput, "query size must be at least 1");
  std::vector<ExemplarMatch> all(set.exemplars.size());
  for (std::size_t i = 0; i < set.exemplars.size(); ++i) {
    all[i] = {set.exemplars[i].id, geodesic_distance(query.rotation, set.exemplars[i].pose.rotation)};
  }
  const std::size_t k = std::min(n, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(), better);
  all.resize(k);
  return all;
}

double mean_query_distance(std::span<const Mat3> rotations, std::size_t n_queries, std::uint64_t seed) {
  if (rotations.empty()) throw Error(ErrorCode::kConfiguration, "cannot query an empty exemplar set");
  if (n_queries == 0) throw Error(ErrorCode::kInvalidInput, "need at least one query");
  const auto queries = sample_rotations(n_queries, seed);
  double sum = 0.0;
  for (const Mat3& q : queries) {
    // The geodesic angle is monotone decreasing in trace(Q^T R).
    double best_trace = -std::numeric_limits<double>::infinity();
    std::size_t best = 0;
    for (std::size_t i = 0; i < rotations.size(); ++i) {
      const double tr = q.cwiseProduct(rotations[i]).sum();
      if (tr > best_trace) {
        best_trace = tr;
        best = i;
      }
    }
    sum += geodesic_distance(q, rotations[best]);
  }
  return sum / static_cast<double>(n_queries);
}

double mean_query_distance(const ExemplarSet& set, std::size_t n_queries, std::uint64_t seed) {
  std::vector<Mat3> rotations;
  rotations.reserve(set.exemplars.size());
  for (const Exemplar& e : set.exemplars) rotations.push_back(e.pose.rotation);
  return mean_query_distance(rotations, n_queries, seed);
}

// ---------------------------------------------------------------- persistence

std::vector<std::uint8_t> encode_set(const ExemplarSet& set) {
  detail::ByteWriter w;
  encode_header(w, set.object_name, set.mesh_hash, set.z_bar, set.K_r,
                static_cast<std::uint32_t>(set.exemplars.size()));
  for (std::size_t i = 0; i < set.exemplars.size(); ++i) {
    const Exemplar& e = set.exemplars[i];
    if (e.id != i) throw Error(ErrorCode::kInvalidInput, "exemplar ids must be dense 0..n-1");
    check_exemplar(e, set.z_bar, set.K_r);
    encode_exemplar(w, e);
  }
  return w.data();
}

ExemplarSet decode_set(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes);
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw Error(ErrorCode::kBadMagic, "not an exemplar set file (expected magic PFAX)");
  }
  r.get_bytes(4, "magic");
  const auto version = r.get<std::uint32_t>("version");
  if (version != kExemplarFileVersion) {
    throw Error(ErrorCode::kVersionMismatch, "exemplar file version " + std::to_string(version) +
                                                 " is not supported (expected version " +
                                                 std::to_string(kExemplarFileVersion) + ")");
  }
  const auto count = r.get<std::uint32_t>("exemplar count");
  ExemplarSet set;
  set.z_bar = r.get<double>("z_bar");
  double k[6];
  for (double& v : k) v = r.get<double>("intrinsics");
  set.K_r = {k[0], k[1], k[2], k[3], static_cast<int>(k[4]), static_cast<int>(k[5])};
  if (!set.K_r.is_valid() || k[4] != set.K_r.width || k[5] != set.K_r.height || !(set.z_bar > 0.0)) {
    throw Error(ErrorCode::kInvalidInput, "exemplar file header carries invalid intrinsics or z_bar");
  }
  const auto hash = r.get_bytes(32, "mesh hash");
  std::copy(hash.begin(), hash.end(), set.mesh_hash.begin());
  set.object_name = r.get_string("object name");

  set.exemplars.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    Exemplar e;
    e.id = r.get<std::uint32_t>("exemplar id");
    if (e.id != i) {
      throw Error(ErrorCode::kInvalidInput, "exemplar ids must be dense: expected " + std::to_string(i) +
                                                ", found " + std::to_string(e.id));
    }
    for (int row = 0; row < 3; ++row) {
      for (int col = 0; col < 3; ++col) e.pose.rotation(row, col) = r.get<double>("rotation");
    }
    e.pose.translation = Vec3(0.0, 0.0, set.z_bar);
    e.K_r = set.K_r;
    e.mesh_hash = set.mesh_hash;
    PixelMask mask = r.get_mask(set.K_r.width, set.K_r.height, "exemplar mask");
    const std::size_t n = mask.count();
    r.require(n * 16, "exemplar points and shades");
    std::vector<Vec3f> points(n);
    for (Vec3f& p : points) {
      p.x() = r.get<float>("point");
      p.y() = r.get<float>("point");
      p.z() = r.get<float>("point");
    }
    std::vector<float> shade(n);
    for (float& s : shade) s = r.get<float>("shade");
    std::vector<double> depth(n, 1.0);
    e.coord_map = CoordinateMap(std::move(mask), std::move(points), std::move(depth), std::move(shade))
                      .with_depth_from(e.pose);
    set.exemplars.push_back(std::move(e));
  }
  if (r.remaining() != 0) {
    throw Error(ErrorCode::kInvalidInput, std::to_string(r.remaining()) + " trailing bytes after exemplar data");
  }
  return set;
}

void save_set(const ExemplarSet& set, const std::filesystem::path& path) {
  const auto bytes = encode_set(set);
  detail::write_file(path, bytes);
}

ExemplarSet load_set(const std::filesystem::path& path) {
  return decode_set(detail::read_file(path));
}

ExemplarSetWriter::ExemplarSetWriter(const std::filesystem::path& path, const std::string& object_name,
                                     const MeshHash& mesh_hash, double z_bar, const CameraIntrinsics& K_r,
                                     std::uint32_t count)
    : path_(path), out_(path, std::ios::binary | std::ios::trunc), expected_(count), z_bar_(z_bar), K_r_(K_r) {
  if (!out_) throw Error(ErrorCode::kIo, "cannot write exemplar set " + path.string());
  detail::ByteWriter w;
  encode_header(w, object_name, mesh_hash, z_bar, K_r, count);
  out_.write(reinterpret_cast<const char*>(w.data().data()), static_cast<std::streamsize>(w.data().size()));
}

void ExemplarSetWriter::append(const Exemplar& exemplar) {
  if (exemplar.id != written_) throw Error(ErrorCode::kInvalidInput, "exemplars must be appended in id order");
  if (written_ >= expected_) throw Error(ErrorCode::kInvalidInput, "more exemplars than announced");
  check_exemplar(exemplar, z_bar_, K_r_);
  detail::ByteWriter w;
  encode_exemplar(w, exemplar);
  out_.write(reinterpret_cast<const char*>(w.data().data()), static_cast<std::streamsize>(w.data().size()));
  if (!out_) throw Error(ErrorCode::kIo, "failed writing exemplar set " + path_.string());
  ++written_;
}

void ExemplarSetWriter::close() {
  out_.close();
  if (!out_) throw Error(ErrorCode::kIo, "failed writing exemplar set " + path_.string());
  if (written_ != expected_) {
    throw Error(ErrorCode::kIo, "exemplar set " + path_.string() + " has " + std::to_string(written_) + " of " +
                                    std::to_string(expected_) + " exemplars");
  }
}

}  // namespace pfa
