#include "pfa/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <sstream>

#include <openssl/evp.h>

#include "pfa/error.hpp"

namespace pfa {

namespace {

double compute_diameter(const std::vector<Vec3>& vertices, const Vec3& center) {
  // Exact maximum pairwise distance. Sorting by distance from the center lets
  // the scan stop once r_i + r_j cannot beat the current best.
  std::vector<std::pair<double, std::size_t>> order(vertices.size());
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    order[i] = {(vertices[i] - center).norm(), i};
  }
  std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
    return a.first > b.first || (a.first == b.first && a.second < b.second);
  });
  double best = 0.0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (2.0 * order[i].first <= best) break;
    const Vec3& a = vertices[order[i].second];
    for (std::size_t j = i + 1; j < order.size(); ++j) {
      if (order[i].first + order[j].first <= best) break;
      best = std::max(best, (a - vertices[order[j].second]).norm());
    }
  }
  return best;
}

template <typename T>
void append_le(std::vector<std::uint8_t>& out, T value) {
  std::uint8_t bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  out.insert(out.end(), bytes, bytes + sizeof(T));
}

MeshHash digest(const std::vector<Vec3>& vertices, const std::vector<Triangle>& triangles) {
  std::vector<std::uint8_t> buf;
  buf.reserve(16 + vertices.size() * 24 + triangles.size() * 12);
  append_le<std::uint64_t>(buf, vertices.size());
  for (const Vec3& v : vertices) {
    append_le(buf, v.x());
    append_le(buf, v.y());
    append_le(buf, v.z());
  }
  append_le<std::uint64_t>(buf, triangles.size());
  for (const Triangle& t : triangles) {
    for (std::uint32_t i : t) append_le(buf, i);
  }
  MeshHash out{};
  unsigned int len = 0;
  if (EVP_Digest(buf.data(), buf.size(), out.data(), &len, EVP_sha256(), nullptr) != 1 ||
      len != out.size()) {
    throw Error(ErrorCode::kInvalidInput, "SHA-256 digest failed");
  }
  return out;
}

}  // namespace

MeshModel::MeshModel(std::vector<Vec3> vertices, std::vector<Triangle> triangles)
    : vertices_(std::move(vertices)), triangles_(std::move(triangles)) {
  if (vertices_.empty() || triangles_.empty()) {
    throw Error(ErrorCode::kEmptyMesh, "mesh has no vertices or no triangles");
  }
  if (vertices_.size() < 4) {
    throw Error(ErrorCode::kEmptyMesh, "mesh needs at least 4 vertices, got " +
                                           std::to_string(vertices_.size()));
  }
  for (std::size_t i = 0; i < vertices_.size(); ++i) {
    if (!vertices_[i].allFinite()) {
      throw Error(ErrorCode::kInvalidInput, "non-finite vertex " + std::to_string(i));
    }
  }

  centroid_ = Vec3::Zero();
  for (const Vec3& v : vertices_) {
    centroid_ += v;
    bounding_radius_ = std::max(bounding_radius_, v.norm());
  }
  centroid_ /= static_cast<double>(vertices_.size());
  diameter_ = compute_diameter(vertices_, centroid_);
  if (!(diameter_ > 0.0)) {
    throw Error(ErrorCode::kEmptyMesh, "mesh has zero diameter");
  }

  const double min_area = 1e-14 * diameter_ * diameter_;
  normals_.assign(vertices_.size(), Vec3::Zero());
  double volume = 0.0;
  for (std::size_t t = 0; t < triangles_.size(); ++t) {
    const Triangle& tri = triangles_[t];
    for (std::uint32_t idx : tri) {
      if (idx >= vertices_.size()) {
        std::ostringstream msg;
        msg << "triangle " << t << " references vertex " << idx << " of "
            << vertices_.size();
        throw Error(ErrorCode::kInvalidInput, msg.str());
      }
    }
    const Vec3& a = vertices_[tri[0]];
    const Vec3& b = vertices_[tri[1]];
    const Vec3& c = vertices_[tri[2]];
    const Vec3 n = (b - a).cross(c - a);
    if (!(0.5 * n.norm() > min_area)) {
      throw Error(ErrorCode::kDegenerateTriangle,
                  "triangle " + std::to_string(t) + " has zero area");
    }
    for (std::uint32_t idx : tri) normals_[idx] += n;
    volume += a.dot(b.cross(c));
  }
  const double orientation = volume < 0.0 ? -1.0 : 1.0;
  for (Vec3& n : normals_) {
    const double len = n.norm();
    n = len > 0.0 ? Vec3(orientation * n / len) : Vec3::Zero();
  }
  hash_ = digest(vertices_, triangles_);
}

std::string to_hex(const MeshHash& hash) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(64);
  for (std::uint8_t b : hash) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0xF]);
  }
  return out;
}

MeshModel make_box(const Vec3& h) {
  std::vector<Vec3> v;
  for (int i = 0; i < 8; ++i) {
    v.emplace_back((i & 1) ? h.x() : -h.x(), (i & 2) ? h.y() : -h.y(), (i & 4) ? h.z() : -h.z());
  }
  // Outward counter-clockwise faces.
  std::vector<Triangle> t = {
      {0, 2, 1}, {1, 2, 3},  // -z
      {4, 5, 6}, {5, 7, 6},  // +z
      {0, 1, 4}, {1, 5, 4},  // -y
      {2, 6, 3}, {3, 6, 7},  // +y
      {0, 4, 2}, {2, 4, 6},  // -x
      {1, 3, 5}, {3, 7, 5},  // +x
  };
  return MeshModel(std::move(v), std::move(t));
}

MeshModel make_lumpy_object(double radius, int rings, int segments) {
  if (rings < 2 || segments < 3 || !(radius > 0.0)) {
    throw Error(ErrorCode::kInvalidInput, "invalid lumpy object parameters");
  }
  auto surface = [radius](double theta, double phi) {
    const double lump = 1.0 + 0.15 * std::sin(2.0 * theta) * std::cos(3.0 * phi + 0.4) +
                        0.10 * std::cos(theta) + 0.08 * std::sin(phi - 0.7);
    const Vec3 dir(std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi),
                   std::cos(theta));
    const Vec3 axes(1.0, 0.72, 0.55);
    return Vec3(radius * lump * dir.cwiseProduct(axes));
  };

  std::vector<Vec3> v;
  v.push_back(surface(0.0, 0.0));
  for (int r = 1; r < rings; ++r) {
    const double theta = kPi * r / rings;
    for (int s = 0; s < segments; ++s) {
      v.push_back(surface(theta, 2.0 * kPi * s / segments));
    }
  }
  v.push_back(surface(kPi, 0.0));
  const auto south = static_cast<std::uint32_t>(v.size() - 1);

  auto ring_vertex = [segments](int r, int s) {
    return static_cast<std::uint32_t>(1 + (r - 1) * segments + (s % segments));
  };
  std::vector<Triangle> t;
  for (int s = 0; s < segments; ++s) {
    t.push_back({0, ring_vertex(1, s), ring_vertex(1, s + 1)});
  }
  for (int r = 1; r + 1 < rings; ++r) {
    for (int s = 0; s < segments; ++s) {
      const std::uint32_t a = ring_vertex(r, s), b = ring_vertex(r, s + 1);
      const std::uint32_t c = ring_vertex(r + 1, s), d = ring_vertex(r + 1, s + 1);
      t.push_back({a, c, d});
      t.push_back({a, d, b});
    }
  }
  for (int s = 0; s < segments; ++s) {
    t.push_back({ring_vertex(rings - 1, s), south, ring_vertex(rings - 1, s + 1)});
  }
  return MeshModel(std::move(v), std::move(t));
}

}  // namespace pfa
