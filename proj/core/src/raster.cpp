#include "pfa/raster.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <limits>

#include "pfa/error.hpp"

namespace pfa {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

// ---------------------------------------------------------------- PixelMask

PixelMask::PixelMask(int width, int height)
    : width_(width), height_(height), words_per_row_((width + 63) / 64) {
  if (width < 0 || height < 0) throw Error(ErrorCode::kInvalidInput, "negative mask size");
  words_.assign(static_cast<std::size_t>(words_per_row_) * height, 0);
}

void PixelMask::set(int x, int y, bool value) {
  const std::uint64_t bit = std::uint64_t{1} << (x & 63);
  if (value) {
    words_[word_index(x, y)] |= bit;
  } else {
    words_[word_index(x, y)] &= ~bit;
  }
}

std::size_t PixelMask::count() const {
  std::size_t n = 0;
  for (std::uint64_t w : words_) n += std::popcount(w);
  return n;
}

std::size_t PixelMask::count_in_row_before(int x, int y) const {
  const std::size_t row = static_cast<std::size_t>(y) * words_per_row_;
  std::size_t n = 0;
  const int full = x >> 6;
  for (int w = 0; w < full; ++w) n += std::popcount(words_[row + w]);
  if ((x & 63) != 0 && full < words_per_row_) {
    n += std::popcount(words_[row + full] & ((std::uint64_t{1} << (x & 63)) - 1));
  }
  return n;
}

// ---------------------------------------------------------------- CoordinateMap

CoordinateMap::CoordinateMap(PixelMask mask, std::vector<Vec3f> points, std::vector<double> depth,
                             std::vector<float> shade)
    : mask_(std::move(mask)),
      points_(std::move(points)),
      depth_(std::move(depth)),
      shade_(std::move(shade)) {
  const std::size_t n = mask_.count();
  if (points_.size() != n || depth_.size() != n || shade_.size() != n) {
    throw Error(ErrorCode::kInvalidInput, "coordinate map arrays disagree with mask count");
  }
  for (double d : depth_) {
    if (!(std::isfinite(d) && d > 0.0)) {
      throw Error(ErrorCode::kInvalidInput, "coordinate map depth must be finite and positive");
    }
  }
  row_start_.assign(mask_.height() + 1, 0);
  for (int y = 0; y < mask_.height(); ++y) {
    row_start_[y + 1] = row_start_[y] + mask_.count_in_row(y);
  }
}

std::optional<std::size_t> CoordinateMap::index(int x, int y) const {
  if (!valid(x, y)) return std::nullopt;
  return row_start_[y] + mask_.count_in_row_before(x, y);
}

double CoordinateMap::depth_at(int x, int y) const {
  const auto idx = index(x, y);
  return idx ? depth_[*idx] : kInf;
}

std::optional<Vec3> CoordinateMap::sample(const Vec2& u) const {
  if (!u.allFinite()) return std::nullopt;
  const double fx = std::floor(u.x());
  const double fy = std::floor(u.y());
  if (fx < -1.0 || fy < -1.0 || fx > width() || fy > height()) return std::nullopt;
  const int x0 = static_cast<int>(fx);
  const int y0 = static_cast<int>(fy);
  const double ax = u.x() - fx;
  const double ay = u.y() - fy;
  const std::array<double, 4> weights = {(1 - ax) * (1 - ay), ax * (1 - ay), (1 - ax) * ay, ax * ay};
  const std::array<int, 4> xs = {x0, x0 + 1, x0, x0 + 1};
  const std::array<int, 4> ys = {y0, y0, y0 + 1, y0 + 1};
  Vec3 acc = Vec3::Zero();
  for (int k = 0; k < 4; ++k) {
    if (weights[k] == 0.0) continue;
    const auto idx = index(xs[k], ys[k]);
    if (!idx) return std::nullopt;
    acc += weights[k] * points_[*idx].cast<double>();
  }
  return acc;
}

CoordinateMap CoordinateMap::with_depth_from(const RigidPose& pose) const {
  CoordinateMap out = *this;
  const Eigen::RowVector3d r2 = pose.rotation.row(2);
  for (std::size_t i = 0; i < out.points_.size(); ++i) {
    out.depth_[i] = r2.dot(out.points_[i].cast<double>()) + pose.translation.z();
    if (!(out.depth_[i] > 0.0)) {
      throw Error(ErrorCode::kBehindCamera, "recomputed depth is not positive");
    }
  }
  return out;
}

// ---------------------------------------------------------------- rasterizer

namespace {

struct ClipVertex {
  Vec3 cam;   // camera-frame position
  Vec3 bary;  // barycentric coordinates w.r.t. the source triangle
};

// Sutherland-Hodgman against z >= kNearPlane. Returns the clipped polygon.
int clip_near(const std::array<ClipVertex, 3>& in, std::array<ClipVertex, 4>& out) {
  int n = 0;
  for (int i = 0; i < 3; ++i) {
    const ClipVertex& a = in[i];
    const ClipVertex& b = in[(i + 1) % 3];
    const bool a_in = a.cam.z() >= kNearPlane;
    const bool b_in = b.cam.z() >= kNearPlane;
    if (a_in) out[n++] = a;
    if (a_in != b_in) {
      const double s = (kNearPlane - a.cam.z()) / (b.cam.z() - a.cam.z());
      ClipVertex v{a.cam + s * (b.cam - a.cam), a.bary + s * (b.bary - a.bary)};
      v.cam.z() = kNearPlane;
      out[n++] = v;
    }
  }
  return n;
}

// Top-left rule for edge a->b of a triangle with positive signed area, in
// image coordinates with y pointing down.
bool is_top_left(const Vec2& a, const Vec2& b) {
  const double dx = b.x() - a.x();
  const double dy = b.y() - a.y();
  return dy < 0.0 || (dy == 0.0 && dx > 0.0);
}

double edge(const Vec2& a, const Vec2& b, double px, double py) {
  return (b.x() - a.x()) * (py - a.y()) - (b.y() - a.y()) * (px - a.x());
}

void draw_triangle(const std::array<ClipVertex, 3>& v, const CameraIntrinsics& K,
                   std::int32_t tri_index, RasterBuffers& buf) {
  std::array<Vec2, 3> s;
  for (int k = 0; k < 3; ++k) {
    s[k] = {K.fx * v[k].cam.x() / v[k].cam.z() + K.cx, K.fy * v[k].cam.y() / v[k].cam.z() + K.cy};
  }
  std::array<int, 3> order = {0, 1, 2};
  double area = edge(s[0], s[1], s[2].x(), s[2].y());
  if (area == 0.0 || !std::isfinite(area)) return;
  if (area < 0.0) {
    std::swap(order[1], order[2]);
    area = -area;
  }
  const Vec2& a = s[order[0]];
  const Vec2& b = s[order[1]];
  const Vec2& c = s[order[2]];
  const bool tl_ab = is_top_left(a, b);
  const bool tl_bc = is_top_left(b, c);
  const bool tl_ca = is_top_left(c, a);
  const double inv_za = 1.0 / v[order[0]].cam.z();
  const double inv_zb = 1.0 / v[order[1]].cam.z();
  const double inv_zc = 1.0 / v[order[2]].cam.z();

  const double min_x = std::min({a.x(), b.x(), c.x()});
  const double max_x = std::max({a.x(), b.x(), c.x()});
  const double min_y = std::min({a.y(), b.y(), c.y()});
  const double max_y = std::max({a.y(), b.y(), c.y()});
  const int x0 = static_cast<int>(std::max(0.0, std::ceil(min_x)));
  const int x1 = static_cast<int>(std::min(buf.width - 1.0, std::floor(max_x)));
  const int y0 = static_cast<int>(std::max(0.0, std::ceil(min_y)));
  const int y1 = static_cast<int>(std::min(buf.height - 1.0, std::floor(max_y)));

  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const double e_bc = edge(b, c, x, y);
      const double e_ca = edge(c, a, x, y);
      const double e_ab = edge(a, b, x, y);
      if (e_bc < 0.0 || (e_bc == 0.0 && !tl_bc)) continue;
      if (e_ca < 0.0 || (e_ca == 0.0 && !tl_ca)) continue;
      if (e_ab < 0.0 || (e_ab == 0.0 && !tl_ab)) continue;
      const double la = e_bc / area;
      const double lb = e_ca / area;
      const double lc = e_ab / area;
      const double inv_z = la * inv_za + lb * inv_zb + lc * inv_zc;
      const double z = 1.0 / inv_z;
      const std::size_t at = buf.at(x, y);
      if (!(z < buf.depth[at] - kDepthTie)) continue;
      const double wa = la * inv_za * z;
      const double wb = lb * inv_zb * z;
      const double wc = lc * inv_zc * z;
      buf.depth[at] = z;
      buf.triangle[at] = tri_index;
      buf.barycentric[at] =
          wa * v[order[0]].bary + wb * v[order[1]].bary + wc * v[order[2]].bary;
    }
  }
}

}  // namespace

RasterBuffers rasterize_buffers(const MeshModel& mesh, const RigidPose& pose,
                                const CameraIntrinsics& K, int width, int height) {
  if (width <= 0 || height <= 0) throw Error(ErrorCode::kInvalidInput, "raster size must be positive");
  RasterBuffers buf;
  buf.width = width;
  buf.height = height;
  const std::size_t n = static_cast<std::size_t>(width) * height;
  buf.depth.assign(n, kInf);
  buf.triangle.assign(n, -1);
  buf.barycentric.assign(n, Vec3::Zero());

  std::vector<Vec3> cam(mesh.vertices().size());
  for (std::size_t i = 0; i < cam.size(); ++i) cam[i] = pose.transform(mesh.vertices()[i]);

  const auto& tris = mesh.triangles();
  for (std::size_t t = 0; t < tris.size(); ++t) {
    const std::array<ClipVertex, 3> tri = {ClipVertex{cam[tris[t][0]], Vec3::UnitX()},
                                           ClipVertex{cam[tris[t][1]], Vec3::UnitY()},
                                           ClipVertex{cam[tris[t][2]], Vec3::UnitZ()}};
    const auto idx = static_cast<std::int32_t>(t);
    if (tri[0].cam.z() >= kNearPlane && tri[1].cam.z() >= kNearPlane && tri[2].cam.z() >= kNearPlane) {
      draw_triangle(tri, K, idx, buf);
      continue;
    }
    std::array<ClipVertex, 4> poly;
    const int count = clip_near(tri, poly);
    for (int k = 1; k + 1 < count; ++k) {
      draw_triangle({poly[0], poly[k], poly[k + 1]}, K, idx, buf);
    }
  }
  return buf;
}

namespace {

CoordinateMap pack_coordinates(const RasterBuffers& buf, const MeshModel& mesh, const RigidPose& pose) {
  const int width = buf.width;
  const int height = buf.height;
  const Vec3 light = pose.transform(mesh.centroid());
  const Vec3 light_dir = light.norm() > 0.0 ? Vec3(light.normalized()) : Vec3::UnitZ();

  const auto& verts = mesh.vertices();
  const auto& tris = mesh.triangles();
  PixelMask mask(width, height);
  std::vector<Vec3f> points;
  std::vector<double> depth;
  std::vector<float> shade;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const std::size_t at = buf.at(x, y);
      const std::int32_t t = buf.triangle[at];
      if (t < 0) continue;
      const Triangle& tri = tris[t];
      const Vec3& w = buf.barycentric[at];
      const Vec3 p = w.x() * verts[tri[0]] + w.y() * verts[tri[1]] + w.z() * verts[tri[2]];
      const Vec3 n = pose.rotation * (verts[tri[1]] - verts[tri[0]]).cross(verts[tri[2]] - verts[tri[0]]);
      mask.set(x, y);
      points.push_back(p.cast<float>());
      depth.push_back(buf.depth[at]);
      shade.push_back(static_cast<float>(std::min(1.0, std::abs(n.normalized().dot(light_dir)))));
    }
  }
  return CoordinateMap(std::move(mask), std::move(points), std::move(depth), std::move(shade));
}

}  // namespace

CoordinateMap rasterize(const MeshModel& mesh, const RigidPose& pose, const CameraIntrinsics& K,
                        int width, int height) {
  return pack_coordinates(rasterize_buffers(mesh, pose, K, width, height), mesh, pose);
}

double SceneRender::scene_depth_at(int x, int y) const {
  if (x < 0 || y < 0 || x >= object.width() || y >= object.height()) return kInf;
  return scene_depth[static_cast<std::size_t>(y) * object.width() + x];
}

SceneRender rasterize_scene(const SceneSpec& scene, int width, int height) {
  SceneRender out;
  const RasterBuffers obj = rasterize_buffers(scene.object, scene.object_pose, scene.K, width, height);
  out.object = pack_coordinates(obj, scene.object, scene.object_pose);
  out.scene_depth = obj.depth;

  std::vector<double> occluder_depth(obj.depth.size(), kInf);
  for (const Occluder& occ : scene.occluders) {
    const RasterBuffers ob = rasterize_buffers(occ.mesh, occ.pose, scene.K, width, height);
    for (std::size_t i = 0; i < ob.depth.size(); ++i) {
      occluder_depth[i] = std::min(occluder_depth[i], ob.depth[i]);
    }
  }

  out.visible = PixelMask(width, height);
  const auto& normals = scene.object.vertex_normals();
  const auto& tris = scene.object.triangles();
  out.object_normals.reserve(out.object.size());
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const std::size_t at = obj.at(x, y);
      out.scene_depth[at] = std::min(obj.depth[at], occluder_depth[at]);
      const std::int32_t t = obj.triangle[at];
      if (t < 0) continue;
      if (!(occluder_depth[at] < obj.depth[at])) out.visible.set(x, y);
      const Vec3& w = obj.barycentric[at];
      const Triangle& tri = tris[t];
      Vec3 n = w.x() * normals[tri[0]] + w.y() * normals[tri[1]] + w.z() * normals[tri[2]];
      if (n.norm() > 0.0) n.normalize();
      out.object_normals.push_back((scene.object_pose.rotation * n).cast<float>());
    }
  }
  return out;
}

}  // namespace pfa
