#include "pfa/flow.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "binary_io.hpp"
#include "pfa/error.hpp"
#include "pfa/random.hpp"

namespace pfa {

namespace {

constexpr char kMagic[4] = {'P', 'F', 'A', 'F'};

}  // namespace

FlowField::FlowField(int width, int height)
    : width_(width), height_(height), valid_(width, height) {
  if (width <= 0 || height <= 0) throw Error(ErrorCode::kInvalidInput, "flow size must be positive");
  du_.assign(static_cast<std::size_t>(width) * height, 0.0f);
  dv_.assign(du_.size(), 0.0f);
}

void FlowField::set(int x, int y, const Vec2& d) {
  if (!d.allFinite()) throw Error(ErrorCode::kInvalidInput, "flow vectors must be finite");
  const std::size_t i = index(x, y);
  du_[i] = static_cast<float>(d.x());
  dv_[i] = static_cast<float>(d.y());
  valid_.set(x, y);
}

void FlowField::invalidate(int x, int y) {
  const std::size_t i = index(x, y);
  du_[i] = 0.0f;
  dv_[i] = 0.0f;
  valid_.set(x, y, false);
}

void FlowNoiseSpec::validate() const {
  auto ratio_ok = [](double r) { return r >= 0.0 && r <= 1.0; };
  if (!ratio_ok(outlier_ratio) || !ratio_ok(dropout_ratio) || !(gaussian_sigma >= 0.0) ||
      !(outlier_range >= 0.0)) {
    throw Error(ErrorCode::kInvalidInput, "flow noise: ratios must be in [0,1], sigma and range >= 0");
  }
}

FlowNoiseSpec FlowNoiseSpec::paper_gap(std::uint64_t seed) {
  return {1.0, 0.10, 32.0, 0.20, seed};
}

std::optional<Vec3> exemplar_crop_point(const Exemplar& exemplar, const CropTransform& M_r, int x, int y) {
  return exemplar.coord_map.sample(M_r.apply_inverse(Vec2(x, y)));
}

TargetView::TargetView(SceneSpec scene) : scene_(std::move(scene)), render_(rasterize_scene(scene_)) {}

double occlusion_epsilon(double z_bar) { return std::max(1e-4, 1e-3 * z_bar); }

FlowField oracle_flow(const Exemplar& exemplar, const CropTransform& M_r, const TargetView& target,
                      const RigidPose& target_gt, const CropTransform& M_t) {
  const SceneSpec& scene = target.scene();
  const SceneRender& render = target.render();
  if (exemplar.mesh_hash != scene.object.hash()) {
    throw Error(ErrorCode::kMeshHashMismatch, "exemplar " + std::to_string(exemplar.id) +
                                                  " was rendered from a different mesh than the target scene");
  }
  const CameraIntrinsics& K_t = scene.K;
  const double eps = occlusion_epsilon(exemplar.pose.translation.z());
  const int size = M_r.out_size();
  FlowField flow(size, size);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const auto p = exemplar_crop_point(exemplar, M_r, x, y);
      if (!p) continue;
      const Vec3 cam = target_gt.transform(*p);
      if (!(cam.z() > kNearPlane)) continue;
      const Vec2 u = project_camera(K_t, cam);
      const double rx = std::round(u.x());
      const double ry = std::round(u.y());
      if (rx < 0.0 || ry < 0.0 || rx >= render.object.width() || ry >= render.object.height()) continue;
      const int px = static_cast<int>(rx);
      const int py = static_cast<int>(ry);
      const auto obj = render.object.index(px, py);
      if (!obj) continue;  // background at that pixel
      if (render.scene_depth_at(px, py) < cam.z() - eps) continue;  // occluded
      const Vec3 normal = render.object_normals[*obj].cast<double>();
      if (!(normal.dot(cam) < 0.0)) continue;  // faces away
      const Vec2 ut = target_to_crop(u, M_t, exemplar.K_r, K_t);
      if (!M_t.contains(ut)) continue;
      flow.set(x, y, ut - Vec2(x, y));
    }
  }
  return flow;
}

FlowField oracle_flow(const Exemplar& exemplar, const CropTransform& M_r, const SceneSpec& scene,
                      const RigidPose& target_gt, const CropTransform& M_t) {
  return oracle_flow(exemplar, M_r, TargetView(scene), target_gt, M_t);
}

FlowField degrade_flow(const FlowField& flow, const FlowNoiseSpec& spec) {
  spec.validate();
  if (spec.is_noop()) return flow;
  FlowField out = flow;
  Rng rng(spec.seed);
  flow.valid_mask().for_each_set([&](int x, int y) {
    // Fixed number of draws per pixel keeps the stream aligned across specs.
    const double drop = rng.uniform();
    const double outlier = rng.uniform();
    const double g0 = rng.normal();
    const double g1 = rng.normal();
    const double o0 = rng.uniform(-spec.outlier_range, spec.outlier_range);
    const double o1 = rng.uniform(-spec.outlier_range, spec.outlier_range);
    if (drop < spec.dropout_ratio) {
      out.invalidate(x, y);
    } else if (outlier < spec.outlier_ratio) {
      out.set(x, y, Vec2(o0, o1));
    } else if (spec.gaussian_sigma > 0.0) {
      out.set(x, y, flow.at(x, y) + spec.gaussian_sigma * Vec2(g0, g1));
    }
  });
  return out;
}

std::vector<std::uint8_t> encode_flow(const FlowField& flow) {
  detail::ByteWriter w;
  w.put_bytes({reinterpret_cast<const std::uint8_t*>(kMagic), 4});
  w.put<std::uint32_t>(kFlowFileVersion);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(flow.width()));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(flow.height()));
  w.put_mask(flow.valid_mask());
  flow.valid_mask().for_each_set([&](int x, int y) {
    const Vec2 d = flow.at(x, y);
    w.put<float>(static_cast<float>(d.x()));
    w.put<float>(static_cast<float>(d.y()));
  });
  return w.data();
}

FlowField decode_flow(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw Error(ErrorCode::kBadMagic, "not a flow file (expected magic PFAF)");
  }
  detail::ByteReader r(bytes);
  r.get_bytes(4, "magic");
  const auto version = r.get<std::uint32_t>("version");
  if (version != kFlowFileVersion) {
    throw Error(ErrorCode::kVersionMismatch, "flow file version " + std::to_string(version) +
                                                 " is not supported (expected version " +
                                                 std::to_string(kFlowFileVersion) + ")");
  }
  const auto width = r.get<std::uint32_t>("width");
  const auto height = r.get<std::uint32_t>("height");
  if (width == 0 || height == 0 || width > 1U << 15 || height > 1U << 15) {
    throw Error(ErrorCode::kInvalidInput, "flow file has invalid dimensions");
  }
  const PixelMask mask = r.get_mask(static_cast<int>(width), static_cast<int>(height), "valid mask");
  r.require(mask.count() * 8, "flow vectors");
  FlowField flow(static_cast<int>(width), static_cast<int>(height));
  mask.for_each_set([&](int x, int y) {
    const float du = r.get<float>("flow vector");
    const float dv = r.get<float>("flow vector");
    flow.set(x, y, Vec2(du, dv));
  });
  if (r.remaining() != 0) {
    throw Error(ErrorCode::kInvalidInput, std::to_string(r.remaining()) + " trailing bytes after flow data");
  }
  return flow;
}

void save_flow(const FlowField& flow, const std::filesystem::path& path) {
  detail::write_file(path, encode_flow(flow));
}

FlowField load_flow(const std::filesystem::path& path) { return decode_flow(detail::read_file(path)); }

OracleFlowProvider::OracleFlowProvider(SceneSpec scene, FlowNoiseSpec noise)
    : target_(std::move(scene)), noise_(noise) {
  noise_.validate();
}

FlowField OracleFlowProvider::flow(const Exemplar& exemplar, const CropTransform& M_r,
                                   const CropTransform& M_t) const {
  FlowField exact = oracle_flow(exemplar, M_r, target_, target_.scene().object_pose, M_t);
  FlowNoiseSpec noise = noise_;
  noise.seed = mix_seed(noise_.seed, exemplar.id);
  return degrade_flow(exact, noise);
}

FileFlowProvider::FileFlowProvider(std::filesystem::path directory) : directory_(std::move(directory)) {}

std::filesystem::path FileFlowProvider::file_for(const std::filesystem::path& directory,
                                                 std::uint32_t exemplar_id) {
  return directory / ("exemplar_" + std::to_string(exemplar_id) + ".pfaf");
}

FlowField FileFlowProvider::flow(const Exemplar& exemplar, const CropTransform&,
                                 const CropTransform& M_t) const {
  const auto path = file_for(directory_, exemplar.id);
  if (!std::filesystem::exists(path)) throw Error(ErrorCode::kIo, "missing flow file " + path.string());
  FlowField f = load_flow(path);
  if (f.width() != M_t.out_size() || f.height() != M_t.out_size()) {
    throw Error(ErrorCode::kConfiguration, "flow file " + path.string() + " does not match the crop size");
  }
  return f;
}

}  // namespace pfa
