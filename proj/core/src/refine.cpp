#include "pfa/refine.hpp"

#include <algorithm>

#include "pfa/parallel.hpp"

namespace pfa {

std::vector<Correspondence> lift_correspondences(const Exemplar& exemplar, const FlowField& flow,
                                                 const CropTransform& M_r, const CropTransform& M_t,
                                                 const CameraIntrinsics& K_t) {
  if (flow.width() != M_r.out_size() || flow.height() != M_r.out_size() || M_t.out_size() != M_r.out_size()) {
    throw Error(ErrorCode::kConfiguration, "flow size " + std::to_string(flow.width()) + "x" +
                                               std::to_string(flow.height()) + " does not match crop size " +
                                               std::to_string(M_r.out_size()));
  }
  const double mx = kLiftMargin * K_t.width;
  const double my = kLiftMargin * K_t.height;
  std::vector<Correspondence> out;
  out.reserve(flow.valid_count());
  flow.valid_mask().for_each_set([&](int x, int y) {
    const auto p = exemplar_crop_point(exemplar, M_r, x, y);
    if (!p) return;
    const Vec2 ut = Vec2(x, y) + flow.at(x, y);
    const Vec2 u = lift_to_image(ut, M_t, exemplar.K_r, K_t);
    if (u.x() < -mx || u.y() < -my || u.x() > K_t.width - 1 + mx || u.y() > K_t.height - 1 + my) return;
    out.push_back({*p, u, exemplar.id});
  });
  return out;
}

std::vector<Correspondence> aggregate(std::span<const std::vector<Correspondence>> sets) {
  std::vector<Correspondence> out;
  std::size_t total = 0;
  for (const auto& s : sets) total += s.size();
  out.reserve(total);
  for (const auto& s : sets) out.insert(out.end(), s.begin(), s.end());
  std::stable_sort(out.begin(), out.end(),
                   [](const Correspondence& a, const Correspondence& b) { return a.exemplar_id < b.exemplar_id; });
  return out;
}

std::vector<Correspondence> subsample(std::span<const Correspondence> c, std::size_t cap) {
  if (c.size() <= cap) return {c.begin(), c.end()};
  std::vector<Correspondence> out;
  out.reserve(cap);
  std::size_t begin = 0;
  while (begin < c.size()) {
    std::size_t end = begin;
    while (end < c.size() && c[end].exemplar_id == c[begin].exemplar_id) ++end;
    const std::size_t n = end - begin;
    const std::size_t keep = n * cap / c.size();
    for (std::size_t i = 0; i < keep; ++i) out.push_back(c[begin + i * n / keep]);
    begin = end;
  }
  return out;
}

void RefineConfig::validate() const {
  if (n_exemplars < 1) throw Error(ErrorCode::kConfiguration, "number of exemplars must be >= 1");
  if (crop_size < 8) throw Error(ErrorCode::kConfiguration, "crop size must be >= 8");
  if (!(crop_pad >= 1.0)) throw Error(ErrorCode::kConfiguration, "crop pad must be >= 1");
  if (max_correspondences < 4) throw Error(ErrorCode::kConfiguration, "correspondence cap must be >= 4");
  ransac.validate();
}

RefineResult refine_pose(const RigidPose& initial, const ExemplarSet& set, const MeshModel& mesh,
                         const CameraIntrinsics& K_t, const FlowProvider& flow, const RefineConfig& cfg) {
  cfg.validate();
  set.require_mesh(mesh);
  K_t.validate();
  const auto matches = query_nearest(set, initial, cfg.n_exemplars);
  const CropTransform M_t = compute_crop(initial, set.K_r, mesh, cfg.crop_size, cfg.crop_pad);

  std::vector<std::vector<Correspondence>> lifted(matches.size());
  parallel_for(matches.size(), cfg.threads, [&](std::size_t k) {
    const Exemplar& ex = set.exemplars[matches[k].id];
    const CropTransform M_r = compute_crop(ex.pose, set.K_r, mesh, cfg.crop_size, cfg.crop_pad);
    lifted[k] = lift_correspondences(ex, flow.flow(ex, M_r, M_t), M_r, M_t, K_t);
  });

  std::vector<ExemplarDiagnostics> diagnostics(matches.size());
  for (std::size_t k = 0; k < matches.size(); ++k) {
    diagnostics[k] = {matches[k].id, matches[k].distance_deg, lifted[k].size(), 0};
  }

  const std::vector<Correspondence> all = subsample(aggregate(lifted), cfg.max_correspondences);
  RefineResult result;
  try {
    result.estimate = ransac_pnp(all, K_t, cfg.ransac);
  } catch (const RobustFailure& e) {
    throw RefineFailure(e, std::move(diagnostics));
  }
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (!result.estimate.inlier_ids[i]) continue;
    for (auto& d : diagnostics) {
      if (d.id == all[i].exemplar_id) ++d.inliers;
    }
  }
  result.exemplars = std::move(diagnostics);
  return result;
}

}  // namespace pfa
