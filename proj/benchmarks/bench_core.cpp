#include <benchmark/benchmark.h>

#include "pfa/exemplar.hpp"
#include "pfa/flow.hpp"
#include "pfa/random.hpp"
#include "pfa/raster.hpp"
#include "pfa/ransac.hpp"
#include "pfa/refine.hpp"

using namespace pfa;

namespace {

const CameraIntrinsics kTarget{600.0, 600.0, 319.5, 239.5, 640, 480};

const MeshModel& object() {
  static const MeshModel m = make_lumpy_object(0.075);
  return m;
}

RigidPose object_pose(std::uint64_t seed) {
  RigidPose p;
  p.rotation = sample_rotations(1, seed)[0];
  p.translation = Vec3(0.02, -0.01, 1.0);
  return p;
}

std::vector<Correspondence> correspondences(std::size_t n, double outlier_ratio) {
  Rng rng(3);
  const RigidPose gt = object_pose(3);
  const RigidPose inv = gt.inverse();
  std::vector<Correspondence> c;
  while (c.size() < n) {
    const Vec3 cam = gt.translation + Vec3(rng.uniform(-0.075, 0.075), rng.uniform(-0.075, 0.075),
                                           rng.uniform(-0.075, 0.075));
    Vec2 u = project_camera(kTarget, cam) + Vec2(rng.normal(), rng.normal());
    if (rng.uniform() < outlier_ratio) u = Vec2(rng.uniform(0, 639), rng.uniform(0, 479));
    c.push_back({inv.transform(cam), u, 0});
  }
  return c;
}

void BM_Rasterize(benchmark::State& state) {
  const RigidPose pose = object_pose(1);
  for (auto _ : state) benchmark::DoNotOptimize(rasterize(object(), pose, kTarget));
}
BENCHMARK(BM_Rasterize)->Unit(benchmark::kMillisecond);

void BM_RenderExemplar(benchmark::State& state) {
  const CameraIntrinsics K_r = default_exemplar_intrinsics(object(), 1.0);
  const Mat3 r = sample_rotations(1, 2)[0];
  for (auto _ : state) benchmark::DoNotOptimize(render_exemplar(object(), 0, r, 1.0, K_r));
}
BENCHMARK(BM_RenderExemplar)->Unit(benchmark::kMillisecond);

void BM_QueryNearest(benchmark::State& state) {
  const std::vector<Mat3> rotations = sample_rotations(static_cast<std::size_t>(state.range(0)), 4);
  const Mat3 q = sample_rotations(1, 5)[0];
  for (auto _ : state) benchmark::DoNotOptimize(query_nearest(rotations, q, 4));
}
BENCHMARK(BM_QueryNearest)->Arg(2500)->Arg(10000)->Unit(benchmark::kMicrosecond);

void BM_SolvePnp(benchmark::State& state) {
  const auto c = correspondences(static_cast<std::size_t>(state.range(0)), 0.0);
  for (auto _ : state) benchmark::DoNotOptimize(solve_pnp(c, kTarget));
}
BENCHMARK(BM_SolvePnp)->Arg(100)->Arg(2000)->Unit(benchmark::kMicrosecond);

void BM_RansacPnp(benchmark::State& state) {
  const auto c = correspondences(static_cast<std::size_t>(state.range(0)), 0.3);
  for (auto _ : state) benchmark::DoNotOptimize(ransac_pnp(c, kTarget));
}
BENCHMARK(BM_RansacPnp)->Arg(2000)->Arg(20000)->Unit(benchmark::kMillisecond);

void BM_OracleFlow(benchmark::State& state) {
  const CameraIntrinsics K_r = default_exemplar_intrinsics(object(), 1.0);
  const RigidPose gt = object_pose(6);
  const Exemplar ex = render_exemplar(object(), 0, gt.rotation, 1.0, K_r);
  const CropTransform M_r = compute_crop(ex.pose, K_r, object(), kExemplarSize);
  const CropTransform M_t = compute_crop(gt, K_r, object(), kExemplarSize);
  const TargetView view(SceneSpec{object(), gt, {}, kTarget, 0});
  for (auto _ : state) benchmark::DoNotOptimize(oracle_flow(ex, M_r, view, gt, M_t));
}
BENCHMARK(BM_OracleFlow)->Unit(benchmark::kMillisecond);

void BM_RefinePose(benchmark::State& state) {
  const ExemplarSet set =
      generate_exemplar_set(object(), 200, 1.0, default_exemplar_intrinsics(object(), 1.0), 7);
  const RigidPose gt = object_pose(8);
  const OracleFlowProvider provider(SceneSpec{object(), gt, {}, kTarget, 0});
  RefineConfig cfg;
  cfg.n_exemplars = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(refine_pose(gt, set, object(), kTarget, provider, cfg));
}
BENCHMARK(BM_RefinePose)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
