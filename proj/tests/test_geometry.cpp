// SPDX-License-Identifier: Apache-2.0
#include <voxtrack/geometry.hpp>
#include <voxtrack/rle.hpp>
#include <voxtrack/rng.hpp>

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

using namespace voxtrack;

namespace {

CameraIntrinsics box_center_intrinsics(float fx, float fy, int w, int h) {
  CameraIntrinsics intr;
  intr.fx = fx;
  intr.fy = fy;
  intr.width = w;
  intr.height = h;
  intr.center_mode = ProjectionCenterMode::BoxCenter;
  return intr;
}

PointCloud make_cloud(const std::vector<std::array<float, 3>>& pts) {
  PointCloud c;
  for (const auto& p : pts) {
    c.xs.push_back(p[0]);
    c.ys.push_back(p[1]);
    c.zs.push_back(p[2]);
  }
  return c;
}

PointCloud random_cloud(Pcg32& rng, std::size_t max_points, double lo = 0.0,
                        double hi = 10.0) {
  PointCloud c;
  const std::size_t n = rng.below(static_cast<uint32_t>(max_points + 1));
  for (std::size_t i = 0; i < n; ++i) {
    c.xs.push_back(static_cast<float>(rng.uniform(lo, hi)));
    c.ys.push_back(static_cast<float>(rng.uniform(lo, hi)));
    c.zs.push_back(static_cast<float>(rng.uniform(lo, hi)));
  }
  return c;
}

// Independent dense-grid rasterization: recomputes every cell index from the
// grid metadata and marks a boolean array.
std::set<uint32_t> dense_rasterize(const PointCloud& cloud, const VoxelGrid& g) {
  std::set<uint32_t> cells;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto cell = [&](float p, float o, int dim) {
      float t = std::floor((p - o) / g.voxel_size);
      t = std::min(std::max(t, 0.0f), static_cast<float>(dim - 1));
      return static_cast<uint32_t>(t);
    };
    const uint32_t ix = cell(cloud.xs[i], g.origin[0], g.dims[0]);
    const uint32_t iy = cell(cloud.ys[i], g.origin[1], g.dims[1]);
    const uint32_t iz = cell(cloud.zs[i], g.origin[2], g.dims[2]);
    cells.insert((ix << 18) | (iy << 9) | iz);
  }
  return cells;
}

double dense_iou(const PointCloud& a, const PointCloud& b, float voxel) {
  if (a.empty() || b.empty()) return 0.0;
  const Aabb bounds = joint_bounds(a, b);
  const VoxelGrid ga = voxelize(a, bounds, voxel);
  const auto ca = dense_rasterize(a, ga);
  const auto cb = dense_rasterize(b, ga);
  std::size_t inter = 0;
  for (uint32_t k : ca) inter += cb.count(k);
  const std::size_t uni = ca.size() + cb.size() - inter;
  return uni == 0 ? 0.0 : double(inter) / double(uni);
}

}  // namespace

TEST_SUITE_BEGIN("geometry");

TEST_CASE("pinhole arithmetic at the box centre") {
  // f = 1000, pixel 100 to the right of the centre at depth 10 -> x = 1.
  const int w = 400, h = 200;
  const CameraIntrinsics intr = box_center_intrinsics(1000, 1000, w, h);
  DepthMap depth;
  depth.width = w;
  depth.height = h;
  depth.values.assign(static_cast<std::size_t>(w) * h, 0.0f);
  const Box bbox{100, 50, 200, 150};  // centre (150, 100)
  const int u = 250, v = 100;
  depth.at(v, u) = 10.0f;
  std::vector<uint8_t> bits(static_cast<std::size_t>(w) * h, 0);
  bits[static_cast<std::size_t>(v) * w + u] = 1;
  const RleMask mask = encode_rle(bits.data(), w, h);

  const PointCloud cloud = backproject(depth, mask, bbox, intr);
  REQUIRE(cloud.size() == 1);
  CHECK(cloud.xs[0] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(cloud.ys[0] == doctest::Approx(0.0));
  CHECK(cloud.zs[0] == 10.0f);
}

TEST_CASE("pixels with zero depth are excluded; empty mask gives empty cloud") {
  const int w = 8, h = 8;
  const CameraIntrinsics intr = box_center_intrinsics(100, 100, w, h);
  DepthMap depth;
  depth.width = w;
  depth.height = h;
  depth.values.assign(64, 0.0f);
  depth.at(2, 2) = 5.0f;
  std::vector<uint8_t> bits(64, 1);
  const RleMask all = encode_rle(bits.data(), w, h);
  const Box bbox{0, 0, 8, 8};
  const PointCloud cloud = backproject(depth, all, bbox, intr);
  CHECK(cloud.size() == 1);  // only the one valid-depth pixel

  const RleMask empty{w, h, {64}};
  CHECK(backproject(depth, empty, bbox, intr).empty());

  RleMask wrong{4, 4, {16}};
  CHECK_THROWS_AS(backproject(depth, wrong, bbox, intr), Error);
}

TEST_CASE("backproject emits exactly the valid masked pixels") {
  Pcg32 rng(21, 0);
  const int w = 40, h = 30;
  const CameraIntrinsics intr = box_center_intrinsics(300, 310, w, h);
  for (int round = 0; round < 20; ++round) {
    DepthMap depth;
    depth.width = w;
    depth.height = h;
    depth.values.resize(static_cast<std::size_t>(w) * h);
    std::vector<uint8_t> bits(depth.values.size());
    std::size_t expect = 0;
    for (std::size_t i = 0; i < depth.values.size(); ++i) {
      depth.values[i] =
          rng.uniform() < 0.3 ? 0.0f : static_cast<float>(rng.uniform(1, 200));
      bits[i] = rng.uniform() < 0.5 ? 1 : 0;
      if (bits[i] && depth.values[i] > 0) ++expect;
    }
    const RleMask mask = encode_rle(bits.data(), w, h);
    const PointCloud cloud = backproject(depth, mask, Box{5, 5, 30, 25}, intr);
    CHECK(cloud.size() == expect);
  }
}

TEST_CASE("joint bounds") {
  const PointCloud a = make_cloud({{0, 0, 0}});
  const PointCloud b = make_cloud({{1, 2, 3}});
  const Aabb ab = joint_bounds(a, b);
  CHECK(ab.lo == std::array<float, 3>{0, 0, 0});
  CHECK(ab.hi == std::array<float, 3>{1, 2, 3});

  const Aabb aa = joint_bounds(a, a);
  CHECK(aa.lo == aa.hi);

  CHECK_THROWS_AS(joint_bounds(PointCloud{}, PointCloud{}), Error);

  // Brute-force concatenation oracle on random clouds.
  Pcg32 rng(3, 0);
  for (int round = 0; round < 30; ++round) {
    PointCloud ca = random_cloud(rng, 40, -7, 9);
    PointCloud cb = random_cloud(rng, 40, -7, 9);
    if (ca.empty() && cb.empty()) continue;
    const Aabb got = joint_bounds(ca, cb);
    std::vector<float> xs(ca.xs), ys(ca.ys), zs(ca.zs);
    xs.insert(xs.end(), cb.xs.begin(), cb.xs.end());
    ys.insert(ys.end(), cb.ys.begin(), cb.ys.end());
    zs.insert(zs.end(), cb.zs.begin(), cb.zs.end());
    CHECK(got.lo[0] == *std::min_element(xs.begin(), xs.end()));
    CHECK(got.hi[0] == *std::max_element(xs.begin(), xs.end()));
    CHECK(got.lo[1] == *std::min_element(ys.begin(), ys.end()));
    CHECK(got.hi[1] == *std::max_element(ys.begin(), ys.end()));
    CHECK(got.lo[2] == *std::min_element(zs.begin(), zs.end()));
    CHECK(got.hi[2] == *std::max_element(zs.begin(), zs.end()));
  }
}

TEST_CASE("voxelize floor and boundary behaviour") {
  const PointCloud c = make_cloud({{0, 0, 0}, {0.39f, 0, 0}});
  Aabb bounds{{0, 0, 0}, {1, 1, 1}};
  const VoxelGrid g = voxelize(c, bounds, 0.4f);
  CHECK(g.occupied_count() == 1);
  CHECK(VoxelGrid::unpack(g.keys[0]) == std::array<int, 3>{0, 0, 0});

  const PointCloud edge = make_cloud({{0.4f, 0, 0}});
  const VoxelGrid g2 = voxelize(edge, bounds, 0.4f);
  CHECK(VoxelGrid::unpack(g2.keys[0]) == std::array<int, 3>{1, 0, 0});

  CHECK_THROWS_AS(voxelize(c, bounds, 0.0f), Error);
  CHECK_THROWS_AS(voxelize(c, bounds, -1.0f), Error);
}

TEST_CASE("voxelize equals the dense rasterization oracle") {
  Pcg32 rng(17, 0);
  for (int round = 0; round < 60; ++round) {
    PointCloud a = random_cloud(rng, 120);
    if (a.empty()) continue;
    const Aabb bounds = cloud_bounds(a);
    const VoxelGrid g = voxelize(a, bounds, 0.4f);
    const auto oracle = dense_rasterize(a, g);
    const std::set<uint32_t> got(g.keys.begin(), g.keys.end());
    REQUIRE(got.size() == g.keys.size());  // duplicate-free
    CHECK(got == oracle);
    for (uint32_t k : g.keys) {
      const auto idx = VoxelGrid::unpack(k);
      for (int ax = 0; ax < 3; ++ax) {
        CHECK(idx[static_cast<std::size_t>(ax)] >= 0);
        CHECK(idx[static_cast<std::size_t>(ax)] < g.dims[static_cast<std::size_t>(ax)]);
      }
    }
  }
}

TEST_CASE("grid dims stay capped for degenerate extents") {
  PointCloud c = make_cloud({{0, 0, 0}, {5000, 1, 1}});
  const Aabb bounds = cloud_bounds(c);
  bool capped = false;
  const VoxelGrid g = voxelize(c, bounds, 0.1f, &capped);
  CHECK(capped);
  CHECK(g.dims[0] <= VoxelGrid::kMaxDim);
  CHECK(g.voxel_size > 0.1f);
  const auto oracle = dense_rasterize(c, g);
  CHECK(std::set<uint32_t>(g.keys.begin(), g.keys.end()) == oracle);
}

TEST_CASE("voxel IoU set counting") {
  VoxelGrid a, b;
  a.dims = b.dims = {4, 1, 1};
  a.voxel_size = b.voxel_size = 0.4f;
  a.keys = {VoxelGrid::pack(0, 0, 0), VoxelGrid::pack(1, 0, 0)};
  b.keys = {VoxelGrid::pack(1, 0, 0), VoxelGrid::pack(2, 0, 0)};
  CHECK(voxel_iou_3d(a, b) == doctest::Approx(1.0 / 3.0));
  CHECK(voxel_iou_3d(a, a) == 1.0);

  VoxelGrid empty = a;
  empty.keys.clear();
  CHECK(voxel_iou_3d(empty, empty) == 0.0);

  VoxelGrid shifted = b;
  shifted.origin[0] = 1.0f;
  CHECK_THROWS_AS(voxel_iou_3d(a, shifted), Error);
  VoxelGrid resized = b;
  resized.dims = {5, 1, 1};
  CHECK_THROWS_AS(voxel_iou_3d(a, resized), Error);
}

TEST_CASE("pair IoU equals the dense AND/OR oracle on random pairs") {
  Pcg32 rng(29, 0);
  for (int round = 0; round < 120; ++round) {
    const PointCloud a = random_cloud(rng, 150);
    const PointCloud b = random_cloud(rng, 150);
    const double got = pair_voxel_iou(a, b, 0.4f);
    const double want = dense_iou(a, b, 0.4f);
    CHECK(got == want);  // integer set math, no tolerance
  }
}

TEST_CASE("IoU algebra: symmetry, range, identity, separation") {
  Pcg32 rng(31, 0);
  for (int round = 0; round < 200; ++round) {
    PointCloud a = random_cloud(rng, 80);
    PointCloud b = random_cloud(rng, 80);
    const double ab = pair_voxel_iou(a, b, 0.4f);
    const double ba = pair_voxel_iou(b, a, 0.4f);
    CHECK(ab == ba);
    CHECK(ab >= 0.0);
    CHECK(ab <= 1.0);
    if (!a.empty()) CHECK(pair_voxel_iou(a, a, 0.4f) == 1.0);

    // Clouds separated by more than a voxel on one axis never overlap.
    if (!a.empty() && !b.empty()) {
      PointCloud far = b;
      const Aabb ba_box = cloud_bounds(a);
      const Aabb bb_box = cloud_bounds(b);
      const float shift = (ba_box.hi[0] - bb_box.lo[0]) + 0.4f + 0.05f;
      for (auto& x : far.xs) x += shift;
      CHECK(pair_voxel_iou(a, far, 0.4f) == 0.0);
    }
  }
}

TEST_CASE("voxelization is translation-consistent for voxel-size multiples") {
  Pcg32 rng(37, 0);
  for (int round = 0; round < 40; ++round) {
    PointCloud a = random_cloud(rng, 60);
    PointCloud b = random_cloud(rng, 60);
    if (a.empty() || b.empty()) continue;
    const double base = pair_voxel_iou(a, b, 0.4f);
    const float dx = 0.4f * static_cast<float>(1 + rng.below(20));
    const float dz = 0.4f * static_cast<float>(1 + rng.below(20));
    const PointCloud a2 = translate_cloud(a, dx, 0, dz);
    const PointCloud b2 = translate_cloud(b, dx, 0, dz);
    CHECK(pair_voxel_iou(a2, b2, 0.4f) == doctest::Approx(base).epsilon(1e-12));
  }
}

TEST_CASE("pairwise matrix matches independent per-pair computation") {
  Pcg32 rng(41, 0);
  std::vector<PointCloud> dets, trks;
  for (int i = 0; i < 5; ++i) dets.push_back(random_cloud(rng, 60));
  for (int i = 0; i < 4; ++i) trks.push_back(random_cloud(rng, 60));
  std::vector<const PointCloud*> dp, tp;
  for (const auto& c : dets) dp.push_back(&c);
  for (const auto& c : trks) tp.push_back(&c);

  const Eigen::MatrixXd m = pairwise_voxel_iou(dp, tp, 0.4f);
  REQUIRE(m.rows() == 5);
  REQUIRE(m.cols() == 4);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 4; ++j)
      CHECK(m(i, j) == pair_voxel_iou(dets[static_cast<std::size_t>(i)],
                                      trks[static_cast<std::size_t>(j)], 0.4f));

  // Deterministic under threading.
  const Eigen::MatrixXd m2 = pairwise_voxel_iou(dp, tp, 0.4f, nullptr, 2);
  CHECK(m == m2);

  // Self-pairing has a unit diagonal for non-empty clouds.
  const Eigen::MatrixXd self = pairwise_voxel_iou(dp, dp, 0.4f);
  for (int i = 0; i < 5; ++i)
    if (!dets[static_cast<std::size_t>(i)].empty()) CHECK(self(i, i) == 1.0);

  CHECK(pairwise_voxel_iou({}, tp, 0.4f).rows() == 0);
}

TEST_CASE("mean masked depth") {
  const int w = 6, h = 4;
  DepthMap depth;
  depth.width = w;
  depth.height = h;
  depth.values.assign(24, 0.0f);
  depth.at(0, 0) = 4.0f;
  depth.at(1, 0) = 6.0f;
  std::vector<uint8_t> bits(24, 0);
  bits[0] = 1;       // (0,0) -> 4
  bits[w] = 1;       // (1,0) -> 6
  const RleMask mask = encode_rle(bits.data(), w, h);
  CHECK(mean_masked_depth(depth, mask, Box{0, 0, 2, 2}) == doctest::Approx(5.0));

  // Zero depths inside the mask are excluded.
  depth.at(1, 0) = 0.0f;
  depth.at(0, 1) = 8.0f;
  std::vector<uint8_t> bits2(24, 0);
  bits2[0] = 1;  // depth 4 -> replaced below
  bits2[1] = 1;  // depth 8
  depth.at(0, 0) = 0.0f;
  const RleMask mask2 = encode_rle(bits2.data(), w, h);
  CHECK(mean_masked_depth(depth, mask2, Box{0, 0, 2, 2}) == doctest::Approx(8.0));

  // Empty valid set falls back to the bbox region, then to 0.
  const RleMask none{w, h, {24}};
  depth.values.assign(24, 0.0f);
  depth.at(3, 5) = 12.0f;
  CHECK(mean_masked_depth(depth, none, Box{4, 2, 6, 4}) == doctest::Approx(12.0));
  CHECK(mean_masked_depth(depth, none, Box{0, 0, 2, 2}) == 0.0);
}

TEST_CASE("mean masked depth equals a naive per-pixel loop") {
  Pcg32 rng(43, 0);
  const int w = 31, h = 22;
  for (int round = 0; round < 25; ++round) {
    DepthMap depth;
    depth.width = w;
    depth.height = h;
    depth.values.resize(static_cast<std::size_t>(w) * h);
    std::vector<uint8_t> bits(depth.values.size());
    for (std::size_t i = 0; i < depth.values.size(); ++i) {
      depth.values[i] =
          rng.uniform() < 0.25 ? 0.0f : static_cast<float>(rng.uniform(1, 250));
      bits[i] = rng.uniform() < 0.4 ? 1 : 0;
    }
    const RleMask mask = encode_rle(bits.data(), w, h);
    double sum = 0;
    long count = 0;
    for (int v = 0; v < h; ++v)
      for (int u = 0; u < w; ++u)
        if (bits[static_cast<std::size_t>(v) * w + u] && depth.at(v, u) > 0) {
          sum += depth.at(v, u);
          ++count;
        }
    const double want = count > 0 ? sum / count : 0.0;
    CHECK(mean_masked_depth(depth, mask, Box{0, 0, float(w), float(h)}) ==
          doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_SUITE_END();
