// SPDX-License-Identifier: Apache-2.0
#include <voxtrack/geometry.hpp>
#include <voxtrack/kernels.hpp>
#include <voxtrack/rle.hpp>

#include <algorithm>
#include <cmath>
#include <thread>

namespace voxtrack {

namespace {

void projection_center(const Box& bbox, const CameraIntrinsics& intr,
                       float* cx, float* cy) {
  if (intr.center_mode == ProjectionCenterMode::BoxCenter) {
    *cx = bbox.cx();
    *cy = bbox.cy();
  } else {
    *cx = intr.px;
    *cy = intr.py;
  }
}

void append_run(PointCloud& cloud, const DepthMap& depth, int u, int v0,
                int len, float cx, float cy, const CameraIntrinsics& intr) {
  const std::size_t base = cloud.size();
  cloud.xs.resize(base + static_cast<std::size_t>(len));
  cloud.ys.resize(base + static_cast<std::size_t>(len));
  cloud.zs.resize(base + static_cast<std::size_t>(len));
  const float* src = &depth.values[static_cast<std::size_t>(v0) * depth.width + u];
  const int kept = kernels::active().backproject_run(
      src, depth.width, len, static_cast<float>(u), static_cast<float>(v0), cx,
      cy, intr.fx, intr.fy, cloud.xs.data() + base, cloud.ys.data() + base,
      cloud.zs.data() + base);
  cloud.xs.resize(base + static_cast<std::size_t>(kept));
  cloud.ys.resize(base + static_cast<std::size_t>(kept));
  cloud.zs.resize(base + static_cast<std::size_t>(kept));
}

struct PixelRect {
  int x1, y1, x2, y2;  // half-open
  bool empty() const { return x1 >= x2 || y1 >= y2; }
};

PixelRect clip_box_to_image(const Box& bbox, int width, int height) {
  PixelRect r;
  r.x1 = std::max(0, static_cast<int>(std::floor(bbox.x1)));
  r.y1 = std::max(0, static_cast<int>(std::floor(bbox.y1)));
  r.x2 = std::min(width, static_cast<int>(std::ceil(bbox.x2)));
  r.y2 = std::min(height, static_cast<int>(std::ceil(bbox.y2)));
  return r;
}

}  // namespace

PointCloud backproject(const DepthMap& depth, const RleMask& mask,
                       const Box& bbox, const CameraIntrinsics& intrinsics) {
  if (mask.width != depth.width || mask.height != depth.height)
    raise(ErrorCode::DimensionMismatch, "mask dims differ from depth dims");
  float cx = 0, cy = 0;
  projection_center(bbox, intrinsics, &cx, &cy);
  PointCloud cloud;
  cloud.source_box = bbox;
  for_each_run(mask, [&](int u, int v0, int len) {
    append_run(cloud, depth, u, v0, len, cx, cy, intrinsics);
  });
  return cloud;
}

PointCloud backproject_box(const DepthMap& depth, const Box& bbox,
                           const CameraIntrinsics& intrinsics) {
  float cx = 0, cy = 0;
  projection_center(bbox, intrinsics, &cx, &cy);
  PointCloud cloud;
  cloud.source_box = bbox;
  const PixelRect r = clip_box_to_image(bbox, depth.width, depth.height);
  if (r.empty()) return cloud;
  cloud.reserve(static_cast<std::size_t>(r.x2 - r.x1) * (r.y2 - r.y1));
  for (int u = r.x1; u < r.x2; ++u)
    append_run(cloud, depth, u, r.y1, r.y2 - r.y1, cx, cy, intrinsics);
  return cloud;
}

Aabb cloud_bounds(const PointCloud& cloud) {
  Aabb b;
  b.lo = {cloud.xs[0], cloud.ys[0], cloud.zs[0]};
  b.hi = b.lo;
  const auto fold = [](const std::vector<float>& v, float* lo, float* hi) {
    for (float x : v) {
      *lo = std::min(*lo, x);
      *hi = std::max(*hi, x);
    }
  };
  fold(cloud.xs, &b.lo[0], &b.hi[0]);
  fold(cloud.ys, &b.lo[1], &b.hi[1]);
  fold(cloud.zs, &b.lo[2], &b.hi[2]);
  return b;
}

Aabb joint_bounds(const PointCloud& a, const PointCloud& b) {
  if (a.empty() && b.empty())
    raise(ErrorCode::BothEmpty, "joint bounds of two empty clouds");
  if (a.empty()) return cloud_bounds(b);
  if (b.empty()) return cloud_bounds(a);
  const Aabb ba = cloud_bounds(a);
  const Aabb bb = cloud_bounds(b);
  Aabb out;
  for (int k = 0; k < 3; ++k) {
    out.lo[k] = std::min(ba.lo[k], bb.lo[k]);
    out.hi[k] = std::max(ba.hi[k], bb.hi[k]);
  }
  return out;
}

namespace {

struct GridSpec {
  float voxel;
  std::array<int, 3> dims;
  bool capped;
};

GridSpec grid_spec(const Aabb& bounds, float voxel_size) {
  if (!(voxel_size > 0))
    raise(ErrorCode::NonPositiveVoxelSize, "voxel size must be positive");
  GridSpec spec{voxel_size, {1, 1, 1}, false};
  for (;;) {
    bool fits = true;
    for (int k = 0; k < 3; ++k) {
      const float extent = bounds.hi[k] - bounds.lo[k];
      const int d = std::max(1, static_cast<int>(std::ceil(extent / spec.voxel)));
      spec.dims[k] = d;
      if (d > VoxelGrid::kMaxDim) fits = false;
    }
    if (fits) return spec;
    // Degenerate depth outliers can blow the cell budget; trade resolution
    // for boundedness and report it through the stats counter.
    spec.voxel *= 2.0f;
    spec.capped = true;
  }
}

void fill_keys(const PointCloud& cloud, const Aabb& bounds, const GridSpec& spec,
               std::vector<uint32_t>& keys) {
  keys.resize(cloud.size());
  kernels::active().voxel_keys(cloud.xs.data(), cloud.ys.data(),
                               cloud.zs.data(), cloud.size(), bounds.lo.data(),
                               spec.voxel, spec.dims.data(), keys.data());
  std::sort(keys.begin(), keys.end());
  keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
}

// Exact per-axis cell range of a cloud AABB under the shared grid: the index
// map is monotone in each coordinate, so two clouds whose ranges are disjoint
// on any axis cannot share a cell.
struct CellRange {
  int lo[3], hi[3];
};

int cell_of(float p, float origin, float voxel, int dim) {
  const float t = std::min(
      std::max(std::floor((p - origin) / voxel), 0.0f), float(dim - 1));
  return static_cast<int>(t);
}

CellRange cell_range(const Aabb& cloud, const Aabb& bounds, const GridSpec& spec) {
  CellRange r{};
  for (int k = 0; k < 3; ++k) {
    r.lo[k] = cell_of(cloud.lo[k], bounds.lo[k], spec.voxel, spec.dims[k]);
    r.hi[k] = cell_of(cloud.hi[k], bounds.lo[k], spec.voxel, spec.dims[k]);
  }
  return r;
}

bool ranges_disjoint(const CellRange& a, const CellRange& b) {
  for (int k = 0; k < 3; ++k)
    if (a.hi[k] < b.lo[k] || b.hi[k] < a.lo[k]) return true;
  return false;
}

}  // namespace

VoxelGrid voxelize(const PointCloud& cloud, const Aabb& bounds,
                   float voxel_size, bool* capped) {
  const GridSpec spec = grid_spec(bounds, voxel_size);
  if (capped) *capped = spec.capped;
  VoxelGrid grid;
  grid.origin = bounds.lo;
  grid.voxel_size = spec.voxel;
  grid.dims = spec.dims;
  fill_keys(cloud, bounds, spec, grid.keys);
  return grid;
}

double voxel_iou_3d(const VoxelGrid& a, const VoxelGrid& b) {
  for (int k = 0; k < 3; ++k) {
    if (std::abs(double(a.origin[k]) - double(b.origin[k])) > 1e-9 ||
        a.dims[k] != b.dims[k])
      raise(ErrorCode::GridMismatch, "grids differ in origin or dims");
  }
  if (std::abs(double(a.voxel_size) - double(b.voxel_size)) > 1e-9)
    raise(ErrorCode::GridMismatch, "grids differ in voxel size");
  const std::size_t inter = kernels::active().intersect_sorted(
      a.keys.data(), a.keys.size(), b.keys.data(), b.keys.size());
  const std::size_t uni = a.keys.size() + b.keys.size() - inter;
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

double pair_voxel_iou(const PointCloud& det, const PointCloud& trk,
                      float voxel_size, PairwiseIouStats* stats) {
  if (det.empty() || trk.empty()) return 0.0;
  if (stats) ++stats->pairs;
  const Aabb bd = cloud_bounds(det);
  const Aabb bt = cloud_bounds(trk);
  Aabb bounds;
  for (int k = 0; k < 3; ++k) {
    bounds.lo[k] = std::min(bd.lo[k], bt.lo[k]);
    bounds.hi[k] = std::max(bd.hi[k], bt.hi[k]);
  }
  const GridSpec spec = grid_spec(bounds, voxel_size);
  if (stats && spec.capped) ++stats->voxel_cap_hits;
  if (ranges_disjoint(cell_range(bd, bounds, spec), cell_range(bt, bounds, spec))) {
    if (stats) ++stats->skipped_disjoint;
    return 0.0;
  }
  std::vector<uint32_t> ka, kb;
  fill_keys(det, bounds, spec, ka);
  fill_keys(trk, bounds, spec, kb);
  const std::size_t inter =
      kernels::active().intersect_sorted(ka.data(), ka.size(), kb.data(), kb.size());
  const std::size_t uni = ka.size() + kb.size() - inter;
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

Eigen::MatrixXd pairwise_voxel_iou(const std::vector<const PointCloud*>& dets,
                                   const std::vector<const PointCloud*>& trks,
                                   float voxel_size, PairwiseIouStats* stats,
                                   int threads) {
  const auto rows = static_cast<Eigen::Index>(dets.size());
  const auto cols = static_cast<Eigen::Index>(trks.size());
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(rows, cols);
  if (rows == 0 || cols == 0) return out;

  const auto run_rows = [&](Eigen::Index r0, Eigen::Index r1,
                            PairwiseIouStats* st) {
    for (Eigen::Index i = r0; i < r1; ++i)
      for (Eigen::Index j = 0; j < cols; ++j)
        out(i, j) = pair_voxel_iou(*dets[static_cast<std::size_t>(i)],
                                   *trks[static_cast<std::size_t>(j)],
                                   voxel_size, st);
  };

  const int nthreads = std::max(1, std::min<int>(threads, static_cast<int>(rows)));
  if (nthreads == 1) {
    run_rows(0, rows, stats);
    return out;
  }
  // Each worker owns a row span and a private stats block; entries are pure
  // per-pair computations, so the split never changes values.
  std::vector<PairwiseIouStats> local(static_cast<std::size_t>(nthreads));
  std::vector<std::thread> pool;
  const Eigen::Index chunk = (rows + nthreads - 1) / nthreads;
  for (int t = 0; t < nthreads; ++t) {
    const Eigen::Index r0 = t * chunk;
    const Eigen::Index r1 = std::min(rows, r0 + chunk);
    if (r0 >= r1) break;
    pool.emplace_back(run_rows, r0, r1, &local[static_cast<std::size_t>(t)]);
  }
  for (auto& th : pool) th.join();
  if (stats) {
    for (const auto& s : local) {
      stats->pairs += s.pairs;
      stats->skipped_disjoint += s.skipped_disjoint;
      stats->voxel_cap_hits += s.voxel_cap_hits;
    }
  }
  return out;
}

double mean_masked_depth(const DepthMap& depth, const RleMask& mask,
                         const Box& bbox) {
  if (mask.width != depth.width || mask.height != depth.height)
    raise(ErrorCode::DimensionMismatch, "mask dims differ from depth dims");
  const auto& k = kernels::active();
  double sum = 0;
  std::size_t count = 0;
  for_each_run(mask, [&](int u, int v0, int len) {
    double s = 0;
    std::size_t c = 0;
    k.masked_depth_sum(&depth.values[std::size_t(v0) * depth.width + u],
                       depth.width, len, &s, &c);
    sum += s;
    count += c;
  });
  if (count > 0) return sum / static_cast<double>(count);

  const PixelRect r = clip_box_to_image(bbox, depth.width, depth.height);
  if (r.empty()) return 0.0;
  for (int u = r.x1; u < r.x2; ++u) {
    double s = 0;
    std::size_t c = 0;
    k.masked_depth_sum(&depth.values[std::size_t(r.y1) * depth.width + u],
                       depth.width, r.y2 - r.y1, &s, &c);
    sum += s;
    count += c;
  }
  return count > 0 ? sum / static_cast<double>(count) : 0.0;
}

PointCloud translate_cloud(const PointCloud& cloud, float dx, float dy, float dz) {
  PointCloud out = cloud;
  for (float& x : out.xs) x += dx;
  for (float& y : out.ys) y += dy;
  for (float& z : out.zs) z += dz;
  return out;
}

}  // namespace voxtrack
