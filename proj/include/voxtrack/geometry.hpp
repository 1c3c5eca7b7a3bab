// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <voxtrack/types.hpp>

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

namespace voxtrack {

/// Camera-frame points, structure-of-arrays so the kernels stream them.
/// x and y are metric-like (pixel offset times depth over focal length),
/// z is in scaled depth units.
struct PointCloud {
  std::vector<float> xs, ys, zs;
  Box source_box;

  std::size_t size() const { return xs.size(); }
  bool empty() const { return xs.empty(); }
  void reserve(std::size_t n) {
    xs.reserve(n);
    ys.reserve(n);
    zs.reserve(n);
  }
};

struct Aabb {
  std::array<float, 3> lo{}, hi{};
};

/// Sparse binary occupancy grid. Occupied cells are kept as sorted unique
/// packed keys, (ix << 18) | (iy << 9) | iz, which bounds dims at 512 per
/// axis and makes intersection a linear merge.
struct VoxelGrid {
  std::array<float, 3> origin{};
  float voxel_size = 0;
  std::array<int, 3> dims{1, 1, 1};
  std::vector<uint32_t> keys;

  std::size_t occupied_count() const { return keys.size(); }
  static constexpr int kMaxDim = 512;
  static std::array<int, 3> unpack(uint32_t key) {
    return {static_cast<int>(key >> 18), static_cast<int>((key >> 9) & 0x1ff),
            static_cast<int>(key & 0x1ff)};
  }
  static uint32_t pack(int ix, int iy, int iz) {
    return (static_cast<uint32_t>(ix) << 18) |
           (static_cast<uint32_t>(iy) << 9) | static_cast<uint32_t>(iz);
  }
};

/// Mask-guided back-projection: one point per pixel with mask = 1 and
/// depth > 0. The projection centre is the bbox centre in BoxCenter mode,
/// else the fixed principal point. Throws DimensionMismatch when mask and
/// depth dims differ.
PointCloud backproject(const DepthMap& depth, const RleMask& mask,
                       const Box& bbox, const CameraIntrinsics& intrinsics);

/// Bounding-box projection: every pixel of the bbox (clipped to the image)
/// with depth > 0, mask ignored.
PointCloud backproject_box(const DepthMap& depth, const Box& bbox,
                           const CameraIntrinsics& intrinsics);

/// Componentwise min/max over both clouds. Throws BothEmpty.
Aabb joint_bounds(const PointCloud& a, const PointCloud& b);

Aabb cloud_bounds(const PointCloud& cloud);  // cloud must be non-empty

/// floor((p - lo) / voxel_size) per axis, clamped into [0, dims-1];
/// dims = max(1, ceil(extent / voxel_size)). When any axis would exceed 512
/// cells the effective voxel size is doubled until it fits and *capped is
/// set. Duplicate cells collapse.
VoxelGrid voxelize(const PointCloud& cloud, const Aabb& bounds,
                   float voxel_size, bool* capped = nullptr);

/// |A ∩ B| / |A ∪ B| over occupied cells; 0 when the union is empty.
/// Grids must share origin, voxel size (within 1e-9) and dims exactly,
/// else GridMismatch.
double voxel_iou_3d(const VoxelGrid& a, const VoxelGrid& b);

struct PairwiseIouStats {
  long pairs = 0;
  long skipped_disjoint = 0;  // resolved by the exact AABB cell-range test
  long voxel_cap_hits = 0;
};

/// dets x trks matrix of voxel IoUs; each pair is voxelized in its own
/// joint-bounds grid. Entries with an empty cloud on either side are 0.
/// Deterministic regardless of `threads`.
Eigen::MatrixXd pairwise_voxel_iou(const std::vector<const PointCloud*>& dets,
                                   const std::vector<const PointCloud*>& trks,
                                   float voxel_size,
                                   PairwiseIouStats* stats = nullptr,
                                   int threads = 1);

/// Voxel IoU of one (det, trk) pair in a fresh joint-bounds grid.
double pair_voxel_iou(const PointCloud& det, const PointCloud& trk,
                      float voxel_size, PairwiseIouStats* stats = nullptr);

/// Mean depth over pixels with mask = 1 and depth > 0. Falls back to the
/// mean of valid depths over the bbox region when the masked set is empty,
/// then to 0 when the bbox region holds no valid depth either.
double mean_masked_depth(const DepthMap& depth, const RleMask& mask,
                         const Box& bbox);

PointCloud translate_cloud(const PointCloud& cloud, float dx, float dy, float dz);

}  // namespace voxtrack
