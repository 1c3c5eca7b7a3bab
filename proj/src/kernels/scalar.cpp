// SPDX-License-Identifier: Apache-2.0
#include <voxtrack/kernels.hpp>

#include <algorithm>
#include <cmath>

namespace voxtrack::kernels {
namespace {

int backproject_run_scalar(const float* depth, std::ptrdiff_t stride, int n,
                           float u, float v0, float cx, float cy, float fx,
                           float fy, float* xs, float* ys, float* zs) {
  const float du = u - cx;
  int out = 0;
  for (int i = 0; i < n; ++i) {
    const float z = depth[static_cast<std::ptrdiff_t>(i) * stride];
    if (z > 0.0f) {
      const float v = v0 + static_cast<float>(i);
      xs[out] = du * z / fx;
      ys[out] = (v - cy) * z / fy;
      zs[out] = z;
      ++out;
    }
  }
  return out;
}

void voxel_keys_scalar(const float* xs, const float* ys, const float* zs,
                       std::size_t n, const float origin[3], float voxel,
                       const int dims[3], uint32_t* keys) {
  const float hx = static_cast<float>(dims[0] - 1);
  const float hy = static_cast<float>(dims[1] - 1);
  const float hz = static_cast<float>(dims[2] - 1);
  for (std::size_t i = 0; i < n; ++i) {
    const float tx = std::min(std::max(std::floor((xs[i] - origin[0]) / voxel), 0.0f), hx);
    const float ty = std::min(std::max(std::floor((ys[i] - origin[1]) / voxel), 0.0f), hy);
    const float tz = std::min(std::max(std::floor((zs[i] - origin[2]) / voxel), 0.0f), hz);
    keys[i] = (static_cast<uint32_t>(tx) << 18) |
              (static_cast<uint32_t>(ty) << 9) | static_cast<uint32_t>(tz);
  }
}

void masked_depth_sum_scalar(const float* depth, std::ptrdiff_t stride, int n,
                             double* sum, std::size_t* count) {
  double acc[8] = {0, 0, 0, 0, 0, 0, 0, 0};
  std::size_t cnt = 0;
  for (int i = 0; i < n; ++i) {
    const float z = depth[static_cast<std::ptrdiff_t>(i) * stride];
    const bool valid = z > 0.0f;
    // Adding an exact 0.0 for skipped lanes keeps the accumulation order
    // identical to the vector variant.
    acc[i & 7] += valid ? static_cast<double>(z) : 0.0;
    cnt += valid ? 1u : 0u;
  }
  *sum = ((acc[0] + acc[4]) + (acc[2] + acc[6])) +
         ((acc[1] + acc[5]) + (acc[3] + acc[7]));
  *count = cnt;
}

std::size_t intersect_sorted_scalar(const uint32_t* a, std::size_t na,
                                    const uint32_t* b, std::size_t nb) {
  std::size_t i = 0, j = 0, hits = 0;
  while (i < na && j < nb) {
    const uint32_t va = a[i], vb = b[j];
    hits += (va == vb) ? 1u : 0u;
    i += (va <= vb) ? 1u : 0u;
    j += (vb <= va) ? 1u : 0u;
  }
  return hits;
}

}  // namespace

const Table& scalar() {
  static const Table table{
      "scalar",          backproject_run_scalar, voxel_keys_scalar,
      masked_depth_sum_scalar, intersect_sorted_scalar,
  };
  return table;
}

}  // namespace voxtrack::kernels
