// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>

// Data-parallel inner loops of the tracker: pinhole back-projection of mask
// runs, voxel-index computation, masked depth reduction, and sorted-set
// intersection for the voxel IoU. Each kernel ships as a scalar reference
// implementation plus an AVX2 variant selected at runtime.
//
// The two variants are required to produce bit-identical output. Every
// floating-point kernel is therefore specified as a fixed sequence of
// IEEE-754 operations, including the reduction order, and the translation
// units are built with FP contraction disabled.

namespace voxtrack::kernels {

struct Table {
  const char* name;

  // Pinhole back-projection of one vertical pixel run: u fixed, v in
  // [v0, v0+n). `depth` points at D(v0, u) and advances by `stride` floats
  // per row. Pixels with depth <= 0 are dropped; survivors are left-packed
  // into xs/ys/zs in run order. Returns the number of points written.
  //   Z = D(u, v),  X = (u - cx) * Z / fx,  Y = (v - cy) * Z / fy
  int (*backproject_run)(const float* depth, std::ptrdiff_t stride, int n,
                         float u, float v0, float cx, float cy, float fx,
                         float fy, float* xs, float* ys, float* zs);

  // Packed voxel keys, key = (ix << 18) | (iy << 9) | iz with
  //   i = (int)min(max(floor((p - origin) / voxel), 0), dim - 1)
  // computed in single precision. Requires dims[k] in [1, 512].
  void (*voxel_keys)(const float* xs, const float* ys, const float* zs,
                     std::size_t n, const float origin[3], float voxel,
                     const int dims[3], uint32_t* keys);

  // Sum of strictly positive values over a strided run, plus their count.
  // The sum is accumulated in eight double lanes indexed by (element mod 8)
  // and combined in a fixed pairwise order, which pins the reduction order
  // across variants: skipped elements contribute an exact +0.0.
  void (*masked_depth_sum)(const float* depth, std::ptrdiff_t stride, int n,
                           double* sum, std::size_t* count);

  // |a ∩ b| for ascending, duplicate-free key arrays.
  std::size_t (*intersect_sorted)(const uint32_t* a, std::size_t na,
                                  const uint32_t* b, std::size_t nb);
};

/// Scalar reference kernels; always available.
const Table& scalar();

/// AVX2 kernels, or nullptr when unsupported by the build or the CPU.
const Table* avx2();

/// The dispatched table. Defaults to the best supported variant; the
/// VOXTRACK_KERNELS environment variable ("scalar", "avx2", "auto")
/// overrides the choice before first use.
const Table& active();

/// Force a variant by name ("scalar", "avx2", "auto"). Throws on a name
/// that is not available.
void force(const char* name);

}  // namespace voxtrack::kernels
