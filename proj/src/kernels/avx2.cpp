// SPDX-License-Identifier: Apache-2.0
#include <voxtrack/kernels.hpp>

#include <immintrin.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>

// AVX2 variants of the kernel table. Arithmetic mirrors the scalar reference
// operation for operation (sub/mul/div/floor are all correctly rounded, and
// both TUs are compiled with contraction off), so outputs are bit-identical.

namespace voxtrack::kernels {
namespace {

// Left-packing permutation for _mm256_permutevar8x32_ps: entry m lists the
// indices of the set bits of m in ascending order.
struct PackLut {
  alignas(32) uint32_t idx[256][8];
};

constexpr PackLut make_pack_lut() {
  PackLut lut{};
  for (int m = 0; m < 256; ++m) {
    int out = 0;
    for (int bit = 0; bit < 8; ++bit) {
      if (m & (1 << bit)) lut.idx[m][out++] = static_cast<uint32_t>(bit);
    }
    for (; out < 8; ++out) lut.idx[m][out] = 0;
  }
  return lut;
}

constexpr PackLut kPackLut = make_pack_lut();

inline __m256i stride_index(std::ptrdiff_t stride) {
  const int s = static_cast<int>(stride);
  return _mm256_setr_epi32(0, s, 2 * s, 3 * s, 4 * s, 5 * s, 6 * s, 7 * s);
}

int backproject_run_avx2(const float* depth, std::ptrdiff_t stride, int n,
                         float u, float v0, float cx, float cy, float fx,
                         float fy, float* xs, float* ys, float* zs) {
  const float du = u - cx;
  int out = 0;
  int i = 0;
  if (n >= 8) {
    const __m256i vidx = stride_index(stride);
    const __m256 vdu = _mm256_set1_ps(du);
    const __m256 vfx = _mm256_set1_ps(fx);
    const __m256 vfy = _mm256_set1_ps(fy);
    const __m256 vv0 = _mm256_set1_ps(v0);
    const __m256 vcy = _mm256_set1_ps(cy);
    const __m256 iota = _mm256_setr_ps(0, 1, 2, 3, 4, 5, 6, 7);
    const __m256 zero = _mm256_setzero_ps();
    for (; i + 8 <= n; i += 8) {
      const __m256 z = _mm256_i32gather_ps(
          depth + static_cast<std::ptrdiff_t>(i) * stride, vidx, 4);
      const int m = _mm256_movemask_ps(_mm256_cmp_ps(z, zero, _CMP_GT_OQ));
      if (m == 0) continue;
      // float(i) + lane is exact, so v matches the scalar v0 + float(i+k).
      const __m256 v =
          _mm256_add_ps(vv0, _mm256_add_ps(_mm256_set1_ps(static_cast<float>(i)), iota));
      const __m256 x = _mm256_div_ps(_mm256_mul_ps(vdu, z), vfx);
      const __m256 y =
          _mm256_div_ps(_mm256_mul_ps(_mm256_sub_ps(v, vcy), z), vfy);
      const __m256i perm =
          _mm256_load_si256(reinterpret_cast<const __m256i*>(kPackLut.idx[m]));
      _mm256_storeu_ps(xs + out, _mm256_permutevar8x32_ps(x, perm));
      _mm256_storeu_ps(ys + out, _mm256_permutevar8x32_ps(y, perm));
      _mm256_storeu_ps(zs + out, _mm256_permutevar8x32_ps(z, perm));
      out += std::popcount(static_cast<unsigned>(m));
    }
  }
  for (; i < n; ++i) {
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

void voxel_keys_avx2(const float* xs, const float* ys, const float* zs,
                     std::size_t n, const float origin[3], float voxel,
                     const int dims[3], uint32_t* keys) {
  const float hx = static_cast<float>(dims[0] - 1);
  const float hy = static_cast<float>(dims[1] - 1);
  const float hz = static_cast<float>(dims[2] - 1);
  std::size_t i = 0;
  if (n >= 8) {
    const __m256 vox = _mm256_set1_ps(voxel);
    const __m256 ox = _mm256_set1_ps(origin[0]);
    const __m256 oy = _mm256_set1_ps(origin[1]);
    const __m256 oz = _mm256_set1_ps(origin[2]);
    const __m256 vhx = _mm256_set1_ps(hx);
    const __m256 vhy = _mm256_set1_ps(hy);
    const __m256 vhz = _mm256_set1_ps(hz);
    const __m256 zero = _mm256_setzero_ps();
    for (; i + 8 <= n; i += 8) {
      auto cell = [&](const float* p, __m256 o, __m256 hi) {
        __m256 t = _mm256_div_ps(_mm256_sub_ps(_mm256_loadu_ps(p), o), vox);
        t = _mm256_min_ps(_mm256_max_ps(_mm256_floor_ps(t), zero), hi);
        return _mm256_cvttps_epi32(t);
      };
      const __m256i ix = cell(xs + i, ox, vhx);
      const __m256i iy = cell(ys + i, oy, vhy);
      const __m256i iz = cell(zs + i, oz, vhz);
      const __m256i key = _mm256_or_si256(
          _mm256_or_si256(_mm256_slli_epi32(ix, 18), _mm256_slli_epi32(iy, 9)),
          iz);
      _mm256_storeu_si256(reinterpret_cast<__m256i*>(keys + i), key);
    }
  }
  for (; i < n; ++i) {
    const float tx = std::min(std::max(std::floor((xs[i] - origin[0]) / voxel), 0.0f), hx);
    const float ty = std::min(std::max(std::floor((ys[i] - origin[1]) / voxel), 0.0f), hy);
    const float tz = std::min(std::max(std::floor((zs[i] - origin[2]) / voxel), 0.0f), hz);
    keys[i] = (static_cast<uint32_t>(tx) << 18) |
              (static_cast<uint32_t>(ty) << 9) | static_cast<uint32_t>(tz);
  }
}

void masked_depth_sum_avx2(const float* depth, std::ptrdiff_t stride, int n,
                           double* sum, std::size_t* count) {
  alignas(32) double acc[8] = {0, 0, 0, 0, 0, 0, 0, 0};
  std::size_t cnt = 0;
  int i = 0;
  if (n >= 8) {
    const __m256i vidx = stride_index(stride);
    const __m256 zero = _mm256_setzero_ps();
    __m256d acc_lo = _mm256_setzero_pd();  // lanes 0..3
    __m256d acc_hi = _mm256_setzero_pd();  // lanes 4..7
    for (; i + 8 <= n; i += 8) {
      const __m256 z = _mm256_i32gather_ps(
          depth + static_cast<std::ptrdiff_t>(i) * stride, vidx, 4);
      const __m256 mask = _mm256_cmp_ps(z, zero, _CMP_GT_OQ);
      const __m256 zv = _mm256_and_ps(z, mask);  // invalid lanes become +0.0
      acc_lo = _mm256_add_pd(acc_lo, _mm256_cvtps_pd(_mm256_castps256_ps128(zv)));
      acc_hi = _mm256_add_pd(acc_hi, _mm256_cvtps_pd(_mm256_extractf128_ps(zv, 1)));
      cnt += std::popcount(static_cast<unsigned>(_mm256_movemask_ps(mask)));
    }
    _mm256_store_pd(acc, acc_lo);
    _mm256_store_pd(acc + 4, acc_hi);
  }
  for (; i < n; ++i) {
    const float z = depth[static_cast<std::ptrdiff_t>(i) * stride];
    const bool valid = z > 0.0f;
    acc[i & 7] += valid ? static_cast<double>(z) : 0.0;
    cnt += valid ? 1u : 0u;
  }
  *sum = ((acc[0] + acc[4]) + (acc[2] + acc[6])) +
         ((acc[1] + acc[5]) + (acc[3] + acc[7]));
  *count = cnt;
}

std::size_t intersect_sorted_avx2(const uint32_t* a, std::size_t na,
                                  const uint32_t* b, std::size_t nb) {
  std::size_t i = 0, j = 0, hits = 0;
  // Block-compare 8 keys of a against 8 keys of b. Keys are strictly
  // ascending, so each a-lane matches at most one b value, and advancing
  // whichever block ends no later than the other never skips a match.
  while (i + 8 <= na && j + 8 <= nb) {
    const __m256i va = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(a + i));
    const __m256i vb = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(b + j));
    __m256i any = _mm256_setzero_si256();
    for (int k = 0; k < 8; ++k) {
      const __m256i bk = _mm256_permutevar8x32_epi32(vb, _mm256_set1_epi32(k));
      any = _mm256_or_si256(any, _mm256_cmpeq_epi32(va, bk));
    }
    hits += std::popcount(
        static_cast<unsigned>(_mm256_movemask_ps(_mm256_castsi256_ps(any))));
    const uint32_t amax = a[i + 7], bmax = b[j + 7];
    if (amax <= bmax) i += 8;
    if (bmax <= amax) j += 8;
  }
  while (i < na && j < nb) {
    const uint32_t va = a[i], vb = b[j];
    hits += (va == vb) ? 1u : 0u;
    i += (va <= vb) ? 1u : 0u;
    j += (vb <= va) ? 1u : 0u;
  }
  return hits;
}

}  // namespace

const Table* avx2() {
  static const Table table{
      "avx2",          backproject_run_avx2, voxel_keys_avx2,
      masked_depth_sum_avx2, intersect_sorted_avx2,
  };
  static const Table* resolved =
      __builtin_cpu_supports("avx2") ? &table : nullptr;
  return resolved;
}

}  // namespace voxtrack::kernels
