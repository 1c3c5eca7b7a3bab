// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <voxtrack/types.hpp>

#include <cstdint>
#include <vector>

namespace voxtrack {

/// Throws LengthMismatch when sum(counts) != width * height or a count is
/// negative.
void validate_rle(const RleMask& mask);

/// Expands to a row-major height x width binary matrix (0/1 bytes).
std::vector<uint8_t> decode_rle(const RleMask& mask);

/// Canonical encoding of a row-major binary matrix: column-major scan,
/// zeros first, no zero-length run except a leading one.
RleMask encode_rle(const uint8_t* matrix, int width, int height);

/// Calls fn(u, v0, len) for every run of ones; runs are column segments
/// (u fixed, rows v0..v0+len-1) visited in column-major order. This is the
/// traversal all mask consumers use, so masks never need densifying.
template <typename Fn>
void for_each_run(const RleMask& mask, Fn&& fn) {
  const long long h = mask.height;
  long long pos = 0;
  bool ones = false;
  for (int c : mask.counts) {
    if (ones && c > 0) {
      long long rem = c;
      long long p = pos;
      while (rem > 0) {
        const int u = static_cast<int>(p / h);
        const int v0 = static_cast<int>(p % h);
        const long long len = std::min<long long>(rem, h - v0);
        fn(u, v0, static_cast<int>(len));
        p += len;
        rem -= len;
      }
    }
    pos += c;
    ones = !ones;
  }
}

}  // namespace voxtrack
