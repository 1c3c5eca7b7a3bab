// SPDX-License-Identifier: Apache-2.0
#include <voxtrack/rle.hpp>

#include <string>

namespace voxtrack {

void validate_rle(const RleMask& mask) {
  if (mask.width <= 0 || mask.height <= 0)
    raise(ErrorCode::LengthMismatch, "mask dimensions must be positive");
  long long total = 0;
  for (int c : mask.counts) {
    if (c < 0) raise(ErrorCode::LengthMismatch, "negative run length");
    total += c;
  }
  if (total != mask.area())
    raise(ErrorCode::LengthMismatch,
          "run lengths sum to " + std::to_string(total) + ", expected " +
              std::to_string(mask.area()));
}

std::vector<uint8_t> decode_rle(const RleMask& mask) {
  validate_rle(mask);
  std::vector<uint8_t> out(static_cast<std::size_t>(mask.area()), 0);
  const int h = mask.height;
  long long pos = 0;
  uint8_t value = 0;
  for (int c : mask.counts) {
    if (value) {
      for (long long p = pos; p < pos + c; ++p) {
        const long long u = p / h;
        const long long v = p % h;
        out[static_cast<std::size_t>(v) * mask.width + u] = 1;
      }
    }
    pos += c;
    value ^= 1;
  }
  return out;
}

RleMask encode_rle(const uint8_t* matrix, int width, int height) {
  RleMask mask;
  mask.width = width;
  mask.height = height;
  uint8_t current = 0;
  int run = 0;
  for (int u = 0; u < width; ++u) {
    for (int v = 0; v < height; ++v) {
      const uint8_t bit = matrix[static_cast<std::size_t>(v) * width + u] ? 1 : 0;
      if (bit == current) {
        ++run;
      } else {
        mask.counts.push_back(run);
        current = bit;
        run = 1;
      }
    }
  }
  if (run > 0) mask.counts.push_back(run);
  if (mask.counts.empty()) mask.counts.push_back(0);
  return mask;
}

}  // namespace voxtrack
