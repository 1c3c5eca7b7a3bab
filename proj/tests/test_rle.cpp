// SPDX-License-Identifier: Apache-2.0
#include <voxtrack/rle.hpp>
#include <voxtrack/rng.hpp>

#include <doctest.h>

#include <algorithm>

using namespace voxtrack;

TEST_SUITE_BEGIN("rle");

TEST_CASE("column-major expansion, zeros first") {
  RleMask m{7, 1, {2, 3, 2}};
  const auto bits = decode_rle(m);
  const std::vector<uint8_t> expect{0, 0, 1, 1, 1, 0, 0};
  CHECK(bits == expect);
}

TEST_CASE("degenerate leading run gives an all-ones mask") {
  RleMask m{4, 3, {0, 12}};
  const auto bits = decode_rle(m);
  CHECK(std::count(bits.begin(), bits.end(), 1) == 12);
}

TEST_CASE("column-major order is respected") {
  // 2x2; the column-major scan is (0,0),(1,0),(0,1),(1,1). Skipping one and
  // setting the next two must light (1,0) and (0,1).
  RleMask m{2, 2, {1, 2, 1}};
  const auto bits = decode_rle(m);
  CHECK(bits[0] == 0);  // (0,0)
  CHECK(bits[2] == 1);  // (1,0)
  CHECK(bits[1] == 1);  // (0,1)
  CHECK(bits[3] == 0);  // (1,1)
}

TEST_CASE("count sum must equal the area") {
  RleMask m{4, 4, {3, 4}};
  CHECK_THROWS_AS(decode_rle(m), Error);
  try {
    decode_rle(m);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::LengthMismatch);
  }
  RleMask neg{2, 2, {5, -1}};
  CHECK_THROWS_AS(validate_rle(neg), Error);
}

TEST_CASE("decode/encode round-trips random masks") {
  Pcg32 rng(123, 0);
  for (int round = 0; round < 50; ++round) {
    const int w = 1 + static_cast<int>(rng.below(40));
    const int h = 1 + static_cast<int>(rng.below(40));
    std::vector<uint8_t> bits(static_cast<std::size_t>(w) * h);
    for (auto& b : bits) b = rng.uniform() < 0.4 ? 1 : 0;
    const RleMask encoded = encode_rle(bits.data(), w, h);
    CHECK(decode_rle(encoded) == bits);
    // encode(decode(c)) is the canonical form of c
    const RleMask twice = encode_rle(decode_rle(encoded).data(), w, h);
    CHECK(twice.counts == encoded.counts);
  }
}

TEST_CASE("for_each_run visits exactly the set pixels as column segments") {
  Pcg32 rng(7, 0);
  const int w = 23, h = 17;
  std::vector<uint8_t> bits(static_cast<std::size_t>(w) * h);
  for (auto& b : bits) b = rng.uniform() < 0.5 ? 1 : 0;
  const RleMask m = encode_rle(bits.data(), w, h);
  std::vector<uint8_t> seen(bits.size(), 0);
  for_each_run(m, [&](int u, int v0, int len) {
    for (int v = v0; v < v0 + len; ++v) {
      CHECK(seen[static_cast<std::size_t>(v) * w + u] == 0);
      seen[static_cast<std::size_t>(v) * w + u] = 1;
    }
  });
  CHECK(seen == bits);
}

TEST_SUITE_END();
