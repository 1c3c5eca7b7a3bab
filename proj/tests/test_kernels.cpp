// SPDX-License-Identifier: Apache-2.0
#include <voxtrack/kernels.hpp>
#include <voxtrack/common.hpp>
#include <voxtrack/rng.hpp>

#include <doctest.h>

#include <cmath>
#include <cstring>
#include <vector>

using namespace voxtrack;

namespace {

std::vector<float> random_depth(Pcg32& rng, int n, double invalid_rate) {
  std::vector<float> d(static_cast<std::size_t>(n));
  for (auto& v : d)
    v = rng.uniform() < invalid_rate ? 0.0f
                                     : static_cast<float>(rng.uniform(0.01, 255.0));
  return d;
}

std::vector<const kernels::Table*> variants() {
  std::vector<const kernels::Table*> out{&kernels::scalar()};
  if (kernels::avx2()) out.push_back(kernels::avx2());
  return out;
}

}  // namespace

TEST_SUITE_BEGIN("kernels");

TEST_CASE("backproject_run drops invalid pixels and matches per-pixel math") {
  Pcg32 rng(11, 0);
  for (const auto* table : variants()) {
    for (int n : {0, 1, 5, 8, 13, 64, 257}) {
      const int stride = 17;
      const auto depth = random_depth(rng, n * stride + 1, 0.3);
      const float u = 31, v0 = 4, cx = 20.5f, cy = 50.25f, fx = 600, fy = 590;
      std::vector<float> xs(static_cast<std::size_t>(n) + 1, -1);
      std::vector<float> ys = xs, zs = xs;
      const int kept = table->backproject_run(depth.data(), stride, n, u, v0,
                                              cx, cy, fx, fy, xs.data(),
                                              ys.data(), zs.data());
      int expect = 0;
      for (int i = 0; i < n; ++i) {
        const float z = depth[static_cast<std::size_t>(i) * stride];
        if (!(z > 0.0f)) continue;
        const float x_ref = (u - cx) * z / fx;
        const float y_ref = (v0 + static_cast<float>(i) - cy) * z / fy;
        REQUIRE(xs[static_cast<std::size_t>(expect)] == x_ref);
        REQUIRE(ys[static_cast<std::size_t>(expect)] == y_ref);
        REQUIRE(zs[static_cast<std::size_t>(expect)] == z);
        ++expect;
      }
      CHECK(kept == expect);
    }
  }
}

TEST_CASE("kernel variants agree bit-for-bit") {
  const kernels::Table* simd = kernels::avx2();
  if (!simd) return;  // nothing to compare on this machine
  const kernels::Table& ref = kernels::scalar();
  Pcg32 rng(77, 1);

  for (int round = 0; round < 200; ++round) {
    const int n = 1 + static_cast<int>(rng.below(300));
    const int stride = 1 + static_cast<int>(rng.below(40));
    const auto depth = random_depth(rng, n * stride + 1, 0.25);
    const float u = static_cast<float>(rng.uniform(0, 640));
    const float v0 = static_cast<float>(rng.uniform(0, 480));
    const float cx = static_cast<float>(rng.uniform(0, 640));
    const float cy = static_cast<float>(rng.uniform(0, 480));
    const float fx = static_cast<float>(rng.uniform(100, 1200));
    const float fy = static_cast<float>(rng.uniform(100, 1200));

    std::vector<float> xa(static_cast<std::size_t>(n)), ya(xa), za(xa);
    std::vector<float> xb(xa), yb(xa), zb(xa);
    const int ka = ref.backproject_run(depth.data(), stride, n, u, v0, cx, cy,
                                       fx, fy, xa.data(), ya.data(), za.data());
    const int kb = simd->backproject_run(depth.data(), stride, n, u, v0, cx, cy,
                                         fx, fy, xb.data(), yb.data(), zb.data());
    REQUIRE(ka == kb);
    REQUIRE(std::memcmp(xa.data(), xb.data(), sizeof(float) * ka) == 0);
    REQUIRE(std::memcmp(ya.data(), yb.data(), sizeof(float) * ka) == 0);
    REQUIRE(std::memcmp(za.data(), zb.data(), sizeof(float) * ka) == 0);

    double sum_a = 0, sum_b = 0;
    std::size_t cnt_a = 0, cnt_b = 0;
    ref.masked_depth_sum(depth.data(), stride, n, &sum_a, &cnt_a);
    simd->masked_depth_sum(depth.data(), stride, n, &sum_b, &cnt_b);
    REQUIRE(cnt_a == cnt_b);
    REQUIRE(sum_a == sum_b);  // identical reduction tree, so bit-equal
  }
}

TEST_CASE("voxel_keys matches the clamped floor rule across variants") {
  Pcg32 rng(5, 2);
  for (int round = 0; round < 100; ++round) {
    const std::size_t n = 1 + rng.below(500);
    std::vector<float> xs(n), ys(n), zs(n);
    for (std::size_t i = 0; i < n; ++i) {
      xs[i] = static_cast<float>(rng.uniform(-5, 15));
      ys[i] = static_cast<float>(rng.uniform(-5, 15));
      zs[i] = static_cast<float>(rng.uniform(-5, 15));
    }
    const float origin[3] = {-5.0f, -5.0f, -5.0f};
    const float voxel = static_cast<float>(rng.uniform(0.05, 1.0));
    const int dims[3] = {1 + static_cast<int>(rng.below(512)),
                         1 + static_cast<int>(rng.below(512)),
                         1 + static_cast<int>(rng.below(512))};
    std::vector<uint32_t> keys(n);
    kernels::scalar().voxel_keys(xs.data(), ys.data(), zs.data(), n, origin,
                                 voxel, dims, keys.data());
    for (std::size_t i = 0; i < n; ++i) {
      const auto cell = [&](float p, float o, int dim) {
        const float t = std::min(
            std::max(std::floor((p - o) / voxel), 0.0f), float(dim - 1));
        return static_cast<uint32_t>(t);
      };
      const uint32_t expect = (cell(xs[i], origin[0], dims[0]) << 18) |
                              (cell(ys[i], origin[1], dims[1]) << 9) |
                              cell(zs[i], origin[2], dims[2]);
      REQUIRE(keys[i] == expect);
    }
    if (kernels::avx2()) {
      std::vector<uint32_t> keys2(n);
      kernels::avx2()->voxel_keys(xs.data(), ys.data(), zs.data(), n, origin,
                                  voxel, dims, keys2.data());
      REQUIRE(keys == keys2);
    }
  }
}

TEST_CASE("intersect_sorted equals a reference set intersection") {
  Pcg32 rng(9, 3);
  for (int round = 0; round < 200; ++round) {
    const auto gen = [&rng](std::size_t max_n) {
      std::vector<uint32_t> v;
      uint32_t cur = 0;
      const std::size_t n = rng.below(static_cast<uint32_t>(max_n));
      for (std::size_t i = 0; i < n; ++i) {
        cur += 1 + rng.below(6);
        v.push_back(cur);
      }
      return v;
    };
    const auto a = gen(400);
    const auto b = gen(400);
    std::size_t expect = 0;
    for (uint32_t x : a)
      expect += std::binary_search(b.begin(), b.end(), x) ? 1u : 0u;
    for (const auto* table : variants())
      CHECK(table->intersect_sorted(a.data(), a.size(), b.data(), b.size()) ==
            expect);
  }
}

TEST_CASE("masked_depth_sum counts positives and sums them") {
  const std::vector<float> d{1.0f, 0.0f, 2.5f, 0.0f, 4.0f, 8.0f, 0.0f, 1.5f,
                             3.0f, 0.0f, 6.0f};
  for (const auto* table : variants()) {
    double sum = 0;
    std::size_t count = 0;
    table->masked_depth_sum(d.data(), 1, static_cast<int>(d.size()), &sum, &count);
    CHECK(count == 7);
    CHECK(sum == doctest::Approx(26.0).epsilon(1e-12));
  }
}

TEST_CASE("dispatch honours force()") {
  kernels::force("scalar");
  CHECK(std::string(kernels::active().name) == "scalar");
  kernels::force("auto");
  if (kernels::avx2()) CHECK(std::string(kernels::active().name) == "avx2");
  CHECK_THROWS_AS(kernels::force("sse9"), Error);
}

TEST_SUITE_END();
