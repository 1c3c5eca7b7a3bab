// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <voxtrack/common.hpp>

#include <vector>

namespace voxtrack {

enum class ProjectionCenterMode { BoxCenter, PrincipalPoint };

struct CameraIntrinsics {
  float fx = 0, fy = 0;
  int width = 0, height = 0;
  ProjectionCenterMode center_mode = ProjectionCenterMode::BoxCenter;
  float px = 0, py = 0;  // principal point, used in PrincipalPoint mode

  /// Throws MalformedManifest when any invariant is violated.
  void validate() const;
};

/// Column-major run-length mask, runs alternate 0/1 starting with zeros.
/// sum(counts) must equal width * height.
struct RleMask {
  int width = 0, height = 0;
  std::vector<int> counts;

  long long area() const { return static_cast<long long>(width) * height; }
};

/// Scaled relative depth in [0, 255], larger = farther; 0 marks invalid.
struct DepthMap {
  int width = 0, height = 0;
  std::vector<float> values;  // row-major

  float at(int v, int u) const { return values[static_cast<std::size_t>(v) * width + u]; }
  float& at(int v, int u) { return values[static_cast<std::size_t>(v) * width + u]; }
};

struct Detection {
  Box bbox;
  float score = 0;
  RleMask mask;
  std::vector<float> embedding;  // empty or unit-norm

  bool has_embedding() const { return !embedding.empty(); }
};

struct FrameRecord {
  int frame_index = 0;  // 1-based
  DepthMap depth;
  std::vector<Detection> detections;
};

struct TrackOutputRow {
  int frame = 0;
  int id = 0;
  double bb_left = 0, bb_top = 0, bb_width = 0, bb_height = 0;
  double conf = 0;
};

}  // namespace voxtrack
