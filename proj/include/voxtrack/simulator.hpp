// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <voxtrack/rng.hpp>
#include <voxtrack/sequence.hpp>

#include <filesystem>
#include <vector>

namespace voxtrack {

// Objects are rendered as frontal faces of axis-aligned boxes: a rectangle
// at constant depth per frame, projected through the pinhole model with the
// principal point at the image centre. Per-pixel depth is resolved by a
// z-buffer (nearest face wins, lower id on ties), so nearer objects carve
// the masks of farther ones and every analytic quantity in the ground truth
// is exact.

enum class TrajectoryKind { Linear, Circular, DepthApproach };

struct ObjectSpec {
  TrajectoryKind kind = TrajectoryKind::Linear;
  // Linear / DepthApproach: image-plane start and per-frame velocity.
  double u0 = 0, v0 = 0;
  double du = 0, dv = 0;
  double z0 = 100, dz = 0;  // depth start and per-frame ramp
  // Linear only: velocity scaled by slow_factor for frames in
  // [slow_from, slow_to] (1-based, inclusive).
  int slow_from = 0, slow_to = -1;
  double slow_factor = 1.0;
  // Circular: orbit of the image-plane centre.
  double orbit_cu = 0, orbit_cv = 0, orbit_radius = 0;
  double orbit_omega = 0, orbit_phase = 0;
  // Physical half extents; projected half size is f * half / depth.
  double half_w = 5, half_h = 6;
};

struct DetectionNoise {
  double bbox_sigma = 1.5;      // per-edge jitter, px
  double miss_rate = 0.05;      // miss probability at full visibility
  double fp_rate = 0.05;        // false-positive probability per slot
  double score_sigma = 0.05;
  double embedding_sigma = 0.25;
};

struct SceneSpec {
  int n_frames = 60;
  int width = 640, height = 480;
  double fx = 600, fy = 600;
  ProjectionCenterMode center_mode = ProjectionCenterMode::BoxCenter;
  double background_depth = 0.0;  // 0 leaves non-object pixels invalid
  std::vector<ObjectSpec> objects;
  DetectionNoise noise;
  int embedding_dim = 0;  // 0 disables embeddings
  uint64_t seed = 0;
};

struct GtEntry {
  int frame = 0;
  int id = 0;  // 1-based, stable across frames
  Box box;     // full projected box, clipped to the image
  double depth = 0;
  double visibility = 0;  // surviving pixels / covered pixels
};

struct GroundTruth {
  int n_frames = 0;
  std::vector<GtEntry> entries;  // sorted by (frame, id)

  std::vector<const GtEntry*> frame_entries(int frame) const;
};

struct DegradedDet {
  Box box;
  double score = 0;
  int source_id = 0;  // 0 marks a false positive
};

/// Detector noise model. Per entry the miss probability is
/// miss_rate + (1 - miss_rate) * (1 - visibility); surviving boxes get
/// N(0, sigma) jitter per edge and score 1 - 0.7 * (1 - visibility) plus
/// noise, clamped to [0.01, 1]. Each of n_slots then spawns a false
/// positive with probability fp_rate, uniform over the image, score in
/// [0.1, 0.55). Draw order is fixed (miss, 4 edges, score per entry, then
/// 6 draws per slot) so outcomes never shift between entries.
std::vector<DegradedDet> degrade_frame(
    const std::vector<const GtEntry*>& entries, const DetectionNoise& noise,
    int width, int height, int n_slots, Pcg32& rng);

/// Whole-truth wrapper over degrade_frame; frame t uses RNG stream t.
std::vector<std::vector<DegradedDet>> degrade(const GroundTruth& gt,
                                              const DetectionNoise& noise,
                                              int width, int height,
                                              uint64_t seed);

/// Renders the scene, writes the sequence directory plus gt.txt, and
/// returns the ground truth. Identical specs produce byte-identical
/// directories.
GroundTruth generate_scene(const SceneSpec& spec,
                           const std::filesystem::path& out_dir);

void write_gt_file(const GroundTruth& gt, const std::filesystem::path& path);

/// Two objects at distinct depths swapping image positions: the nearer one
/// brakes through the crossing while the farther one passes behind it with
/// heavy 2D overlap mid-sequence.
SceneSpec crossing_preset(uint64_t seed);

/// n objects on a depth ladder mixing linear, circular and depth-approach
/// trajectories, with embeddings and false positives enabled.
SceneSpec mixed_preset(int n_objects, uint64_t seed);

}  // namespace voxtrack
