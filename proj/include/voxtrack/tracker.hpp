// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <voxtrack/association.hpp>
#include <voxtrack/motion.hpp>
#include <voxtrack/sequence.hpp>

#include <deque>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace voxtrack {

enum class TrackStatus { Tentative, Confirmed, Lost, Removed };

enum class OcclusionMetric { Box2D, Voxel3D };
enum class ProjectionMode { MaskGuided, BoundingBox };
enum class TrackCloudMode { PredictTranslate, StaticLast };

struct Track {
  int id = 0;
  TrackStatus status = TrackStatus::Tentative;
  TrackState state;
  int hits = 1;
  int time_since_update = 0;
  int age = 1;

  PointCloud last_cloud;
  Box last_box;
  Eigen::Vector3d last_obs = Eigen::Vector3d::Zero();  // (u, v, d)
  int last_obs_frame = 0;
  double last_conf = 0;
  float cloud_mean_z = 0;

  // (frame, (u, v, d)) of recent confirmed observations, oldest first.
  std::deque<std::pair<int, Eigen::Vector3d>> obs_history;
  // Most recent historical displacement vectors (latest at the back).
  std::deque<Eigen::Vector3d> velocity_history;
  std::vector<float> embedding;
};

struct TrackerConfig {
  double delta_v = 0.4;
  double alpha = 3.0;
  double tau_iou = 0.6;
  double score_high = 0.6;
  double score_low = 0.1;
  int min_hits = 3;
  int max_age = 30;
  CostWeights weights;        // w_iou 1.0, w_docm 0.2, w_app 0.25, gate 0.0
  double gate_iou_low = 0.1;  // stages 2-3
  OcclusionMetric occlusion_metric = OcclusionMetric::Box2D;
  ProjectionMode projection_mode = ProjectionMode::MaskGuided;
  double kappa = 1.0;  // depth-axis scale in the DOCM displacement
  IouMode iou_mode = IouMode::Voxel3D;
  bool danc = true;
  bool docm = true;
  TrackCloudMode track_cloud_mode = TrackCloudMode::PredictTranslate;
  int delta_t_hist = 3;
  double ema_embedding = 0.9;
  double q_depth = 1.0;      // depth position variance in Q_base
  double q_depth_vel = 0.01; // depth velocity variance in Q_base
  double r_depth = 1.0;      // depth observation variance in R
  int threads = 1;

  void validate() const;  // throws BadConfig
  NoiseConfig noise() const;
};

/// Flat key=value form; every field above round-trips. Unknown keys and
/// malformed values raise BadConfig.
std::string serialize_config(const TrackerConfig& config);
TrackerConfig parse_config_text(const std::string& text);
TrackerConfig load_config_file(const std::filesystem::path& path);
void apply_config_entry(TrackerConfig& config, const std::string& key,
                        const std::string& value);

struct RunStats {
  int frames = 0;
  double total_ms = 0;
  double max_frame_ms = 0;
  long voxel_cap_hits = 0;
  long iou_pairs = 0;
  long iou_pairs_skipped = 0;
  int tracks_created = 0;
  int tracks_removed = 0;
  long rows_emitted = 0;
  std::string kernel_variant;

  std::string to_text(const TrackerConfig& config) const;
};

/// Per-frame pipeline: predict with each track's stored noise scale,
/// reconstruct detection geometry, associate, update, re-assess occlusion
/// for the next frame, spawn and retire tracks, emit rows for confirmed
/// tracks updated this frame.
class VoxelTracker {
 public:
  VoxelTracker(const CameraIntrinsics& intrinsics, const TrackerConfig& config);

  /// Frames must arrive with strictly increasing indices (OutOfOrderFrame).
  std::vector<TrackOutputRow> step(const FrameRecord& frame);

  const std::vector<Track>& tracks() const { return tracks_; }
  RunStats& stats() { return stats_; }

 private:
  void assess_occlusion(const FrameRecord& frame,
                        const std::vector<DetectionFeatures>& dets,
                        const std::vector<PointCloud>& clouds,
                        const std::vector<double>& depths,
                        const AssociationResult& assoc);
  void refresh_observation(Track& track, const Detection& det,
                           PointCloud&& cloud, const Eigen::Vector3d& obs,
                           int frame_index);

  CameraIntrinsics intrinsics_;
  TrackerConfig config_;
  NoiseConfig noise_;
  std::vector<Track> tracks_;
  int next_id_ = 1;
  int last_frame_ = 0;
  RunStats stats_;
};

std::pair<std::vector<TrackOutputRow>, RunStats> run_sequence(
    const Sequence& seq, const TrackerConfig& config);

}  // namespace voxtrack
