// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <voxtrack/geometry.hpp>

#include <Eigen/Dense>

#include <optional>
#include <utility>
#include <vector>

namespace voxtrack {

enum class IouMode { Voxel3D, Box2D };

struct CostWeights {
  double w_iou = 1.0;
  double w_docm = 0.2;
  double w_app = 0.25;
  double gate_iou = 0.0;  // entries with IoU below this are forbidden
};

struct AssociationResult {
  std::vector<std::pair<int, int>> matches;  // (track_idx, det_idx)
  std::vector<int> unmatched_tracks;
  std::vector<int> unmatched_dets;
};

/// 3D displacement (du, dv, kappa * dd) between two (u, v, d) observations.
Eigen::Vector3d docm_displacement(const Eigen::Vector3d& prev,
                                  const Eigen::Vector3d& curr, double kappa);

/// Cosine similarity of the historical and current displacement; 0 when
/// either norm is below 1e-9.
double docm_consistency(const Eigen::Vector3d& v_hist,
                        const Eigen::Vector3d& v_curr);

/// cost = -(w_iou * iou + w_docm * docm + w_app * app); entries whose IoU is
/// below the gate become +inf. `app` may be null. Throws ShapeMismatch.
Eigen::MatrixXd build_cost_matrix(const Eigen::MatrixXd& ious,
                                  const Eigen::MatrixXd& docm,
                                  const Eigen::MatrixXd* app,
                                  const CostWeights& weights);

/// Minimum-total-cost matching where leaving a row or column unmatched is
/// free: a pair enters the solution only when it strictly lowers the total,
/// and +inf entries are forbidden outright. Among equal-cost optima the
/// lexicographically lowest (row, col) match list is returned (guaranteed
/// up to 32x32; larger problems keep the solver's deterministic choice).
AssociationResult linear_assignment(const Eigen::MatrixXd& cost);

/// Complete minimum-cost assignment of a square finite matrix; row -> col.
/// Building block for the metrics module, where every row must be assigned.
std::vector<int> solve_square_assignment(const Eigen::MatrixXd& cost);

struct TrackFeatures {
  Box predicted_box;
  const PointCloud* match_cloud = nullptr;  // geometry used in stages 1-2
  const PointCloud* last_cloud = nullptr;   // last observed cloud, stage 3
  Box last_box;                             // last observed box, stage 3
  Eigen::Vector3d last_obs = Eigen::Vector3d::Zero();  // (u, v, d)
  std::optional<Eigen::Vector3d> v_hist;
  const std::vector<float>* embedding = nullptr;
};

struct DetectionFeatures {
  Box box;
  float score = 0;
  const PointCloud* cloud = nullptr;
  Eigen::Vector3d obs = Eigen::Vector3d::Zero();  // (u, v, d)
  const std::vector<float>* embedding = nullptr;
};

struct CascadeConfig {
  CostWeights weights;        // stage 1
  double gate_iou_low = 0.1;  // stages 2 and 3
  double score_high = 0.6;
  double score_low = 0.1;
  IouMode iou_mode = IouMode::Voxel3D;
  double kappa = 1.0;
  float delta_v = 0.4f;
  bool use_docm = true;
  int threads = 1;
  PairwiseIouStats* iou_stats = nullptr;
};

/// Stage 1: high-score detections vs all tracks, combined cost.
/// Stage 2: low-score detections vs stage-1 leftovers, IoU only.
/// Stage 3: recovery of still-unmatched tracks against leftover high-score
/// detections by overlap with the track's last observation.
/// Detections below score_low stay unmatched. The three output sets
/// partition the inputs.
AssociationResult associate_cascade(const std::vector<TrackFeatures>& tracks,
                                    const std::vector<DetectionFeatures>& dets,
                                    const CascadeConfig& config);

}  // namespace voxtrack
