// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <voxtrack/common.hpp>

#include <Eigen/Dense>

#include <vector>

namespace voxtrack {

using Vec5 = Eigen::Matrix<double, 5, 1>;
using Vec9 = Eigen::Matrix<double, 9, 1>;
using Mat5 = Eigen::Matrix<double, 5, 5>;
using Mat9 = Eigen::Matrix<double, 9, 9>;

// State layout: [x, y, s, r, d, vx, vy, vs, vd]
//   x, y  box centre (px)        s  box area (px^2)   r  aspect ratio (w/h)
//   d     mean scaled depth      v* per-frame velocities; r carries none.
struct TrackState {
  Vec9 x = Vec9::Zero();
  Mat9 P = Mat9::Zero();
  double lambda = 1.0;   // process-noise scale, >= 1
  int clamp_events = 0;  // times s or r had to be clamped positive
};

struct NoiseConfig {
  Mat9 q_base = Mat9::Identity();
  Mat5 r = Mat5::Identity();
  double alpha = 3.0;    // occlusion sensitivity factor
  double tau_iou = 0.6;  // pairwise occlusion overlap threshold

  /// SORT-style diagonal weights extended with depth terms: depth position
  /// variance 1.0 and depth velocity variance 0.01 in q_base, depth
  /// observation variance 1.0 in r.
  static NoiseConfig defaults();
};

/// Position block from the observation, velocities zero, inflated velocity
/// covariance, lambda 1. Throws NonPositiveGeometry when s or r <= 0.
TrackState kf_init(const Vec5& obs);

/// Constant-velocity propagation (x += vx, y += vy, s += vs, d += vd; r
/// unchanged) with P <- F P F' + lambda * q_base; s floored at a small
/// positive epsilon, P re-symmetrized.
void kf_predict(TrackState& state, const NoiseConfig& noise);

/// Joseph-form correction against the observed [x, y, s, r, d]. Returns
/// false (state untouched) when the innovation covariance is singular.
bool kf_update(TrackState& state, const Vec5& obs, const NoiseConfig& noise);

/// occ(i) is true iff some other box overlaps b_i with IoU > tau_iou and
/// lies nearer to the camera (d_i > d_j). Throws LengthMismatch.
std::vector<bool> occlusion_status(const std::vector<Box>& boxes,
                                   const std::vector<double>& depths,
                                   double tau_iou);

/// Same, but against a precomputed symmetric IoU matrix so the caller can
/// choose between box IoU and voxel IoU.
std::vector<bool> occlusion_status_from_iou(const Eigen::MatrixXd& iou,
                                            const std::vector<double>& depths,
                                            double tau_iou);

/// Max IoU of b_i with its occluders (pairs meeting the occ condition);
/// 0 when occ(i) is false.
double occlusion_score(int i, const std::vector<Box>& boxes,
                       const std::vector<double>& depths, double tau_iou);

double occlusion_score_from_iou(int i, const Eigen::MatrixXd& iou,
                                const std::vector<double>& depths,
                                double tau_iou);

/// 1 + alpha * score when occluded, else 1.
double noise_scale(bool occluded, double score, double alpha);

/// [cx, cy, area, aspect, depth] from a box plus its mean depth.
Vec5 obs_from_box(const Box& box, double depth);

/// Inverse of obs_from_box on the geometric components.
Box box_from_state(const Vec9& x);

}  // namespace voxtrack
