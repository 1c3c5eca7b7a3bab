// SPDX-License-Identifier: Apache-2.0
#include <voxtrack/motion.hpp>

#include <cmath>

namespace voxtrack {

namespace {

constexpr double kMinArea = 1e-6;
constexpr double kMinAspect = 1e-6;

Eigen::Matrix<double, 9, 9> transition() {
  Mat9 f = Mat9::Identity();
  f(0, 5) = 1;  // x += vx
  f(1, 6) = 1;  // y += vy
  f(2, 7) = 1;  // s += vs
  f(4, 8) = 1;  // d += vd
  return f;
}

Eigen::Matrix<double, 5, 9> observation() {
  Eigen::Matrix<double, 5, 9> h = Eigen::Matrix<double, 5, 9>::Zero();
  for (int i = 0; i < 5; ++i) h(i, i) = 1;
  return h;
}

void clamp_geometry(TrackState& state) {
  if (!(state.x[2] > 0)) {
    state.x[2] = kMinArea;
    ++state.clamp_events;
  }
  if (!(state.x[3] > 0)) {
    state.x[3] = kMinAspect;
    ++state.clamp_events;
  }
}

}  // namespace

NoiseConfig NoiseConfig::defaults() {
  NoiseConfig n;
  Vec9 q;
  q << 1.0, 1.0, 1.0, 1.0, 1.0, 0.01, 0.01, 1e-4, 0.01;
  n.q_base = q.asDiagonal();
  Vec5 r;
  r << 1.0, 1.0, 10.0, 10.0, 1.0;
  n.r = r.asDiagonal();
  return n;
}

TrackState kf_init(const Vec5& obs) {
  if (!(obs[2] > 0) || !(obs[3] > 0))
    raise(ErrorCode::NonPositiveGeometry, "area and aspect must be positive");
  TrackState state;
  state.x.head<5>() = obs;
  Vec9 p;
  p << 10.0, 10.0, 10.0, 10.0, 10.0, 1e4, 1e4, 1e4, 1e4;
  state.P = p.asDiagonal();
  state.lambda = 1.0;
  return state;
}

void kf_predict(TrackState& state, const NoiseConfig& noise) {
  static const Mat9 f = transition();
  state.x = f * state.x;
  if (state.x[2] < kMinArea) state.x[2] = kMinArea;
  state.P = f * state.P * f.transpose() + state.lambda * noise.q_base;
  state.P = 0.5 * (state.P + state.P.transpose()).eval();
}

bool kf_update(TrackState& state, const Vec5& obs, const NoiseConfig& noise) {
  static const Eigen::Matrix<double, 5, 9> h = observation();
  const Vec5 innovation = obs - h * state.x;
  const Mat5 s = h * state.P * h.transpose() + noise.r;
  Eigen::LLT<Mat5> llt(s);
  if (llt.info() != Eigen::Success) return false;
  const Eigen::Matrix<double, 9, 5> gain = state.P * h.transpose() * llt.solve(Mat5::Identity());
  state.x += gain * innovation;
  const Mat9 ikh = Mat9::Identity() - gain * h;
  state.P = ikh * state.P * ikh.transpose() + gain * noise.r * gain.transpose();
  state.P = 0.5 * (state.P + state.P.transpose()).eval();
  clamp_geometry(state);
  return true;
}

std::vector<bool> occlusion_status_from_iou(const Eigen::MatrixXd& iou,
                                            const std::vector<double>& depths,
                                            double tau_iou) {
  const auto n = static_cast<Eigen::Index>(depths.size());
  if (iou.rows() != n || iou.cols() != n)
    raise(ErrorCode::LengthMismatch, "iou matrix does not match depth count");
  std::vector<bool> occ(depths.size(), false);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != i && iou(i, j) > tau_iou &&
          depths[static_cast<std::size_t>(i)] > depths[static_cast<std::size_t>(j)]) {
        occ[static_cast<std::size_t>(i)] = true;
        break;
      }
  return occ;
}

double occlusion_score_from_iou(int i, const Eigen::MatrixXd& iou,
                                const std::vector<double>& depths,
                                double tau_iou) {
  const auto n = static_cast<Eigen::Index>(depths.size());
  double best = 0.0;
  for (Eigen::Index j = 0; j < n; ++j)
    if (j != i && iou(i, j) > tau_iou &&
        depths[static_cast<std::size_t>(i)] > depths[static_cast<std::size_t>(j)])
      best = std::max(best, iou(i, j));
  return best;
}

namespace {

Eigen::MatrixXd box_iou_matrix(const std::vector<Box>& boxes) {
  const auto n = static_cast<Eigen::Index>(boxes.size());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double v = iou_2d(boxes[static_cast<std::size_t>(i)],
                              boxes[static_cast<std::size_t>(j)]);
      m(i, j) = v;
      m(j, i) = v;
    }
  return m;
}

}  // namespace

std::vector<bool> occlusion_status(const std::vector<Box>& boxes,
                                   const std::vector<double>& depths,
                                   double tau_iou) {
  if (boxes.size() != depths.size())
    raise(ErrorCode::LengthMismatch, "boxes and depths differ in length");
  return occlusion_status_from_iou(box_iou_matrix(boxes), depths, tau_iou);
}

double occlusion_score(int i, const std::vector<Box>& boxes,
                       const std::vector<double>& depths, double tau_iou) {
  if (boxes.size() != depths.size())
    raise(ErrorCode::LengthMismatch, "boxes and depths differ in length");
  return occlusion_score_from_iou(i, box_iou_matrix(boxes), depths, tau_iou);
}

double noise_scale(bool occluded, double score, double alpha) {
  return occluded ? 1.0 + alpha * score : 1.0;
}

Vec5 obs_from_box(const Box& box, double depth) {
  Vec5 obs;
  const double w = box.width();
  const double h = box.height();
  obs << box.cx(), box.cy(), w * h, w / h, depth;
  return obs;
}

Box box_from_state(const Vec9& x) {
  const double s = std::max(x[2], kMinArea);
  const double r = std::max(x[3], kMinAspect);
  const double w = std::sqrt(s * r);
  const double h = s / w;
  Box box;
  box.x1 = static_cast<float>(x[0] - 0.5 * w);
  box.y1 = static_cast<float>(x[1] - 0.5 * h);
  box.x2 = static_cast<float>(x[0] + 0.5 * w);
  box.y2 = static_cast<float>(x[1] + 0.5 * h);
  return box;
}

}  // namespace voxtrack
