// SPDX-License-Identifier: Apache-2.0
#include <voxtrack/association.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace voxtrack {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kBig = 1e12;  // forbidden sentinel inside the padded solve
constexpr int kLexLimit = 32;  // max side for the lexicographic polish

}  // namespace

Eigen::Vector3d docm_displacement(const Eigen::Vector3d& prev,
                                  const Eigen::Vector3d& curr, double kappa) {
  return {curr[0] - prev[0], curr[1] - prev[1], kappa * (curr[2] - prev[2])};
}

double docm_consistency(const Eigen::Vector3d& v_hist,
                        const Eigen::Vector3d& v_curr) {
  const double nh = v_hist.norm();
  const double nc = v_curr.norm();
  if (nh < 1e-9 || nc < 1e-9) return 0.0;
  return v_hist.dot(v_curr) / (nh * nc);
}

Eigen::MatrixXd build_cost_matrix(const Eigen::MatrixXd& ious,
                                  const Eigen::MatrixXd& docm,
                                  const Eigen::MatrixXd* app,
                                  const CostWeights& weights) {
  if (docm.rows() != ious.rows() || docm.cols() != ious.cols() ||
      (app && (app->rows() != ious.rows() || app->cols() != ious.cols())))
    raise(ErrorCode::ShapeMismatch, "cue matrices differ in shape");
  Eigen::MatrixXd cost(ious.rows(), ious.cols());
  for (Eigen::Index i = 0; i < ious.rows(); ++i)
    for (Eigen::Index j = 0; j < ious.cols(); ++j) {
      if (ious(i, j) < weights.gate_iou) {
        cost(i, j) = kInf;
        continue;
      }
      double score = weights.w_iou * ious(i, j) + weights.w_docm * docm(i, j);
      if (app) score += weights.w_app * (*app)(i, j);
      cost(i, j) = -score;
    }
  return cost;
}

// ---------------------------------------------------------------------------
// assignment

namespace {

// Jonker-Volgenant style shortest augmenting path with potentials, O(n^3).
// Fills row_to_col; when u_out/v_out are given, also exports the dual
// potentials (c(i,j) - u_i - v_j >= 0 with equality on assigned pairs).
void jv_square(const Eigen::MatrixXd& cost, std::vector<int>& row_to_col,
               std::vector<double>* u_out, std::vector<double>* v_out) {
  const int n = static_cast<int>(cost.rows());
  std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<double> v(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<int> match(static_cast<std::size_t>(n) + 1, 0);  // col -> row, 1-based
  std::vector<int> way(static_cast<std::size_t>(n) + 1, 0);
  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(n) + 1, kInf);
    std::vector<char> used(static_cast<std::size_t>(n) + 1, 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      const int i0 = match[static_cast<std::size_t>(j0)];
      int j1 = -1;
      double delta = kInf;
      for (int j = 1; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] -
                           v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(match[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (match[static_cast<std::size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<std::size_t>(j0)];
      match[static_cast<std::size_t>(j0)] = match[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0);
  }
  row_to_col.assign(static_cast<std::size_t>(n), -1);
  for (int j = 1; j <= n; ++j)
    if (match[static_cast<std::size_t>(j)] > 0)
      row_to_col[static_cast<std::size_t>(match[static_cast<std::size_t>(j)]) - 1] = j - 1;
  if (u_out) u_out->assign(u.begin() + 1, u.end());
  if (v_out) v_out->assign(v.begin() + 1, v.end());
}

}  // namespace

std::vector<int> solve_square_assignment(const Eigen::MatrixXd& cost) {
  std::vector<int> row_to_col;
  jv_square(cost, row_to_col, nullptr, nullptr);
  return row_to_col;
}

namespace {

bool matchable(double c) { return std::isfinite(c) && c < 0.0; }

// Padded square encoding of "unmatch is free": real rows/cols get a private
// zero-cost dummy, forbidden or non-improving pairs get the big sentinel,
// dummies pair with each other for free.
Eigen::MatrixXd pad_matrix(const Eigen::MatrixXd& cost,
                           const std::vector<int>& rows,
                           const std::vector<int>& cols) {
  const int n = static_cast<int>(rows.size());
  const int m = static_cast<int>(cols.size());
  const int size = n + m;
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(size, size);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) {
      const double c = cost(rows[static_cast<std::size_t>(i)],
                            cols[static_cast<std::size_t>(j)]);
      p(i, j) = matchable(c) ? c : kBig;
    }
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k) p(i, m + k) = (k == i) ? 0.0 : kBig;
  for (int k = 0; k < m; ++k)
    for (int j = 0; j < m; ++j) p(n + k, j) = (k == j) ? 0.0 : kBig;
  return p;
}

struct PartialSolution {
  std::vector<std::pair<int, int>> matches;  // indices into rows/cols
  double total = 0;
};

PartialSolution solve_partial(const Eigen::MatrixXd& cost,
                              const std::vector<int>& rows,
                              const std::vector<int>& cols,
                              bool* unique_hint = nullptr) {
  PartialSolution sol;
  if (unique_hint) *unique_hint = true;
  if (rows.empty() || cols.empty()) return sol;
  const Eigen::MatrixXd padded = pad_matrix(cost, rows, cols);
  std::vector<int> assign;
  std::vector<double> u, v;
  jv_square(padded, assign, unique_hint ? &u : nullptr,
            unique_hint ? &v : nullptr);
  const int n = static_cast<int>(rows.size());
  const int m = static_cast<int>(cols.size());
  for (int i = 0; i < n; ++i) {
    const int j = assign[static_cast<std::size_t>(i)];
    if (j < m && matchable(cost(rows[static_cast<std::size_t>(i)],
                                cols[static_cast<std::size_t>(j)])))
      sol.matches.emplace_back(i, j);
  }
  for (const auto& [i, j] : sol.matches)
    sol.total += cost(rows[static_cast<std::size_t>(i)],
                      cols[static_cast<std::size_t>(j)]);
  if (unique_hint) {
    // Every optimal assignment lives on the tight (zero reduced cost)
    // entries. When each real row has a single tight column the optimum is
    // unique and the lexicographic polish can be skipped. Near-ties count
    // as tight, which errs toward polishing.
    const int size = n + m;
    const double eps = 1e-9;
    for (int i = 0; i < n && *unique_hint; ++i) {
      int tight = 0;
      for (int j = 0; j < size; ++j) {
        const double reduced = padded(i, j) - u[static_cast<std::size_t>(i)] -
                               v[static_cast<std::size_t>(j)];
        if (std::abs(reduced) <= eps * (1.0 + std::abs(padded(i, j)))) ++tight;
      }
      if (tight > 1) *unique_hint = false;
    }
  }
  return sol;
}

}  // namespace

AssociationResult linear_assignment(const Eigen::MatrixXd& cost) {
  const int n = static_cast<int>(cost.rows());
  const int m = static_cast<int>(cost.cols());
  std::vector<int> all_rows(static_cast<std::size_t>(n));
  std::vector<int> all_cols(static_cast<std::size_t>(m));
  for (int i = 0; i < n; ++i) all_rows[static_cast<std::size_t>(i)] = i;
  for (int j = 0; j < m; ++j) all_cols[static_cast<std::size_t>(j)] = j;

  bool unique = true;
  PartialSolution base = solve_partial(cost, all_rows, all_cols, &unique);
  std::vector<int> row_to_col(static_cast<std::size_t>(n), -1);

  if (!unique && n > 0 && m > 0 && n <= kLexLimit && m <= kLexLimit) {
    // Re-derive the optimum one row at a time, preferring the smallest
    // feasible column, so ties resolve to the lexicographically lowest
    // match list. A candidate fix is kept when completing it still reaches
    // the optimal total.
    const double tol = 1e-9 * (1.0 + std::abs(base.total));
    double fixed_cost = 0;
    std::vector<char> col_used(static_cast<std::size_t>(m), 0);
    std::vector<int> rest_cols;
    for (int i = 0; i < n; ++i) {
      int chosen = -1;
      for (int j = 0; j < m && chosen < 0; ++j) {
        if (col_used[static_cast<std::size_t>(j)] || !matchable(cost(i, j)))
          continue;
        std::vector<int> rest_rows;
        for (int r = i + 1; r < n; ++r) rest_rows.push_back(r);
        rest_cols.clear();
        for (int c = 0; c < m; ++c)
          if (!col_used[static_cast<std::size_t>(c)] && c != j)
            rest_cols.push_back(c);
        const PartialSolution rest = solve_partial(cost, rest_rows, rest_cols);
        if (fixed_cost + cost(i, j) + rest.total <= base.total + tol)
          chosen = j;
      }
      if (chosen >= 0) {
        col_used[static_cast<std::size_t>(chosen)] = 1;
        fixed_cost += cost(i, chosen);
        row_to_col[static_cast<std::size_t>(i)] = chosen;
      }
    }
  } else {
    for (const auto& [i, j] : base.matches)
      row_to_col[static_cast<std::size_t>(i)] = j;
  }

  AssociationResult result;
  std::vector<char> col_matched(static_cast<std::size_t>(m), 0);
  for (int i = 0; i < n; ++i) {
    const int j = row_to_col[static_cast<std::size_t>(i)];
    if (j >= 0) {
      result.matches.emplace_back(i, j);
      col_matched[static_cast<std::size_t>(j)] = 1;
    } else {
      result.unmatched_tracks.push_back(i);
    }
  }
  for (int j = 0; j < m; ++j)
    if (!col_matched[static_cast<std::size_t>(j)]) result.unmatched_dets.push_back(j);
  return result;
}

// ---------------------------------------------------------------------------
// cascade

namespace {

double embedding_similarity(const std::vector<float>* a, const std::vector<float>* b) {
  if (!a || !b || a->empty() || b->empty() || a->size() != b->size()) return 0.0;
  double dot = 0;
  for (std::size_t k = 0; k < a->size(); ++k) dot += double((*a)[k]) * (*b)[k];
  return dot;
}

// IoU between track-side and detection-side geometry for one stage.
Eigen::MatrixXd stage_iou(const std::vector<TrackFeatures>& tracks,
                          const std::vector<int>& trk_idx,
                          const std::vector<DetectionFeatures>& dets,
                          const std::vector<int>& det_idx,
                          const CascadeConfig& cfg, bool last_observation) {
  const auto rows = static_cast<Eigen::Index>(trk_idx.size());
  const auto cols = static_cast<Eigen::Index>(det_idx.size());
  Eigen::MatrixXd iou = Eigen::MatrixXd::Zero(rows, cols);
  if (rows == 0 || cols == 0) return iou;
  if (cfg.iou_mode == IouMode::Voxel3D) {
    std::vector<const PointCloud*> dc, tc;
    dc.reserve(det_idx.size());
    tc.reserve(trk_idx.size());
    for (int d : det_idx) dc.push_back(dets[static_cast<std::size_t>(d)].cloud);
    for (int t : trk_idx)
      tc.push_back(last_observation ? tracks[static_cast<std::size_t>(t)].last_cloud
                                    : tracks[static_cast<std::size_t>(t)].match_cloud);
    const Eigen::MatrixXd dxt =
        pairwise_voxel_iou(dc, tc, cfg.delta_v, cfg.iou_stats, cfg.threads);
    iou = dxt.transpose();
  } else {
    for (Eigen::Index i = 0; i < rows; ++i) {
      const auto& trk = tracks[static_cast<std::size_t>(trk_idx[static_cast<std::size_t>(i)])];
      const Box& tb = last_observation ? trk.last_box : trk.predicted_box;
      for (Eigen::Index j = 0; j < cols; ++j)
        iou(i, j) = iou_2d(tb, dets[static_cast<std::size_t>(det_idx[static_cast<std::size_t>(j)])].box);
    }
  }
  return iou;
}

}  // namespace

AssociationResult associate_cascade(const std::vector<TrackFeatures>& tracks,
                                    const std::vector<DetectionFeatures>& dets,
                                    const CascadeConfig& cfg) {
  std::vector<int> high, low;
  for (int j = 0; j < static_cast<int>(dets.size()); ++j) {
    const float s = dets[static_cast<std::size_t>(j)].score;
    if (s >= cfg.score_high)
      high.push_back(j);
    else if (s >= cfg.score_low)
      low.push_back(j);
  }
  std::vector<int> all_tracks(tracks.size());
  for (int i = 0; i < static_cast<int>(tracks.size()); ++i)
    all_tracks[static_cast<std::size_t>(i)] = i;

  std::vector<int> track_match(tracks.size(), -1);
  std::vector<int> det_match(dets.size(), -1);
  const auto commit = [&](const std::vector<int>& trk_idx,
                          const std::vector<int>& det_idx,
                          const AssociationResult& stage) {
    for (const auto& [ti, dj] : stage.matches) {
      const int t = trk_idx[static_cast<std::size_t>(ti)];
      const int d = det_idx[static_cast<std::size_t>(dj)];
      track_match[static_cast<std::size_t>(t)] = d;
      det_match[static_cast<std::size_t>(d)] = t;
    }
  };

  // Stage 1: combined cost over all tracks and high-score detections.
  {
    const Eigen::MatrixXd iou = stage_iou(tracks, all_tracks, dets, high, cfg, false);
    Eigen::MatrixXd docm = Eigen::MatrixXd::Zero(iou.rows(), iou.cols());
    Eigen::MatrixXd app = Eigen::MatrixXd::Zero(iou.rows(), iou.cols());
    for (Eigen::Index i = 0; i < iou.rows(); ++i) {
      const auto& trk = tracks[static_cast<std::size_t>(all_tracks[static_cast<std::size_t>(i)])];
      for (Eigen::Index j = 0; j < iou.cols(); ++j) {
        const auto& det = dets[static_cast<std::size_t>(high[static_cast<std::size_t>(j)])];
        if (cfg.use_docm && trk.v_hist) {
          const Eigen::Vector3d v_curr =
              docm_displacement(trk.last_obs, det.obs, cfg.kappa);
          docm(i, j) = docm_consistency(*trk.v_hist, v_curr);
        }
        app(i, j) = embedding_similarity(trk.embedding, det.embedding);
      }
    }
    CostWeights w = cfg.weights;
    if (!cfg.use_docm) w.w_docm = 0.0;
    commit(all_tracks, high,
           linear_assignment(build_cost_matrix(iou, docm, &app, w)));
  }

  // Stage 2: low-score detections against leftover tracks, IoU only.
  {
    std::vector<int> rest_tracks;
    for (int t : all_tracks)
      if (track_match[static_cast<std::size_t>(t)] < 0) rest_tracks.push_back(t);
    if (!rest_tracks.empty() && !low.empty()) {
      const Eigen::MatrixXd iou = stage_iou(tracks, rest_tracks, dets, low, cfg, false);
      CostWeights w;
      w.w_iou = 1.0;
      w.w_docm = 0.0;
      w.w_app = 0.0;
      w.gate_iou = cfg.gate_iou_low;
      const Eigen::MatrixXd zeros = Eigen::MatrixXd::Zero(iou.rows(), iou.cols());
      commit(rest_tracks, low,
             linear_assignment(build_cost_matrix(iou, zeros, nullptr, w)));
    }
  }

  // Stage 3 (recovery): still-unmatched tracks against leftover high-score
  // detections, overlap measured against the track's last observation.
  {
    std::vector<int> rest_tracks, rest_high;
    for (int t : all_tracks)
      if (track_match[static_cast<std::size_t>(t)] < 0) rest_tracks.push_back(t);
    for (int d : high)
      if (det_match[static_cast<std::size_t>(d)] < 0) rest_high.push_back(d);
    if (!rest_tracks.empty() && !rest_high.empty()) {
      const Eigen::MatrixXd iou = stage_iou(tracks, rest_tracks, dets, rest_high, cfg, true);
      CostWeights w;
      w.w_iou = 1.0;
      w.w_docm = 0.0;
      w.w_app = 0.0;
      w.gate_iou = cfg.gate_iou_low;
      const Eigen::MatrixXd zeros = Eigen::MatrixXd::Zero(iou.rows(), iou.cols());
      commit(rest_tracks, rest_high,
             linear_assignment(build_cost_matrix(iou, zeros, nullptr, w)));
    }
  }

  AssociationResult result;
  for (int t = 0; t < static_cast<int>(tracks.size()); ++t) {
    if (track_match[static_cast<std::size_t>(t)] >= 0)
      result.matches.emplace_back(t, track_match[static_cast<std::size_t>(t)]);
    else
      result.unmatched_tracks.push_back(t);
  }
  for (int d = 0; d < static_cast<int>(dets.size()); ++d)
    if (det_match[static_cast<std::size_t>(d)] < 0) result.unmatched_dets.push_back(d);
  return result;
}

}  // namespace voxtrack
