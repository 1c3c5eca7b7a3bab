// SPDX-License-Identifier: Apache-2.0
#include <voxtrack/kernels.hpp>
#include <voxtrack/tracker.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>

namespace voxtrack {

namespace {

constexpr std::size_t kObsHistoryCap = 64;
constexpr std::size_t kVelHistoryCap = 16;

double cloud_mean_depth(const PointCloud& cloud) {
  if (cloud.empty()) return 0.0;
  double sum = 0;
  for (float z : cloud.zs) sum += z;
  return sum / static_cast<double>(cloud.size());
}

}  // namespace

VoxelTracker::VoxelTracker(const CameraIntrinsics& intrinsics,
                           const TrackerConfig& config)
    : intrinsics_(intrinsics), config_(config), noise_(config.noise()) {
  config_.validate();
  intrinsics_.validate();
  stats_.kernel_variant = kernels::active().name;
}

void VoxelTracker::refresh_observation(Track& track, const Detection& det,
                                       PointCloud&& cloud,
                                       const Eigen::Vector3d& obs,
                                       int frame_index) {
  track.hits += 1;
  track.time_since_update = 0;
  if (track.status == TrackStatus::Lost) track.status = TrackStatus::Confirmed;
  if (track.status == TrackStatus::Tentative && track.hits >= config_.min_hits)
    track.status = TrackStatus::Confirmed;

  track.cloud_mean_z = static_cast<float>(cloud_mean_depth(cloud));
  track.last_cloud = std::move(cloud);
  track.last_box = det.bbox;
  track.last_obs = obs;
  track.last_obs_frame = frame_index;
  track.last_conf = det.score;

  track.obs_history.emplace_back(frame_index, obs);
  while (track.obs_history.size() > kObsHistoryCap) track.obs_history.pop_front();

  // Historical displacement: prefer the observation delta_t_hist frames
  // back, falling back toward the adjacent one.
  for (int dt = config_.delta_t_hist; dt >= 1; --dt) {
    const int want = frame_index - dt;
    const auto it = std::find_if(
        track.obs_history.begin(), track.obs_history.end(),
        [want](const auto& e) { return e.first == want; });
    if (it != track.obs_history.end()) {
      track.velocity_history.push_back(
          docm_displacement(it->second, obs, config_.kappa));
      while (track.velocity_history.size() > kVelHistoryCap)
        track.velocity_history.pop_front();
      break;
    }
  }

  if (det.has_embedding()) {
    if (track.embedding.empty()) {
      track.embedding = det.embedding;
    } else {
      const double keep = config_.ema_embedding;
      double norm2 = 0;
      for (std::size_t k = 0; k < track.embedding.size(); ++k) {
        track.embedding[k] = static_cast<float>(keep * track.embedding[k] +
                                                (1.0 - keep) * det.embedding[k]);
        norm2 += double(track.embedding[k]) * track.embedding[k];
      }
      if (norm2 > 1e-12) {
        const float inv = static_cast<float>(1.0 / std::sqrt(norm2));
        for (float& e : track.embedding) e *= inv;
      }
    }
  }
}

void VoxelTracker::assess_occlusion(const FrameRecord& frame,
                                    const std::vector<DetectionFeatures>& dets,
                                    const std::vector<PointCloud>& clouds,
                                    const std::vector<double>& depths,
                                    const AssociationResult& assoc) {
  (void)frame;
  if (dets.empty()) return;
  Eigen::MatrixXd iou;
  if (config_.occlusion_metric == OcclusionMetric::Box2D) {
    const auto n = static_cast<Eigen::Index>(dets.size());
    iou = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i + 1; j < n; ++j) {
        const double v = iou_2d(dets[static_cast<std::size_t>(i)].box,
                                dets[static_cast<std::size_t>(j)].box);
        iou(i, j) = v;
        iou(j, i) = v;
      }
  } else {
    std::vector<const PointCloud*> ptrs;
    ptrs.reserve(clouds.size());
    for (const auto& c : clouds) ptrs.push_back(&c);
    PairwiseIouStats st;
    iou = pairwise_voxel_iou(ptrs, ptrs, static_cast<float>(config_.delta_v),
                             &st, config_.threads);
    stats_.voxel_cap_hits += st.voxel_cap_hits;
    stats_.iou_pairs += st.pairs;
    stats_.iou_pairs_skipped += st.skipped_disjoint;
  }
  const std::vector<bool> occ =
      occlusion_status_from_iou(iou, depths, config_.tau_iou);

  // The scale worked out from frame-t detections applies at the t+1 predict
  // of whichever track claimed the detection; unmatched tracks keep theirs.
  for (const auto& [t, d] : assoc.matches) {
    double lambda = 1.0;
    if (config_.danc) {
      const double score = occlusion_score_from_iou(
          d, iou, depths, config_.tau_iou);
      lambda = noise_scale(occ[static_cast<std::size_t>(d)], score, config_.alpha);
    }
    tracks_[static_cast<std::size_t>(t)].state.lambda = lambda;
  }
}

std::vector<TrackOutputRow> VoxelTracker::step(const FrameRecord& frame) {
  const auto t_start = std::chrono::steady_clock::now();
  if (frame.frame_index <= last_frame_)
    raise(ErrorCode::OutOfOrderFrame,
          "frame " + std::to_string(frame.frame_index) + " after " +
              std::to_string(last_frame_));
  last_frame_ = frame.frame_index;

  // 1. Predict every live track with its stored noise scale.
  for (Track& track : tracks_) {
    kf_predict(track.state, noise_);
    track.age += 1;
  }

  // 2. Detection geometry.
  const auto n_dets = frame.detections.size();
  std::vector<PointCloud> det_clouds(n_dets);
  std::vector<double> det_depths(n_dets, 0.0);
  std::vector<DetectionFeatures> det_feats(n_dets);
  for (std::size_t d = 0; d < n_dets; ++d) {
    const Detection& det = frame.detections[d];
    if (config_.projection_mode == ProjectionMode::MaskGuided) {
      det_clouds[d] = backproject(frame.depth, det.mask, det.bbox, intrinsics_);
      det_depths[d] = mean_masked_depth(frame.depth, det.mask, det.bbox);
    } else {
      det_clouds[d] = backproject_box(frame.depth, det.bbox, intrinsics_);
      det_depths[d] = cloud_mean_depth(det_clouds[d]);
    }
    det_feats[d].box = det.bbox;
    det_feats[d].score = det.score;
    det_feats[d].cloud = &det_clouds[d];
    det_feats[d].obs = {det.bbox.cx(), det.bbox.cy(), det_depths[d]};
    det_feats[d].embedding = det.has_embedding() ? &det.embedding : nullptr;
  }

  // 3. Track-side features.
  std::vector<PointCloud> trk_clouds(tracks_.size());
  std::vector<TrackFeatures> trk_feats(tracks_.size());
  for (std::size_t t = 0; t < tracks_.size(); ++t) {
    Track& track = tracks_[t];
    TrackFeatures& f = trk_feats[t];
    f.predicted_box = box_from_state(track.state.x);
    if (config_.track_cloud_mode == TrackCloudMode::PredictTranslate) {
      // The predicted-state delta moves the last observed cloud. With
      // box-centred projection the cloud is already object-relative, so
      // only the depth axis shifts; with a fixed principal point the pixel
      // delta maps through depth over focal length.
      const auto dz = static_cast<float>(track.state.x[4] - track.last_obs[2]);
      float dx = 0, dy = 0;
      if (intrinsics_.center_mode == ProjectionCenterMode::PrincipalPoint) {
        dx = static_cast<float>((track.state.x[0] - track.last_obs[0]) *
                                track.cloud_mean_z / intrinsics_.fx);
        dy = static_cast<float>((track.state.x[1] - track.last_obs[1]) *
                                track.cloud_mean_z / intrinsics_.fy);
      }
      trk_clouds[t] = translate_cloud(track.last_cloud, dx, dy, dz);
      f.match_cloud = &trk_clouds[t];
    } else {
      f.match_cloud = &track.last_cloud;
    }
    f.last_cloud = &track.last_cloud;
    f.last_box = track.last_box;
    f.last_obs = track.last_obs;
    if (!track.velocity_history.empty()) f.v_hist = track.velocity_history.back();
    f.embedding = track.embedding.empty() ? nullptr : &track.embedding;
  }

  // 4. Cascade association.
  CascadeConfig cascade;
  cascade.weights = config_.weights;
  cascade.gate_iou_low = config_.gate_iou_low;
  cascade.score_high = config_.score_high;
  cascade.score_low = config_.score_low;
  cascade.iou_mode = config_.iou_mode;
  cascade.kappa = config_.kappa;
  cascade.delta_v = static_cast<float>(config_.delta_v);
  cascade.use_docm = config_.docm;
  cascade.threads = config_.threads;
  PairwiseIouStats cascade_stats;
  cascade.iou_stats = &cascade_stats;
  const AssociationResult assoc = associate_cascade(trk_feats, det_feats, cascade);
  stats_.voxel_cap_hits += cascade_stats.voxel_cap_hits;
  stats_.iou_pairs += cascade_stats.pairs;
  stats_.iou_pairs_skipped += cascade_stats.skipped_disjoint;

  // 5. Occlusion first (it reads detection clouds before they move into
  // tracks), then measurement updates.
  assess_occlusion(frame, det_feats, det_clouds, det_depths, assoc);

  for (const auto& [t, d] : assoc.matches) {
    Track& track = tracks_[static_cast<std::size_t>(t)];
    const Detection& det = frame.detections[static_cast<std::size_t>(d)];
    const Vec5 obs = obs_from_box(det.bbox, det_depths[static_cast<std::size_t>(d)]);
    kf_update(track.state, obs, noise_);  // on singular S the prediction stands
    refresh_observation(track, det,
                        std::move(det_clouds[static_cast<std::size_t>(d)]),
                        det_feats[static_cast<std::size_t>(d)].obs,
                        frame.frame_index);
  }

  // 6. Spawn tentative tracks from unmatched high-score detections.
  for (int d : assoc.unmatched_dets) {
    const Detection& det = frame.detections[static_cast<std::size_t>(d)];
    if (det.score < config_.score_high) continue;
    Track track;
    track.id = next_id_++;
    track.status = config_.min_hits <= 1 ? TrackStatus::Confirmed
                                         : TrackStatus::Tentative;
    track.state = kf_init(obs_from_box(det.bbox, det_depths[static_cast<std::size_t>(d)]));
    track.cloud_mean_z =
        static_cast<float>(cloud_mean_depth(det_clouds[static_cast<std::size_t>(d)]));
    track.last_cloud = std::move(det_clouds[static_cast<std::size_t>(d)]);
    track.last_box = det.bbox;
    track.last_obs = det_feats[static_cast<std::size_t>(d)].obs;
    track.last_obs_frame = frame.frame_index;
    track.last_conf = det.score;
    track.obs_history.emplace_back(frame.frame_index, track.last_obs);
    if (det.has_embedding()) track.embedding = det.embedding;
    tracks_.push_back(std::move(track));
    stats_.tracks_created += 1;
  }

  // 7. Age and retire.
  for (int t : assoc.unmatched_tracks) {
    Track& track = tracks_[static_cast<std::size_t>(t)];
    track.time_since_update += 1;
    switch (track.status) {
      case TrackStatus::Tentative:
        track.status = TrackStatus::Removed;
        break;
      case TrackStatus::Confirmed:
        track.status = TrackStatus::Lost;
        break;
      case TrackStatus::Lost:
        if (track.time_since_update > config_.max_age)
          track.status = TrackStatus::Removed;
        break;
      case TrackStatus::Removed:
        break;
    }
  }
  const auto removed = std::count_if(
      tracks_.begin(), tracks_.end(),
      [](const Track& t) { return t.status == TrackStatus::Removed; });
  stats_.tracks_removed += static_cast<int>(removed);
  tracks_.erase(std::remove_if(tracks_.begin(), tracks_.end(),
                               [](const Track& t) {
                                 return t.status == TrackStatus::Removed;
                               }),
                tracks_.end());

  // 8. Emit confirmed tracks updated this frame; ids ascend within a frame.
  std::vector<TrackOutputRow> rows;
  for (const Track& track : tracks_) {
    if (track.status != TrackStatus::Confirmed || track.time_since_update != 0)
      continue;
    const Box box = box_from_state(track.state.x);
    TrackOutputRow row;
    row.frame = frame.frame_index;
    row.id = track.id;
    row.bb_left = box.x1;
    row.bb_top = box.y1;
    row.bb_width = box.width();
    row.bb_height = box.height();
    row.conf = track.last_conf;
    rows.push_back(row);
  }
  stats_.rows_emitted += static_cast<long>(rows.size());

  stats_.frames += 1;
  const double ms = std::chrono::duration<double, std::milli>(
                        std::chrono::steady_clock::now() - t_start)
                        .count();
  stats_.total_ms += ms;
  stats_.max_frame_ms = std::max(stats_.max_frame_ms, ms);
  return rows;
}

std::pair<std::vector<TrackOutputRow>, RunStats> run_sequence(
    const Sequence& seq, const TrackerConfig& config) {
  VoxelTracker tracker(seq.intrinsics(), config);
  std::vector<TrackOutputRow> rows;
  for (int frame = 1; frame <= seq.frame_count(); ++frame) {
    auto frame_rows = tracker.step(seq.load_frame(frame));
    rows.insert(rows.end(), frame_rows.begin(), frame_rows.end());
  }
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    return a.frame != b.frame ? a.frame < b.frame : a.id < b.id;
  });
  return {std::move(rows), tracker.stats()};
}

}  // namespace voxtrack
