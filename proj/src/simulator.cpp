// SPDX-License-Identifier: Apache-2.0
#include <voxtrack/rle.hpp>
#include <voxtrack/simulator.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace voxtrack {

namespace fs = std::filesystem;

std::vector<const GtEntry*> GroundTruth::frame_entries(int frame) const {
  std::vector<const GtEntry*> out;
  for (const auto& e : entries)
    if (e.frame == frame) out.push_back(&e);
  return out;
}

namespace {

struct Pose {
  double cu, cv, z;
};

Pose object_pose(const ObjectSpec& obj, int frame) {
  Pose p{obj.u0, obj.v0, obj.z0};
  const int steps = frame - 1;
  switch (obj.kind) {
    case TrajectoryKind::Linear: {
      double eff = 0;
      for (int k = 2; k <= frame; ++k)
        eff += (k >= obj.slow_from && k <= obj.slow_to) ? obj.slow_factor : 1.0;
      p.cu = obj.u0 + obj.du * eff;
      p.cv = obj.v0 + obj.dv * eff;
      p.z = obj.z0 + obj.dz * eff;
      break;
    }
    case TrajectoryKind::Circular: {
      const double a = obj.orbit_phase + obj.orbit_omega * steps;
      p.cu = obj.orbit_cu + obj.orbit_radius * std::cos(a);
      p.cv = obj.orbit_cv + obj.orbit_radius * std::sin(a);
      p.z = obj.z0 + obj.dz * steps;
      break;
    }
    case TrajectoryKind::DepthApproach: {
      p.cu = obj.u0 + obj.du * steps;
      p.cv = obj.v0 + obj.dv * steps;
      p.z = obj.z0 + obj.dz * steps;
      break;
    }
  }
  p.z = std::max(p.z, 1.0);
  return p;
}

struct RenderedObject {
  Box full_box;       // projected, clipped to the image
  double depth = 0;
  long covered = 0;   // pixels whose centre lies in the box and image
  long owned = 0;     // pixels surviving the z-buffer
  int px1 = 0, py1 = 0, px2 = 0, py2 = 0;  // pixel rect of the full box
};

struct FrameRender {
  std::vector<RenderedObject> objects;
  std::vector<int> owner;     // per pixel, -1 background
  DepthMap depth;
};

// Pixel (u, v) is covered when its centre lies inside the box; the same
// floor/ceil rectangle is used everywhere masks meet boxes.
void pixel_rect(const Box& b, int width, int height, int* x1, int* y1,
                int* x2, int* y2) {
  *x1 = std::max(0, static_cast<int>(std::floor(b.x1)));
  *y1 = std::max(0, static_cast<int>(std::floor(b.y1)));
  *x2 = std::min(width, static_cast<int>(std::ceil(b.x2)));
  *y2 = std::min(height, static_cast<int>(std::ceil(b.y2)));
}

FrameRender render_frame(const SceneSpec& spec, int frame) {
  FrameRender out;
  out.owner.assign(static_cast<std::size_t>(spec.width) * spec.height, -1);
  out.depth.width = spec.width;
  out.depth.height = spec.height;
  out.depth.values.assign(out.owner.size(),
                          static_cast<float>(spec.background_depth));
  out.objects.resize(spec.objects.size());

  const double pcx = spec.width / 2.0;
  const double pcy = spec.height / 2.0;
  for (std::size_t k = 0; k < spec.objects.size(); ++k) {
    const ObjectSpec& obj = spec.objects[k];
    const Pose pose = object_pose(obj, frame);
    RenderedObject& ro = out.objects[k];
    ro.depth = pose.z;
    const double pw = spec.fx * obj.half_w / pose.z;
    const double ph = spec.fy * obj.half_h / pose.z;
    // Principal point at the image centre; poses are given relative to it.
    Box b;
    b.x1 = static_cast<float>(pcx + (pose.cu - pcx) - pw);
    b.x2 = static_cast<float>(pcx + (pose.cu - pcx) + pw);
    b.y1 = static_cast<float>(pcy + (pose.cv - pcy) - ph);
    b.y2 = static_cast<float>(pcy + (pose.cv - pcy) + ph);
    pixel_rect(b, spec.width, spec.height, &ro.px1, &ro.py1, &ro.px2, &ro.py2);
    ro.full_box.x1 = std::max(b.x1, 0.0f);
    ro.full_box.y1 = std::max(b.y1, 0.0f);
    ro.full_box.x2 = std::min(b.x2, static_cast<float>(spec.width));
    ro.full_box.y2 = std::min(b.y2, static_cast<float>(spec.height));

    const auto zf = static_cast<float>(pose.z);
    for (int v = ro.py1; v < ro.py2; ++v) {
      for (int u = ro.px1; u < ro.px2; ++u) {
        ro.covered += 1;
        const std::size_t idx = static_cast<std::size_t>(v) * spec.width + u;
        const int prev = out.owner[idx];
        if (prev < 0 || zf < out.depth.values[idx]) {
          if (prev >= 0)
            out.objects[static_cast<std::size_t>(prev)].owned -= 1;
          out.owner[idx] = static_cast<int>(k);
          out.depth.values[idx] = zf;
          ro.owned += 1;
        }
      }
    }
  }
  return out;
}

}  // namespace

std::vector<DegradedDet> degrade_frame(const std::vector<const GtEntry*>& entries,
                                       const DetectionNoise& noise, int width,
                                       int height, int n_slots, Pcg32& rng) {
  std::vector<DegradedDet> dets;
  for (const GtEntry* e : entries) {
    const double u_miss = rng.uniform();
    const double j1 = rng.normal(), j2 = rng.normal();
    const double j3 = rng.normal(), j4 = rng.normal();
    const double u_score = rng.normal();
    const double p_miss =
        noise.miss_rate + (1.0 - noise.miss_rate) * (1.0 - e->visibility);
    if (u_miss < p_miss) continue;
    Box b;
    b.x1 = static_cast<float>(e->box.x1 + noise.bbox_sigma * j1);
    b.y1 = static_cast<float>(e->box.y1 + noise.bbox_sigma * j2);
    b.x2 = static_cast<float>(e->box.x2 + noise.bbox_sigma * j3);
    b.y2 = static_cast<float>(e->box.y2 + noise.bbox_sigma * j4);
    b.x1 = std::clamp(b.x1, 0.0f, static_cast<float>(width) - 2.0f);
    b.y1 = std::clamp(b.y1, 0.0f, static_cast<float>(height) - 2.0f);
    b.x2 = std::clamp(b.x2, b.x1 + 1.0f, static_cast<float>(width));
    b.y2 = std::clamp(b.y2, b.y1 + 1.0f, static_cast<float>(height));
    DegradedDet det;
    det.box = b;
    det.score = std::clamp(1.0 - 0.7 * (1.0 - e->visibility) +
                               noise.score_sigma * u_score,
                           0.01, 1.0);
    det.source_id = e->id;
    dets.push_back(det);
  }
  for (int slot = 0; slot < n_slots; ++slot) {
    const double u_fp = rng.uniform();
    const double cx = rng.uniform(), cy = rng.uniform();
    const double w = rng.uniform(), h = rng.uniform();
    const double u_s = rng.uniform();
    if (u_fp >= noise.fp_rate) continue;
    const double hw = 10.0 + 35.0 * w;
    const double hh = 10.0 + 35.0 * h;
    Box b;
    b.x1 = static_cast<float>(std::clamp(cx * width - hw, 0.0, width - 2.0));
    b.y1 = static_cast<float>(std::clamp(cy * height - hh, 0.0, height - 2.0));
    b.x2 = static_cast<float>(std::clamp(cx * width + hw, double(b.x1) + 1.0, double(width)));
    b.y2 = static_cast<float>(std::clamp(cy * height + hh, double(b.y1) + 1.0, double(height)));
    DegradedDet det;
    det.box = b;
    det.score = 0.1 + 0.45 * u_s;
    det.source_id = 0;
    dets.push_back(det);
  }
  return dets;
}

std::vector<std::vector<DegradedDet>> degrade(const GroundTruth& gt,
                                              const DetectionNoise& noise,
                                              int width, int height,
                                              uint64_t seed) {
  std::vector<std::vector<DegradedDet>> out(static_cast<std::size_t>(gt.n_frames));
  for (int frame = 1; frame <= gt.n_frames; ++frame) {
    Pcg32 rng(seed, static_cast<uint64_t>(frame));
    const auto entries = gt.frame_entries(frame);
    out[static_cast<std::size_t>(frame) - 1] =
        degrade_frame(entries, noise, width, height,
                      static_cast<int>(entries.size()), rng);
  }
  return out;
}

namespace {

std::vector<float> identity_embedding(uint64_t seed, int id, int dim) {
  Pcg32 rng(seed, 1000000u + static_cast<uint64_t>(id));
  std::vector<float> e(static_cast<std::size_t>(dim));
  double norm2 = 0;
  for (auto& x : e) {
    x = static_cast<float>(rng.normal());
    norm2 += double(x) * x;
  }
  const double inv = 1.0 / std::sqrt(std::max(norm2, 1e-12));
  for (auto& x : e) x = static_cast<float>(x * inv);
  return e;
}

std::vector<float> noisy_embedding(const std::vector<float>& base, double sigma,
                                   Pcg32& rng) {
  std::vector<float> e(base.size());
  double norm2 = 0;
  for (std::size_t k = 0; k < base.size(); ++k) {
    e[k] = static_cast<float>(base[k] + sigma * rng.normal());
    norm2 += double(e[k]) * e[k];
  }
  const double inv = 1.0 / std::sqrt(std::max(norm2, 1e-12));
  for (auto& x : e) x = static_cast<float>(x * inv);
  return e;
}

RleMask mask_from_region(const FrameRender& render, int width, int height,
                         int owner_id, const Box& clip) {
  std::vector<uint8_t> bits(static_cast<std::size_t>(width) * height, 0);
  int x1, y1, x2, y2;
  pixel_rect(clip, width, height, &x1, &y1, &x2, &y2);
  for (int v = y1; v < y2; ++v)
    for (int u = x1; u < x2; ++u) {
      const std::size_t idx = static_cast<std::size_t>(v) * width + u;
      if (owner_id < 0 || render.owner[idx] == owner_id) bits[idx] = 1;
    }
  return encode_rle(bits.data(), width, height);
}

}  // namespace

GroundTruth generate_scene(const SceneSpec& spec, const fs::path& out_dir) {
  if (spec.n_frames < 1) raise(ErrorCode::BadConfig, "n_frames must be >= 1");

  SequenceManifest manifest;
  manifest.frames = spec.n_frames;
  manifest.intrinsics.width = spec.width;
  manifest.intrinsics.height = spec.height;
  manifest.intrinsics.fx = static_cast<float>(spec.fx);
  manifest.intrinsics.fy = static_cast<float>(spec.fy);
  manifest.intrinsics.center_mode = spec.center_mode;
  if (spec.center_mode == ProjectionCenterMode::PrincipalPoint) {
    manifest.intrinsics.px = static_cast<float>(spec.width) / 2.0f;
    manifest.intrinsics.py = static_cast<float>(spec.height) / 2.0f;
  }

  std::vector<std::vector<float>> id_embeddings;
  if (spec.embedding_dim > 0) {
    id_embeddings.resize(spec.objects.size() + 1);
    for (std::size_t k = 1; k <= spec.objects.size(); ++k)
      id_embeddings[k] = identity_embedding(spec.seed, static_cast<int>(k),
                                            spec.embedding_dim);
  }

  GroundTruth gt;
  gt.n_frames = spec.n_frames;
  std::vector<DepthMap> depths;
  depths.reserve(static_cast<std::size_t>(spec.n_frames));
  std::vector<std::vector<Detection>> detections(
      static_cast<std::size_t>(spec.n_frames));

  for (int frame = 1; frame <= spec.n_frames; ++frame) {
    FrameRender render = render_frame(spec, frame);

    // Ground truth rows plus the visible-region boxes detections start from.
    std::vector<GtEntry> frame_gt;
    std::vector<GtEntry> visible;  // same ids, box = bounds of owned pixels
    for (std::size_t k = 0; k < render.objects.size(); ++k) {
      const RenderedObject& ro = render.objects[k];
      if (ro.covered <= 0) continue;
      GtEntry e;
      e.frame = frame;
      e.id = static_cast<int>(k) + 1;
      e.box = ro.full_box;
      e.depth = ro.depth;
      e.visibility = static_cast<double>(ro.owned) / static_cast<double>(ro.covered);
      frame_gt.push_back(e);
      if (ro.owned > 0) {
        int vx1 = spec.width, vy1 = spec.height, vx2 = 0, vy2 = 0;
        for (int v = ro.py1; v < ro.py2; ++v)
          for (int u = ro.px1; u < ro.px2; ++u)
            if (render.owner[static_cast<std::size_t>(v) * spec.width + u] ==
                static_cast<int>(k)) {
              vx1 = std::min(vx1, u);
              vy1 = std::min(vy1, v);
              vx2 = std::max(vx2, u + 1);
              vy2 = std::max(vy2, v + 1);
            }
        GtEntry ve = e;
        ve.box = Box{static_cast<float>(vx1), static_cast<float>(vy1),
                     static_cast<float>(vx2), static_cast<float>(vy2)};
        visible.push_back(ve);
      }
    }
    gt.entries.insert(gt.entries.end(), frame_gt.begin(), frame_gt.end());

    std::vector<const GtEntry*> visible_ptrs;
    visible_ptrs.reserve(visible.size());
    for (const auto& e : visible) visible_ptrs.push_back(&e);
    Pcg32 rng(spec.seed, static_cast<uint64_t>(frame));
    const std::vector<DegradedDet> degraded =
        degrade_frame(visible_ptrs, spec.noise, spec.width, spec.height,
                      static_cast<int>(spec.objects.size()), rng);

    for (const DegradedDet& dd : degraded) {
      Detection det;
      det.bbox = dd.box;
      det.score = static_cast<float>(dd.score);
      det.mask = mask_from_region(render, spec.width, spec.height,
                                  dd.source_id > 0 ? dd.source_id - 1 : -1,
                                  dd.box);
      if (spec.embedding_dim > 0) {
        det.embedding =
            dd.source_id > 0
                ? noisy_embedding(id_embeddings[static_cast<std::size_t>(dd.source_id)],
                                  spec.noise.embedding_sigma, rng)
                : identity_embedding(spec.seed ^ 0x9e3779b97f4a7c15ULL,
                                     frame * 1000 + static_cast<int>(detections
                                         [static_cast<std::size_t>(frame) - 1].size()),
                                     spec.embedding_dim);
      }
      detections[static_cast<std::size_t>(frame) - 1].push_back(std::move(det));
    }
    depths.push_back(std::move(render.depth));
  }

  write_sequence(manifest, depths, detections, out_dir);
  write_gt_file(gt, out_dir / "gt.txt");
  return gt;
}

void write_gt_file(const GroundTruth& gt, const fs::path& path) {
  std::FILE* f = std::fopen(path.string().c_str(), "wb");
  if (!f) raise(ErrorCode::IoError, "cannot open " + path.string());
  for (const GtEntry& e : gt.entries) {
    std::fprintf(f, "%d,%d,%.2f,%.2f,%.2f,%.2f,1,%.4f,%.4f\n", e.frame, e.id,
                 e.box.x1, e.box.y1, e.box.width(), e.box.height(),
                 e.visibility, e.depth);
  }
  if (std::fclose(f) != 0) raise(ErrorCode::IoError, "close failed on " + path.string());
}

SceneSpec crossing_preset(uint64_t seed) {
  SceneSpec spec;
  spec.n_frames = 60;
  spec.width = 640;
  spec.height = 480;
  spec.fx = spec.fy = 600;
  spec.seed = seed;
  spec.embedding_dim = 0;  // uniform appearance: depth is the only tiebreak
  spec.noise.bbox_sigma = 1.5;
  spec.noise.miss_rate = 0.05;
  spec.noise.fp_rate = 0.0;
  spec.noise.score_sigma = 0.04;

  // Near object, left to right, braking as the paths cross.
  ObjectSpec a;
  a.kind = TrajectoryKind::Linear;
  a.u0 = 120;
  a.v0 = 240;
  a.du = 6.5;
  a.z0 = 60;
  a.half_w = 5.0;    // ~100 px wide
  a.half_h = 6.5;    // ~130 px tall
  a.slow_from = 33;
  a.slow_to = 44;
  a.slow_factor = 0.3;
  spec.objects.push_back(a);

  // Far object, right to left, physically larger so the projected sizes
  // nearly match and 2D overlap is ambiguous at the crossing.
  ObjectSpec b;
  b.kind = TrajectoryKind::Linear;
  b.u0 = 520;
  b.v0 = 240;
  b.du = -5.5;
  b.z0 = 140;
  b.half_w = 11.2;   // ~96 px wide
  b.half_h = 14.47;  // ~124 px tall
  spec.objects.push_back(b);
  return spec;
}

SceneSpec mixed_preset(int n_objects, uint64_t seed) {
  SceneSpec spec;
  spec.n_frames = 100;
  spec.width = 640;
  spec.height = 480;
  spec.fx = spec.fy = 600;
  spec.seed = seed;
  spec.embedding_dim = 16;
  spec.noise.bbox_sigma = 1.2;
  spec.noise.miss_rate = 0.05;
  spec.noise.fp_rate = 0.05;
  spec.noise.score_sigma = 0.05;
  spec.noise.embedding_sigma = 0.25;

  for (int k = 0; k < n_objects; ++k) {
    ObjectSpec obj;
    const double depth = 50.0 + 18.0 * k;
    const double row = 90.0 + 60.0 * (k % 6);
    obj.z0 = depth;
    obj.half_w = 4.0 + 0.9 * k;
    obj.half_h = 5.0 + 1.0 * k;
    switch (k % 4) {
      case 0:  // left to right
        obj.kind = TrajectoryKind::Linear;
        obj.u0 = 80 + 15.0 * k;
        obj.v0 = row;
        obj.du = 3.0 + 0.3 * (k % 3);
        break;
      case 1:  // right to left
        obj.kind = TrajectoryKind::Linear;
        obj.u0 = 560 - 15.0 * k;
        obj.v0 = row;
        obj.du = -(2.5 + 0.4 * (k % 3));
        break;
      case 2:  // orbit
        obj.kind = TrajectoryKind::Circular;
        obj.orbit_cu = 200 + 30.0 * k;
        obj.orbit_cv = row;
        obj.orbit_radius = 60 + 4.0 * k;
        obj.orbit_omega = 0.06 + 0.01 * (k % 3);
        obj.orbit_phase = 0.7 * k;
        break;
      case 3:  // head-on approach
        obj.kind = TrajectoryKind::DepthApproach;
        obj.u0 = 140 + 40.0 * k;
        obj.v0 = row;
        obj.z0 = 180.0 + 5.0 * k;
        obj.dz = -1.2;
        break;
    }
    spec.objects.push_back(obj);
  }
  return spec;
}

}  // namespace voxtrack
