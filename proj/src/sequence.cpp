// SPDX-License-Identifier: Apache-2.0
#include <voxtrack/rle.hpp>
#include <voxtrack/sequence.hpp>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace voxtrack {

namespace fs = std::filesystem;

void CameraIntrinsics::validate() const {
  if (fx <= 0 || fy <= 0)
    raise(ErrorCode::MalformedManifest, "focal lengths must be positive");
  if (width <= 0 || height <= 0)
    raise(ErrorCode::MalformedManifest, "image dimensions must be positive");
  if (center_mode == ProjectionCenterMode::PrincipalPoint) {
    if (px < 0 || px >= static_cast<float>(width) || py < 0 ||
        py >= static_cast<float>(height))
      raise(ErrorCode::MalformedManifest, "principal point outside image");
  }
}

// ---------------------------------------------------------------------------
// manifest

SequenceManifest parse_manifest(const fs::path& file) {
  std::ifstream in(file);
  if (!in) raise(ErrorCode::MissingFile, file.string());

  SequenceManifest m;
  bool saw_frames = false, saw_width = false, saw_height = false,
       saw_fx = false, saw_fy = false, saw_center = false;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string key;
    ss >> key;
    const auto bad = [&](const std::string& why) {
      raise(ErrorCode::MalformedManifest,
            file.string() + ":" + std::to_string(lineno) + ": " + why);
    };
    if (key == "frames") {
      if (!(ss >> m.frames) || m.frames < 0) bad("bad frame count");
      saw_frames = true;
    } else if (key == "width") {
      if (!(ss >> m.intrinsics.width)) bad("bad width");
      saw_width = true;
    } else if (key == "height") {
      if (!(ss >> m.intrinsics.height)) bad("bad height");
      saw_height = true;
    } else if (key == "fx") {
      if (!(ss >> m.intrinsics.fx)) bad("bad fx");
      saw_fx = true;
    } else if (key == "fy") {
      if (!(ss >> m.intrinsics.fy)) bad("bad fy");
      saw_fy = true;
    } else if (key == "projection_center") {
      std::string mode;
      if (!(ss >> mode)) bad("missing projection_center mode");
      if (mode == "box") {
        m.intrinsics.center_mode = ProjectionCenterMode::BoxCenter;
      } else if (mode == "principal") {
        m.intrinsics.center_mode = ProjectionCenterMode::PrincipalPoint;
        if (!(ss >> m.intrinsics.px >> m.intrinsics.py))
          bad("principal mode needs px py");
      } else {
        bad("unknown projection_center mode '" + mode + "'");
      }
      saw_center = true;
    } else {
      bad("unknown key '" + key + "'");
    }
    std::string rest;
    if (ss >> rest) bad("trailing tokens after value");
  }
  if (!(saw_frames && saw_width && saw_height && saw_fx && saw_fy && saw_center))
    raise(ErrorCode::MalformedManifest, file.string() + ": missing required keys");
  m.intrinsics.validate();
  return m;
}

void write_manifest(const SequenceManifest& m, const fs::path& file) {
  std::FILE* f = std::fopen(file.string().c_str(), "wb");
  if (!f) raise(ErrorCode::IoError, "cannot open " + file.string());
  std::fprintf(f, "frames %d\n", m.frames);
  std::fprintf(f, "width %d\n", m.intrinsics.width);
  std::fprintf(f, "height %d\n", m.intrinsics.height);
  std::fprintf(f, "fx %.9g\n", m.intrinsics.fx);
  std::fprintf(f, "fy %.9g\n", m.intrinsics.fy);
  if (m.intrinsics.center_mode == ProjectionCenterMode::BoxCenter)
    std::fprintf(f, "projection_center box\n");
  else
    std::fprintf(f, "projection_center principal %.9g %.9g\n", m.intrinsics.px,
                 m.intrinsics.py);
  std::fclose(f);
}

// ---------------------------------------------------------------------------
// depth rasters

namespace {

constexpr char kDepthMagic[4] = {'G', 'D', 'P', 'T'};

uint32_t read_u32_le(const unsigned char* p) {
  return uint32_t{p[0]} | (uint32_t{p[1]} << 8) | (uint32_t{p[2]} << 16) |
         (uint32_t{p[3]} << 24);
}

void write_u32_le(std::FILE* f, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  std::fwrite(b, 1, 4, f);
}

struct DepthHeader {
  uint32_t width = 0, height = 0, flags = 0;
};

DepthHeader read_depth_header(std::FILE* f, const fs::path& file) {
  unsigned char hdr[16];
  if (std::fread(hdr, 1, 16, f) != 16)
    raise(ErrorCode::IoError, file.string() + ": truncated header");
  if (std::memcmp(hdr, kDepthMagic, 4) != 0)
    raise(ErrorCode::IoError, file.string() + ": bad magic");
  DepthHeader h;
  h.width = read_u32_le(hdr + 4);
  h.height = read_u32_le(hdr + 8);
  h.flags = read_u32_le(hdr + 12);
  if (h.flags != 0) raise(ErrorCode::IoError, file.string() + ": unsupported flags");
  return h;
}

}  // namespace

DepthMap read_depth_file(const fs::path& file) {
  std::FILE* f = std::fopen(file.string().c_str(), "rb");
  if (!f) raise(ErrorCode::MissingFile, file.string());
  DepthMap d;
  try {
    const DepthHeader h = read_depth_header(f, file);
    d.width = static_cast<int>(h.width);
    d.height = static_cast<int>(h.height);
    const std::size_t n = std::size_t{h.width} * h.height;
    d.values.resize(n);
    if (std::fread(d.values.data(), sizeof(float), n, f) != n)
      raise(ErrorCode::DimensionMismatch,
            file.string() + ": payload shorter than declared dimensions");
    unsigned char extra;
    if (std::fread(&extra, 1, 1, f) == 1)
      raise(ErrorCode::DimensionMismatch,
            file.string() + ": payload longer than declared dimensions");
    for (float v : d.values)
      if (!std::isfinite(v) || v < 0.0f)
        raise(ErrorCode::IoError, file.string() + ": invalid depth value");
  } catch (...) {
    std::fclose(f);
    throw;
  }
  std::fclose(f);
  return d;
}

void write_depth_file(const DepthMap& depth, const fs::path& file) {
  std::FILE* f = std::fopen(file.string().c_str(), "wb");
  if (!f) raise(ErrorCode::IoError, "cannot open " + file.string());
  std::fwrite(kDepthMagic, 1, 4, f);
  write_u32_le(f, static_cast<uint32_t>(depth.width));
  write_u32_le(f, static_cast<uint32_t>(depth.height));
  write_u32_le(f, 0);
  // Values are IEEE-754 binary32; the build targets little-endian hosts.
  const std::size_t n = depth.values.size();
  if (std::fwrite(depth.values.data(), sizeof(float), n, f) != n) {
    std::fclose(f);
    raise(ErrorCode::IoError, "write failed on " + file.string());
  }
  if (std::fclose(f) != 0) raise(ErrorCode::IoError, "close failed on " + file.string());
}

fs::path depth_file_path(const fs::path& root, int frame) {
  char name[32];
  std::snprintf(name, sizeof(name), "%06d.gdpt", frame);
  return root / "depth" / name;
}

// ---------------------------------------------------------------------------
// detections

namespace {

void validate_detection(const Detection& det, const SequenceManifest& m,
                        int frame, int index, std::vector<std::string>* warnings) {
  const auto& intr = m.intrinsics;
  const auto where = [&] {
    return "frame " + std::to_string(frame) + " detection " + std::to_string(index);
  };
  if (!(det.bbox.x1 < det.bbox.x2) || !(det.bbox.y1 < det.bbox.y2))
    raise(ErrorCode::MalformedDetections, where() + ": degenerate bbox");
  if (det.bbox.x2 <= 0 || det.bbox.y2 <= 0 ||
      det.bbox.x1 >= static_cast<float>(intr.width) ||
      det.bbox.y1 >= static_cast<float>(intr.height))
    raise(ErrorCode::MalformedDetections, where() + ": bbox outside image");
  if (!(det.score >= 0.0f && det.score <= 1.0f))
    raise(ErrorCode::MalformedDetections, where() + ": score outside [0,1]");
  if (det.mask.width != intr.width || det.mask.height != intr.height)
    raise(ErrorCode::DimensionMismatch, where() + ": mask dims differ from image");
  validate_rle(det.mask);
  if (det.has_embedding()) {
    double norm2 = 0;
    for (float e : det.embedding) norm2 += double(e) * e;
    if (std::abs(std::sqrt(norm2) - 1.0) > 1e-6)
      raise(ErrorCode::MalformedDetections, where() + ": embedding not unit-norm");
  }
  if (warnings) {
    // Set pixels must lie inside the bbox clipped to the image; violations
    // are reported but tolerated.
    const int cx1 = static_cast<int>(std::floor(std::max(det.bbox.x1, 0.0f)));
    const int cy1 = static_cast<int>(std::floor(std::max(det.bbox.y1, 0.0f)));
    const int cx2 = static_cast<int>(std::ceil(std::min(det.bbox.x2, float(intr.width))));
    const int cy2 = static_cast<int>(std::ceil(std::min(det.bbox.y2, float(intr.height))));
    long long outside = 0;
    for_each_run(det.mask, [&](int u, int v0, int len) {
      if (u < cx1 || u >= cx2) {
        outside += len;
        return;
      }
      const int lo = std::max(v0, cy1);
      const int hi = std::min(v0 + len, cy2);
      outside += len - std::max(0, hi - lo);
    });
    if (outside > 0)
      warnings->push_back(where() + ": " + std::to_string(outside) +
                          " mask pixels outside bbox");
  }
}

}  // namespace

std::vector<std::vector<Detection>> parse_detections_file(
    const fs::path& file, const SequenceManifest& manifest,
    std::vector<std::string>* warnings) {
  std::ifstream in(file);
  if (!in) raise(ErrorCode::MissingFile, file.string());

  std::vector<std::vector<Detection>> per_frame(
      static_cast<std::size_t>(manifest.frames));
  std::string line;
  int lineno = 0;
  int last_frame = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    const auto bad = [&](const std::string& why) {
      raise(ErrorCode::MalformedDetections,
            file.string() + ":" + std::to_string(lineno) + ": " + why);
    };
    int frame = 0;
    Detection det;
    std::string tag;
    int k = 0;
    if (!(ss >> frame >> det.bbox.x1 >> det.bbox.y1 >> det.bbox.x2 >>
          det.bbox.y2 >> det.score >> tag))
      bad("short record");
    if (tag != "rle") bad("expected 'rle' tag");
    if (!(ss >> det.mask.width >> det.mask.height >> k) || k < 0)
      bad("bad rle header");
    det.mask.counts.resize(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i)
      if (!(ss >> det.mask.counts[i])) bad("truncated rle counts");
    if (ss >> tag) {
      if (tag != "emb") bad("unexpected trailing tag '" + tag + "'");
      int m = 0;
      if (!(ss >> m) || m <= 0) bad("bad embedding size");
      det.embedding.resize(static_cast<std::size_t>(m));
      for (int i = 0; i < m; ++i)
        if (!(ss >> det.embedding[i])) bad("truncated embedding");
      if (ss >> tag) bad("trailing tokens");
    }
    if (frame < last_frame)
      raise(ErrorCode::NonMonotonicFrameIndex,
            file.string() + ":" + std::to_string(lineno) + ": frame " +
                std::to_string(frame) + " after " + std::to_string(last_frame));
    if (frame < 1 || frame > manifest.frames)
      bad("frame index outside sequence");
    last_frame = frame;
    auto& dst = per_frame[static_cast<std::size_t>(frame) - 1];
    validate_detection(det, manifest, frame, static_cast<int>(dst.size()), warnings);
    dst.push_back(std::move(det));
  }
  return per_frame;
}

void write_detections_file(const std::vector<std::vector<Detection>>& per_frame,
                           const fs::path& file) {
  std::FILE* f = std::fopen(file.string().c_str(), "wb");
  if (!f) raise(ErrorCode::IoError, "cannot open " + file.string());
  for (std::size_t fi = 0; fi < per_frame.size(); ++fi) {
    for (const Detection& det : per_frame[fi]) {
      std::fprintf(f, "%d %.9g %.9g %.9g %.9g %.9g rle %d %d %zu",
                   static_cast<int>(fi) + 1, det.bbox.x1, det.bbox.y1,
                   det.bbox.x2, det.bbox.y2, det.score, det.mask.width,
                   det.mask.height, det.mask.counts.size());
      for (int c : det.mask.counts) std::fprintf(f, " %d", c);
      if (det.has_embedding()) {
        std::fprintf(f, " emb %zu", det.embedding.size());
        for (float e : det.embedding) std::fprintf(f, " %.9g", e);
      }
      std::fprintf(f, "\n");
    }
  }
  if (std::fclose(f) != 0) raise(ErrorCode::IoError, "close failed on " + file.string());
}

// ---------------------------------------------------------------------------
// sequence

Sequence Sequence::parse(const fs::path& root) {
  Sequence seq;
  seq.root_ = root;
  if (!fs::is_directory(root))
    raise(ErrorCode::MissingFile, root.string() + " is not a directory");
  seq.manifest_ = parse_manifest(root / "manifest");
  seq.detections_ = parse_detections_file(root / "det" / "detections.txt",
                                          seq.manifest_, &seq.warnings_);
  // Validate every depth raster's header and payload length up front so a
  // dimension mismatch fails at parse time, not mid-run.
  for (int frame = 1; frame <= seq.manifest_.frames; ++frame) {
    const fs::path path = depth_file_path(root, frame);
    std::FILE* f = std::fopen(path.string().c_str(), "rb");
    if (!f) raise(ErrorCode::MissingFile, path.string());
    DepthHeader h;
    try {
      h = read_depth_header(f, path);
    } catch (...) {
      std::fclose(f);
      throw;
    }
    std::fclose(f);
    if (static_cast<int>(h.width) != seq.manifest_.intrinsics.width ||
        static_cast<int>(h.height) != seq.manifest_.intrinsics.height)
      raise(ErrorCode::DimensionMismatch,
            path.string() + ": depth dims disagree with manifest");
    const auto expect = 16 + std::uintmax_t{h.width} * h.height * sizeof(float);
    if (fs::file_size(path) != expect)
      raise(ErrorCode::DimensionMismatch,
            path.string() + ": payload length disagrees with header");
  }
  return seq;
}

FrameRecord Sequence::load_frame(int index) const {
  if (index < 1 || index > manifest_.frames)
    raise(ErrorCode::MissingFile, "frame index " + std::to_string(index) +
                                      " outside [1, " +
                                      std::to_string(manifest_.frames) + "]");
  FrameRecord rec;
  rec.frame_index = index;
  rec.depth = read_depth_file(depth_file_path(root_, index));
  if (rec.depth.width != manifest_.intrinsics.width ||
      rec.depth.height != manifest_.intrinsics.height)
    raise(ErrorCode::DimensionMismatch, "depth dims disagree with manifest");
  rec.detections = detections_[static_cast<std::size_t>(index) - 1];
  return rec;
}

void write_sequence(const SequenceManifest& manifest,
                    const std::vector<DepthMap>& depths,
                    const std::vector<std::vector<Detection>>& detections,
                    const fs::path& root) {
  if (static_cast<int>(depths.size()) != manifest.frames ||
      static_cast<int>(detections.size()) != manifest.frames)
    raise(ErrorCode::DimensionMismatch, "frame payloads disagree with manifest");
  fs::create_directories(root / "det");
  fs::create_directories(root / "depth");
  write_manifest(manifest, root / "manifest");
  write_detections_file(detections, root / "det" / "detections.txt");
  for (int frame = 1; frame <= manifest.frames; ++frame)
    write_depth_file(depths[static_cast<std::size_t>(frame) - 1],
                     depth_file_path(root, frame));
}

}  // namespace voxtrack
