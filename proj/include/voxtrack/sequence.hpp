// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <voxtrack/types.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace voxtrack {

// On-disk sequence layout:
//   <root>/manifest             key-value text, see parse_manifest
//   <root>/det/detections.txt   one detection per line
//   <root>/depth/%06d.gdpt      per-frame depth raster, 1-based
//
// Depth raster: 16-byte header (magic "GDPT", u32 LE width, u32 LE height,
// u32 LE flags = 0) followed by row-major IEEE-754 binary32 LE values.
//
// Detection line:
//   <frame> <x1> <y1> <x2> <y2> <score> rle <w> <h> <k> <c_1..c_k>
//   [emb <m> <e_1..e_m>]
// Floats are written with %.9g so a parse/serialize cycle is lossless.

struct SequenceManifest {
  int frames = 0;
  CameraIntrinsics intrinsics;
};

/// Immutable handle to a parsed sequence directory. Detections are parsed
/// eagerly (they are small); depth rasters load per frame. Const access is
/// safe to share across threads.
class Sequence {
 public:
  static Sequence parse(const std::filesystem::path& root);

  int frame_count() const { return manifest_.frames; }
  const CameraIntrinsics& intrinsics() const { return manifest_.intrinsics; }
  const SequenceManifest& manifest() const { return manifest_; }

  /// index is 1-based; loads the depth raster and attaches detections.
  FrameRecord load_frame(int index) const;

  const std::vector<Detection>& detections(int index) const {
    return detections_.at(static_cast<std::size_t>(index) - 1);
  }

  /// Non-fatal invariant violations found during parsing (mask pixels
  /// outside their clipped bbox).
  const std::vector<std::string>& warnings() const { return warnings_; }

  const std::filesystem::path& root() const { return root_; }

 private:
  std::filesystem::path root_;
  SequenceManifest manifest_;
  std::vector<std::vector<Detection>> detections_;
  std::vector<std::string> warnings_;
};

SequenceManifest parse_manifest(const std::filesystem::path& file);
void write_manifest(const SequenceManifest& m, const std::filesystem::path& file);

DepthMap read_depth_file(const std::filesystem::path& file);
void write_depth_file(const DepthMap& depth, const std::filesystem::path& file);

std::vector<std::vector<Detection>> parse_detections_file(
    const std::filesystem::path& file, const SequenceManifest& manifest,
    std::vector<std::string>* warnings);
void write_detections_file(const std::vector<std::vector<Detection>>& per_frame,
                           const std::filesystem::path& file);

/// Writes a complete sequence directory in the layout above.
void write_sequence(const SequenceManifest& manifest,
                    const std::vector<DepthMap>& depths,
                    const std::vector<std::vector<Detection>>& detections,
                    const std::filesystem::path& root);

std::filesystem::path depth_file_path(const std::filesystem::path& root, int frame);

}  // namespace voxtrack
