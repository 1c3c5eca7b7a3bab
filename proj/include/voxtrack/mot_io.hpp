// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <voxtrack/types.hpp>

#include <filesystem>
#include <vector>

namespace voxtrack {

/// One parsed row of a MOT-format file. For prediction files visibility and
/// depth keep their defaults; gt.txt carries both in its trailing columns.
struct MotRow {
  int frame = 0;
  int id = 0;
  Box box;
  double conf = 1.0;
  double visibility = 1.0;
  double depth = 0.0;
};

/// Writes `frame,id,bb_left,bb_top,bb_width,bb_height,conf,-1,-1,-1` lines,
/// two fractional digits. Rows must already be sorted by (frame, id).
void write_mot_rows(const std::vector<TrackOutputRow>& rows,
                    const std::filesystem::path& path);

std::vector<MotRow> read_mot_rows(const std::filesystem::path& path);

/// gt.txt layout: frame,id,left,top,w,h,conf,visibility,depth.
std::vector<MotRow> read_gt_rows(const std::filesystem::path& path);

}  // namespace voxtrack
