// SPDX-License-Identifier: Apache-2.0
#include <voxtrack/mot_io.hpp>

#include <cinttypes>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace voxtrack {

void write_mot_rows(const std::vector<TrackOutputRow>& rows,
                    const std::filesystem::path& path) {
  std::FILE* f = std::fopen(path.string().c_str(), "wb");
  if (!f) raise(ErrorCode::IoError, "cannot open " + path.string());
  for (const auto& r : rows) {
    if (std::fprintf(f, "%d,%d,%.2f,%.2f,%.2f,%.2f,%.2f,-1,-1,-1\n", r.frame,
                     r.id, r.bb_left, r.bb_top, r.bb_width, r.bb_height,
                     r.conf) < 0) {
      std::fclose(f);
      raise(ErrorCode::IoError, "write failed on " + path.string());
    }
  }
  if (std::fclose(f) != 0) raise(ErrorCode::IoError, "close failed on " + path.string());
}

namespace {

std::vector<std::vector<double>> parse_csv_numbers(const std::filesystem::path& path,
                                                   std::size_t min_fields) {
  std::ifstream in(path);
  if (!in) raise(ErrorCode::MissingFile, path.string());
  std::vector<std::vector<double>> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> fields;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        fields.push_back(std::stod(cell));
      } catch (const std::exception&) {
        raise(ErrorCode::IoError, path.string() + ":" + std::to_string(lineno) +
                                      ": not a number: '" + cell + "'");
      }
    }
    if (fields.size() < min_fields)
      raise(ErrorCode::IoError, path.string() + ":" + std::to_string(lineno) +
                                    ": expected at least " +
                                    std::to_string(min_fields) + " fields");
    out.push_back(std::move(fields));
  }
  return out;
}

}  // namespace

std::vector<MotRow> read_mot_rows(const std::filesystem::path& path) {
  std::vector<MotRow> rows;
  for (const auto& f : parse_csv_numbers(path, 7)) {
    MotRow r;
    r.frame = static_cast<int>(f[0]);
    r.id = static_cast<int>(f[1]);
    r.box.x1 = static_cast<float>(f[2]);
    r.box.y1 = static_cast<float>(f[3]);
    r.box.x2 = static_cast<float>(f[2] + f[4]);
    r.box.y2 = static_cast<float>(f[3] + f[5]);
    r.conf = f[6];
    rows.push_back(r);
  }
  return rows;
}

std::vector<MotRow> read_gt_rows(const std::filesystem::path& path) {
  std::vector<MotRow> rows;
  for (const auto& f : parse_csv_numbers(path, 9)) {
    MotRow r;
    r.frame = static_cast<int>(f[0]);
    r.id = static_cast<int>(f[1]);
    r.box.x1 = static_cast<float>(f[2]);
    r.box.y1 = static_cast<float>(f[3]);
    r.box.x2 = static_cast<float>(f[2] + f[4]);
    r.box.y2 = static_cast<float>(f[3] + f[5]);
    r.conf = f[6];
    r.visibility = f[7];
    r.depth = f[8];
    rows.push_back(r);
  }
  return rows;
}

}  // namespace voxtrack
