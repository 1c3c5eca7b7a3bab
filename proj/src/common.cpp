// SPDX-License-Identifier: Apache-2.0
#include <voxtrack/common.hpp>

#include <algorithm>

namespace voxtrack {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingFile: return "MissingFile";
    case ErrorCode::MalformedManifest: return "MalformedManifest";
    case ErrorCode::MalformedDetections: return "MalformedDetections";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonMonotonicFrameIndex: return "NonMonotonicFrameIndex";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::BothEmpty: return "BothEmpty";
    case ErrorCode::NonPositiveVoxelSize: return "NonPositiveVoxelSize";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::NonPositiveGeometry: return "NonPositiveGeometry";
    case ErrorCode::SingularInnovationCovariance: return "SingularInnovationCovariance";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::OutOfOrderFrame: return "OutOfOrderFrame";
    case ErrorCode::MisalignedFrames: return "MisalignedFrames";
    case ErrorCode::BadConfig: return "BadConfig";
  }
  return "UnknownError";
}

void raise(ErrorCode code, const std::string& what) { throw Error(code, what); }

double iou_2d(const Box& a, const Box& b) {
  const double ix = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double iy = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  if (ix <= 0 || iy <= 0) return 0.0;
  const double inter = ix * iy;
  const double uni = double(a.area()) + double(b.area()) - inter;
  return uni > 0 ? inter / uni : 0.0;
}

}  // namespace voxtrack
