// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace voxtrack {

enum class ErrorCode {
  MissingFile,
  MalformedManifest,
  MalformedDetections,
  DimensionMismatch,
  NonMonotonicFrameIndex,
  LengthMismatch,
  IoError,
  BothEmpty,
  NonPositiveVoxelSize,
  GridMismatch,
  NonPositiveGeometry,
  SingularInnovationCovariance,
  ShapeMismatch,
  OutOfOrderFrame,
  MisalignedFrames,
  BadConfig,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + what),
        code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void raise(ErrorCode code, const std::string& what);

/// Axis-aligned image-plane box in pixels, corners (x1,y1)-(x2,y2), x1 < x2.
struct Box {
  float x1 = 0, y1 = 0, x2 = 0, y2 = 0;

  float width() const { return x2 - x1; }
  float height() const { return y2 - y1; }
  float area() const { return width() * height(); }
  float cx() const { return 0.5f * (x1 + x2); }
  float cy() const { return 0.5f * (y1 + y2); }
};

double iou_2d(const Box& a, const Box& b);

}  // namespace voxtrack
