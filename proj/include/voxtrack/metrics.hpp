// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <voxtrack/mot_io.hpp>

#include <array>
#include <string>
#include <vector>

namespace voxtrack {

struct EvalOptions {
  double iou_threshold = 0.5;  // CLEAR and identity matching
  double min_visibility = 0.0; // ground-truth rows below this are dropped
};

constexpr int kHotaAlphaCount = 19;  // 0.05, 0.10, ..., 0.95

struct EvalReport {
  double mota = 0, idf1 = 0, hota = 0, deta = 0, assa = 0;
  long id_switches = 0, fp = 0, fn = 0, matches = 0;
  long gt_total = 0, pred_total = 0;
  std::array<double, kHotaAlphaCount> alpha{};
  std::array<double, kHotaAlphaCount> hota_alpha{};
  std::array<double, kHotaAlphaCount> deta_alpha{};
  std::array<double, kHotaAlphaCount> assa_alpha{};

  std::string to_text() const;
  std::string curve_csv() const;
};

struct ClearResult {
  double mota = 0;
  long fp = 0, fn = 0, idsw = 0, matches = 0, gt_total = 0;
};

/// CLEAR matching: carried-over identities keep their match while the
/// overlap holds, the rest is matched greedily by descending IoU. Switches
/// are counted against the last known match of each ground-truth identity.
ClearResult clear_metrics(const std::vector<MotRow>& gt,
                          const std::vector<MotRow>& pred,
                          double iou_threshold = 0.5);

/// Identity-F1 under the globally optimal trajectory mapping.
double idf1(const std::vector<MotRow>& gt, const std::vector<MotRow>& pred,
            double iou_threshold = 0.5);

struct HotaResult {
  double hota = 0, deta = 0, assa = 0;
  std::array<double, kHotaAlphaCount> alpha{};
  std::array<double, kHotaAlphaCount> hota_alpha{};
  std::array<double, kHotaAlphaCount> deta_alpha{};
  std::array<double, kHotaAlphaCount> assa_alpha{};
};

/// HOTA over the 19-point localization grid; per frame one optimal matching
/// weighted by global alignment, thresholded per alpha, HOTA_a =
/// sqrt(DetA_a * AssA_a).
HotaResult hota(const std::vector<MotRow>& gt, const std::vector<MotRow>& pred);

/// Full report. Prediction frames must stay within the ground truth's frame
/// range (MisalignedFrames); gt rows below min_visibility are ignored.
EvalReport evaluate(const std::vector<MotRow>& gt,
                    const std::vector<MotRow>& pred,
                    const EvalOptions& options = {});

}  // namespace voxtrack
