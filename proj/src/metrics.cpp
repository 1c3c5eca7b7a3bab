// SPDX-License-Identifier: Apache-2.0
#include <voxtrack/association.hpp>
#include <voxtrack/metrics.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

namespace voxtrack {

namespace {

struct FrameData {
  std::vector<int> gt_ids, pred_ids;      // dense indices
  std::vector<Box> gt_boxes, pred_boxes;
};

struct Aligned {
  std::vector<FrameData> frames;
  int n_gt_ids = 0, n_pred_ids = 0;
  long gt_total = 0, pred_total = 0;
  std::vector<int> gt_label, pred_label;  // dense index -> original id
};

Aligned align(const std::vector<MotRow>& gt, const std::vector<MotRow>& pred) {
  int max_frame = 0;
  for (const auto& r : gt) {
    if (r.frame < 1) raise(ErrorCode::MisalignedFrames, "gt frame below 1");
    max_frame = std::max(max_frame, r.frame);
  }
  for (const auto& r : pred) {
    if (r.frame < 1) raise(ErrorCode::MisalignedFrames, "pred frame below 1");
    if (!gt.empty() && r.frame > max_frame)
      raise(ErrorCode::MisalignedFrames,
            "prediction frame " + std::to_string(r.frame) +
                " beyond ground-truth range " + std::to_string(max_frame));
    max_frame = std::max(max_frame, r.frame);
  }
  Aligned out;
  out.frames.resize(static_cast<std::size_t>(max_frame));
  std::map<int, int> gt_map, pred_map;
  for (const auto& r : gt) {
    auto [it, inserted] = gt_map.try_emplace(r.id, out.n_gt_ids);
    if (inserted) {
      out.gt_label.push_back(r.id);
      ++out.n_gt_ids;
    }
    auto& f = out.frames[static_cast<std::size_t>(r.frame) - 1];
    f.gt_ids.push_back(it->second);
    f.gt_boxes.push_back(r.box);
    ++out.gt_total;
  }
  for (const auto& r : pred) {
    auto [it, inserted] = pred_map.try_emplace(r.id, out.n_pred_ids);
    if (inserted) {
      out.pred_label.push_back(r.id);
      ++out.n_pred_ids;
    }
    auto& f = out.frames[static_cast<std::size_t>(r.frame) - 1];
    f.pred_ids.push_back(it->second);
    f.pred_boxes.push_back(r.box);
    ++out.pred_total;
  }
  return out;
}

constexpr double kBig = 1e12;

}  // namespace

ClearResult clear_metrics(const std::vector<MotRow>& gt,
                          const std::vector<MotRow>& pred,
                          double iou_threshold) {
  const Aligned data = align(gt, pred);
  ClearResult res;
  res.gt_total = data.gt_total;
  std::vector<int> last_match(static_cast<std::size_t>(data.n_gt_ids), -1);

  for (const FrameData& f : data.frames) {
    const int ng = static_cast<int>(f.gt_ids.size());
    const int np = static_cast<int>(f.pred_ids.size());
    std::vector<int> gt_to(static_cast<std::size_t>(ng), -1);
    std::vector<char> pred_used(static_cast<std::size_t>(np), 0);

    // Keep matches that persist from earlier frames.
    for (int i = 0; i < ng; ++i) {
      const int want = last_match[static_cast<std::size_t>(f.gt_ids[static_cast<std::size_t>(i)])];
      if (want < 0) continue;
      for (int j = 0; j < np; ++j) {
        if (pred_used[static_cast<std::size_t>(j)]) continue;
        if (f.pred_ids[static_cast<std::size_t>(j)] != want) continue;
        if (iou_2d(f.gt_boxes[static_cast<std::size_t>(i)],
                   f.pred_boxes[static_cast<std::size_t>(j)]) >= iou_threshold) {
          gt_to[static_cast<std::size_t>(i)] = j;
          pred_used[static_cast<std::size_t>(j)] = 1;
        }
        break;
      }
    }
    // Remaining pairs greedily by descending IoU, ties by lowest indices.
    struct Cand { double iou; int i, j; };
    std::vector<Cand> cands;
    for (int i = 0; i < ng; ++i) {
      if (gt_to[static_cast<std::size_t>(i)] >= 0) continue;
      for (int j = 0; j < np; ++j) {
        if (pred_used[static_cast<std::size_t>(j)]) continue;
        const double v = iou_2d(f.gt_boxes[static_cast<std::size_t>(i)],
                                f.pred_boxes[static_cast<std::size_t>(j)]);
        if (v >= iou_threshold) cands.push_back({v, i, j});
      }
    }
    std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
      if (a.iou != b.iou) return a.iou > b.iou;
      if (a.i != b.i) return a.i < b.i;
      return a.j < b.j;
    });
    for (const Cand& c : cands) {
      if (gt_to[static_cast<std::size_t>(c.i)] >= 0 ||
          pred_used[static_cast<std::size_t>(c.j)])
        continue;
      gt_to[static_cast<std::size_t>(c.i)] = c.j;
      pred_used[static_cast<std::size_t>(c.j)] = 1;
    }

    for (int i = 0; i < ng; ++i) {
      const int j = gt_to[static_cast<std::size_t>(i)];
      if (j < 0) {
        ++res.fn;
        continue;
      }
      ++res.matches;
      const int g = f.gt_ids[static_cast<std::size_t>(i)];
      const int p = f.pred_ids[static_cast<std::size_t>(j)];
      if (last_match[static_cast<std::size_t>(g)] >= 0 &&
          last_match[static_cast<std::size_t>(g)] != p)
        ++res.idsw;
      last_match[static_cast<std::size_t>(g)] = p;
    }
    for (int j = 0; j < np; ++j)
      if (!pred_used[static_cast<std::size_t>(j)]) ++res.fp;
  }

  if (res.gt_total > 0)
    res.mota = 1.0 - static_cast<double>(res.fp + res.fn + res.idsw) /
                         static_cast<double>(res.gt_total);
  else
    res.mota = (res.fp + res.idsw) == 0 ? 1.0 : 0.0;
  return res;
}

double idf1(const std::vector<MotRow>& gt, const std::vector<MotRow>& pred,
            double iou_threshold) {
  const Aligned data = align(gt, pred);
  if (data.gt_total == 0 && data.pred_total == 0) return 1.0;
  if (data.gt_total == 0 || data.pred_total == 0) return 0.0;

  const int ng = data.n_gt_ids, np = data.n_pred_ids;
  Eigen::MatrixXd overlap = Eigen::MatrixXd::Zero(ng, np);
  std::vector<long> cnt_g(static_cast<std::size_t>(ng), 0);
  std::vector<long> cnt_p(static_cast<std::size_t>(np), 0);
  for (const FrameData& f : data.frames) {
    for (int g : f.gt_ids) ++cnt_g[static_cast<std::size_t>(g)];
    for (int p : f.pred_ids) ++cnt_p[static_cast<std::size_t>(p)];
    for (std::size_t i = 0; i < f.gt_ids.size(); ++i)
      for (std::size_t j = 0; j < f.pred_ids.size(); ++j)
        if (iou_2d(f.gt_boxes[i], f.pred_boxes[j]) >= iou_threshold)
          overlap(f.gt_ids[i], f.pred_ids[j]) += 1.0;
  }

  // Square expansion: trajectory pairs cost their disagreement, unmatched
  // trajectories cost their full length.
  const int size = ng + np;
  Eigen::MatrixXd cost(size, size);
  cost.setConstant(kBig);
  for (int g = 0; g < ng; ++g)
    for (int p = 0; p < np; ++p)
      cost(g, p) = static_cast<double>(cnt_g[static_cast<std::size_t>(g)]) +
                   static_cast<double>(cnt_p[static_cast<std::size_t>(p)]) -
                   2.0 * overlap(g, p);
  for (int g = 0; g < ng; ++g)
    cost(g, np + g) = static_cast<double>(cnt_g[static_cast<std::size_t>(g)]);
  for (int p = 0; p < np; ++p)
    cost(ng + p, p) = static_cast<double>(cnt_p[static_cast<std::size_t>(p)]);
  for (int g = 0; g < ng; ++g)
    for (int p = 0; p < np; ++p) cost(ng + p, np + g) = 0.0;

  const std::vector<int> assign = solve_square_assignment(cost);
  double idtp = 0;
  for (int g = 0; g < ng; ++g) {
    const int j = assign[static_cast<std::size_t>(g)];
    if (j < np) idtp += overlap(g, j);
  }
  const double idfn = static_cast<double>(data.gt_total) - idtp;
  const double idfp = static_cast<double>(data.pred_total) - idtp;
  return 2.0 * idtp / (2.0 * idtp + idfp + idfn);
}

HotaResult hota(const std::vector<MotRow>& gt, const std::vector<MotRow>& pred) {
  const Aligned data = align(gt, pred);
  HotaResult res;
  for (int a = 0; a < kHotaAlphaCount; ++a)
    res.alpha[static_cast<std::size_t>(a)] = 0.05 * (a + 1);

  if (data.gt_total == 0 && data.pred_total == 0) {
    res.hota = res.deta = res.assa = 1.0;
    res.hota_alpha.fill(1.0);
    res.deta_alpha.fill(1.0);
    res.assa_alpha.fill(1.0);
    return res;
  }
  const int ng = data.n_gt_ids, np = data.n_pred_ids;
  if (ng == 0 || np == 0) return res;  // everything stays 0

  // Pass 1: global alignment scores from Jaccard-normalized similarities.
  Eigen::MatrixXd potential = Eigen::MatrixXd::Zero(ng, np);
  std::vector<long> cnt_g(static_cast<std::size_t>(ng), 0);
  std::vector<long> cnt_p(static_cast<std::size_t>(np), 0);
  std::vector<Eigen::MatrixXd> sims;
  sims.reserve(data.frames.size());
  for (const FrameData& f : data.frames) {
    const auto fg = static_cast<Eigen::Index>(f.gt_ids.size());
    const auto fp = static_cast<Eigen::Index>(f.pred_ids.size());
    Eigen::MatrixXd sim(fg, fp);
    for (Eigen::Index i = 0; i < fg; ++i)
      for (Eigen::Index j = 0; j < fp; ++j)
        sim(i, j) = iou_2d(f.gt_boxes[static_cast<std::size_t>(i)],
                           f.pred_boxes[static_cast<std::size_t>(j)]);
    for (int g : f.gt_ids) ++cnt_g[static_cast<std::size_t>(g)];
    for (int p : f.pred_ids) ++cnt_p[static_cast<std::size_t>(p)];
    for (Eigen::Index i = 0; i < fg; ++i) {
      const double row_sum = sim.row(i).sum();
      for (Eigen::Index j = 0; j < fp; ++j) {
        const double denom = row_sum + sim.col(j).sum() - sim(i, j);
        if (denom > 1e-12 && sim(i, j) > 0)
          potential(f.gt_ids[static_cast<std::size_t>(i)],
                    f.pred_ids[static_cast<std::size_t>(j)]) +=
              sim(i, j) / denom;
      }
    }
    sims.push_back(std::move(sim));
  }
  Eigen::MatrixXd alignment = Eigen::MatrixXd::Zero(ng, np);
  for (int g = 0; g < ng; ++g)
    for (int p = 0; p < np; ++p) {
      const double denom = static_cast<double>(cnt_g[static_cast<std::size_t>(g)]) +
                           static_cast<double>(cnt_p[static_cast<std::size_t>(p)]) -
                           potential(g, p);
      if (denom > 1e-12) alignment(g, p) = potential(g, p) / denom;
    }

  // Pass 2: one matching per frame (alignment-weighted similarity),
  // thresholded per alpha.
  std::array<long, kHotaAlphaCount> tp{};
  std::vector<Eigen::MatrixXd> match_counts(
      kHotaAlphaCount, Eigen::MatrixXd::Zero(ng, np));
  for (std::size_t t = 0; t < data.frames.size(); ++t) {
    const FrameData& f = data.frames[t];
    const Eigen::MatrixXd& sim = sims[t];
    const int fg = static_cast<int>(f.gt_ids.size());
    const int fp = static_cast<int>(f.pred_ids.size());
    if (fg == 0 || fp == 0) continue;
    const int size = std::max(fg, fp);
    Eigen::MatrixXd cost = Eigen::MatrixXd::Zero(size, size);
    for (int i = 0; i < fg; ++i)
      for (int j = 0; j < fp; ++j)
        cost(i, j) = -(alignment(f.gt_ids[static_cast<std::size_t>(i)],
                                 f.pred_ids[static_cast<std::size_t>(j)]) *
                           sim(i, j) +
                       1e-9 * sim(i, j));
    const std::vector<int> assign = solve_square_assignment(cost);
    for (int i = 0; i < fg; ++i) {
      const int j = assign[static_cast<std::size_t>(i)];
      if (j >= fp) continue;
      const double s = sim(i, j);
      for (int a = 0; a < kHotaAlphaCount; ++a) {
        if (s >= res.alpha[static_cast<std::size_t>(a)] - 1e-12) {
          ++tp[static_cast<std::size_t>(a)];
          match_counts[static_cast<std::size_t>(a)](
              f.gt_ids[static_cast<std::size_t>(i)],
              f.pred_ids[static_cast<std::size_t>(j)]) += 1.0;
        }
      }
    }
  }

  for (int a = 0; a < kHotaAlphaCount; ++a) {
    const double tpa = static_cast<double>(tp[static_cast<std::size_t>(a)]);
    const double fn = static_cast<double>(data.gt_total) - tpa;
    const double fpv = static_cast<double>(data.pred_total) - tpa;
    const double deta = tpa > 0 ? tpa / (tpa + fn + fpv) : 0.0;
    double assa = 0;
    if (tpa > 0) {
      const Eigen::MatrixXd& mc = match_counts[static_cast<std::size_t>(a)];
      for (int g = 0; g < ng; ++g)
        for (int p = 0; p < np; ++p) {
          if (mc(g, p) <= 0) continue;
          const double denom =
              static_cast<double>(cnt_g[static_cast<std::size_t>(g)]) +
              static_cast<double>(cnt_p[static_cast<std::size_t>(p)]) - mc(g, p);
          assa += mc(g, p) * (mc(g, p) / denom);
        }
      assa /= tpa;
    }
    res.deta_alpha[static_cast<std::size_t>(a)] = deta;
    res.assa_alpha[static_cast<std::size_t>(a)] = assa;
    res.hota_alpha[static_cast<std::size_t>(a)] = std::sqrt(deta * assa);
  }
  for (int a = 0; a < kHotaAlphaCount; ++a) {
    res.hota += res.hota_alpha[static_cast<std::size_t>(a)];
    res.deta += res.deta_alpha[static_cast<std::size_t>(a)];
    res.assa += res.assa_alpha[static_cast<std::size_t>(a)];
  }
  res.hota /= kHotaAlphaCount;
  res.deta /= kHotaAlphaCount;
  res.assa /= kHotaAlphaCount;
  return res;
}

EvalReport evaluate(const std::vector<MotRow>& gt,
                    const std::vector<MotRow>& pred,
                    const EvalOptions& options) {
  std::vector<MotRow> gt_kept;
  gt_kept.reserve(gt.size());
  for (const auto& r : gt)
    if (r.visibility >= options.min_visibility) gt_kept.push_back(r);

  EvalReport rep;
  const ClearResult clear = clear_metrics(gt_kept, pred, options.iou_threshold);
  rep.mota = clear.mota;
  rep.fp = clear.fp;
  rep.fn = clear.fn;
  rep.id_switches = clear.idsw;
  rep.matches = clear.matches;
  rep.gt_total = clear.gt_total;
  rep.pred_total = static_cast<long>(pred.size());
  rep.idf1 = idf1(gt_kept, pred, options.iou_threshold);
  const HotaResult h = hota(gt_kept, pred);
  rep.hota = h.hota;
  rep.deta = h.deta;
  rep.assa = h.assa;
  rep.alpha = h.alpha;
  rep.hota_alpha = h.hota_alpha;
  rep.deta_alpha = h.deta_alpha;
  rep.assa_alpha = h.assa_alpha;
  return rep;
}

std::string EvalReport::to_text() const {
  std::ostringstream out;
  char line[96];
  std::snprintf(line, sizeof(line), "MOTA   %.6f\n", mota);
  out << line;
  std::snprintf(line, sizeof(line), "IDF1   %.6f\n", idf1);
  out << line;
  std::snprintf(line, sizeof(line), "HOTA   %.6f\n", hota);
  out << line;
  std::snprintf(line, sizeof(line), "DetA   %.6f\n", deta);
  out << line;
  std::snprintf(line, sizeof(line), "AssA   %.6f\n", assa);
  out << line;
  out << "IDSW   " << id_switches << "\n";
  out << "FP     " << fp << "\n";
  out << "FN     " << fn << "\n";
  out << "TP     " << matches << "\n";
  out << "GT     " << gt_total << "\n";
  out << "PRED   " << pred_total << "\n";
  return out.str();
}

std::string EvalReport::curve_csv() const {
  std::ostringstream out;
  out << "alpha,hota,deta,assa\n";
  for (int a = 0; a < kHotaAlphaCount; ++a) {
    char line[96];
    std::snprintf(line, sizeof(line), "%.2f,%.6f,%.6f,%.6f\n",
                  alpha[static_cast<std::size_t>(a)],
                  hota_alpha[static_cast<std::size_t>(a)],
                  deta_alpha[static_cast<std::size_t>(a)],
                  assa_alpha[static_cast<std::size_t>(a)]);
    out << line;
  }
  return out.str();
}

}  // namespace voxtrack
