// Copyright 2026 The ptdet Authors
// SPDX-License-Identifier: Apache-2.0

#include "ptdet/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "ptdet/kernels.hpp"

namespace ptdet {

namespace {

std::vector<Box3D> top_boxes(const std::vector<ScoredBox>& dets, std::size_t k) {
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return dets[a].score > dets[b].score; });
  std::vector<Box3D> out;
  for (std::size_t i = 0; i < std::min(k, order.size()); ++i) out.push_back(dets[order[i]].box);
  return out;
}

}  // namespace

RecallReport proposal_recall(std::span<const std::vector<ScoredBox>> proposals_per_frame,
                             std::span<const std::vector<Box3D>> gts_per_frame, std::size_t rois,
                             double iou_thr) {
  if (rois == 0) throw std::invalid_argument("proposal_recall: rois must be >= 1");
  if (proposals_per_frame.size() != gts_per_frame.size())
    throw std::invalid_argument("proposal_recall: frame counts differ");
  RecallReport rep;
  rep.rois_count = rois;
  rep.iou_threshold = iou_thr;
  for (std::size_t f = 0; f < gts_per_frame.size(); ++f) {
    const auto& gts = gts_per_frame[f];
    rep.total_gt += gts.size();
    if (gts.empty()) continue;
    const auto props = top_boxes(proposals_per_frame[f], rois);
    const auto iou = kernels::iou3d_matrix_omp(gts, props);
    for (std::size_t g = 0; g < gts.size(); ++g) {
      for (std::size_t p = 0; p < props.size(); ++p) {
        if (iou[g * props.size() + p] >= iou_thr) {
          ++rep.matched;
          break;
        }
      }
    }
  }
  if (rep.total_gt == 0) rep.flagged = true;
  else rep.recall = static_cast<double>(rep.matched) / static_cast<double>(rep.total_gt);
  return rep;
}

double interpolated_ap(std::span<const double> recall, std::span<const double> precision, ApInterpolation interp) {
  std::vector<double> points;
  if (interp == ApInterpolation::Point11) {
    for (int i = 0; i <= 10; ++i) points.push_back(i / 10.0);
  } else {
    for (int i = 1; i <= 40; ++i) points.push_back(i / 40.0);
  }
  // Neumaier summation so repeated fractions like 2/3 add up without drift.
  double sum = 0.0, comp = 0.0;
  for (double r : points) {
    double best = 0.0;
    for (std::size_t i = 0; i < recall.size(); ++i)
      if (recall[i] >= r) best = std::max(best, precision[i]);
    const double t = sum + best;
    comp += std::abs(sum) >= best ? (sum - t) + best : (best - t) + sum;
    sum = t;
  }
  return (sum + comp) / static_cast<double>(points.size());
}

PRCurve average_precision(std::span<const std::vector<ScoredBox>> dets_per_frame,
                          std::span<const std::vector<Box3D>> gts_per_frame, double iou_thr,
                          ApInterpolation interp) {
  if (dets_per_frame.size() != gts_per_frame.size())
    throw std::invalid_argument("average_precision: frame counts differ");
  struct Ref {
    std::size_t frame, index;
    double score;
  };
  std::vector<Ref> all;
  std::size_t total_gt = 0;
  std::vector<std::vector<double>> iou(dets_per_frame.size());
  for (std::size_t f = 0; f < dets_per_frame.size(); ++f) {
    total_gt += gts_per_frame[f].size();
    std::vector<Box3D> boxes;
    for (std::size_t i = 0; i < dets_per_frame[f].size(); ++i) {
      all.push_back({f, i, dets_per_frame[f][i].score});
      boxes.push_back(dets_per_frame[f][i].box);
    }
    iou[f] = kernels::iou3d_matrix_omp(boxes, gts_per_frame[f]);
  }
  std::stable_sort(all.begin(), all.end(), [](const Ref& a, const Ref& b) { return a.score > b.score; });

  std::vector<std::vector<char>> used(gts_per_frame.size());
  for (std::size_t f = 0; f < gts_per_frame.size(); ++f) used[f].assign(gts_per_frame[f].size(), 0);

  PRCurve curve;
  std::size_t tp = 0;
  for (std::size_t k = 0; k < all.size(); ++k) {
    const Ref& d = all[k];
    const std::size_t ng = gts_per_frame[d.frame].size();
    int best = -1;
    double best_iou = iou_thr;
    for (std::size_t g = 0; g < ng; ++g) {
      const double v = iou[d.frame][d.index * ng + g];
      if (!used[d.frame][g] && v >= best_iou) {
        if (best < 0 || v > best_iou) {
          best = static_cast<int>(g);
          best_iou = v;
        }
      }
    }
    if (best >= 0) {
      used[d.frame][static_cast<std::size_t>(best)] = 1;
      ++tp;
    }
    curve.recall.push_back(total_gt ? static_cast<double>(tp) / static_cast<double>(total_gt) : 0.0);
    curve.precision.push_back(static_cast<double>(tp) / static_cast<double>(k + 1));
  }
  curve.ap = total_gt ? interpolated_ap(curve.recall, curve.precision, interp) : 0.0;
  return curve;
}

bool passes_difficulty(const kitti::KittiObject& obj, Difficulty d) {
  static constexpr double kMinHeight[] = {40.0, 25.0, 25.0};
  static constexpr int kMaxOcclusion[] = {0, 1, 2};
  static constexpr double kMaxTruncation[] = {0.15, 0.3, 0.5};
  const int i = static_cast<int>(d);
  const double height = obj.bbox2d[3] - obj.bbox2d[1];
  return height >= kMinHeight[i] && obj.occlusion <= kMaxOcclusion[i] && obj.truncation <= kMaxTruncation[i];
}

void write_recall_table(std::ostream& out, std::span<const RecallReport> reports) {
  std::vector<double> thrs;
  std::map<std::size_t, std::map<double, double>> grid;
  for (const RecallReport& r : reports) {
    if (std::find(thrs.begin(), thrs.end(), r.iou_threshold) == thrs.end()) thrs.push_back(r.iou_threshold);
    grid[r.rois_count][r.iou_threshold] = r.recall;
  }
  char buf[64];
  out << "RoIs";
  for (double t : thrs) {
    std::snprintf(buf, sizeof(buf), "  Recall(IoU=%.2f)", t);
    out << buf;
  }
  out << '\n';
  for (const auto& [rois, row] : grid) {
    std::snprintf(buf, sizeof(buf), "%4zu", rois);
    out << buf;
    for (double t : thrs) {
      const auto it = row.find(t);
      if (it == row.end()) std::snprintf(buf, sizeof(buf), "  %16s", "-");
      else std::snprintf(buf, sizeof(buf), "  %15.2f%%", 100.0 * it->second);
      out << buf;
    }
    out << '\n';
  }
}

void write_recall_csv(std::ostream& out, std::span<const RecallReport> reports) {
  out << "rois,iou_threshold,recall,matched,total_gt\n";
  char buf[160];
  for (const RecallReport& r : reports) {
    std::snprintf(buf, sizeof(buf), "%zu,%.4f,%.6f,%zu,%zu\n", r.rois_count, r.iou_threshold, r.recall, r.matched,
                  r.total_gt);
    out << buf;
  }
}

}  // namespace ptdet
