// Copyright 2026 The ptdet Authors
// SPDX-License-Identifier: Apache-2.0
//
// Proposal recall and average precision.

#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "ptdet/iou.hpp"
#include "ptdet/kitti.hpp"

namespace ptdet {

struct RecallReport {
  std::size_t rois_count = 0;
  double iou_threshold = 0.0;
  double recall = 0.0;
  std::size_t matched = 0;
  std::size_t total_gt = 0;
  /// True when there were no ground-truth boxes (recall reported as 0).
  bool flagged = false;
};

/// Per frame, the top `rois` proposals by score are kept; a gt counts as
/// recalled (once) if any of them has iou_3d >= iou_thr with it.
RecallReport proposal_recall(std::span<const std::vector<ScoredBox>> proposals_per_frame,
                             std::span<const std::vector<Box3D>> gts_per_frame, std::size_t rois,
                             double iou_thr);

enum class ApInterpolation { Point11, Point40 };

struct PRCurve {
  std::vector<double> recall;     // non-decreasing
  std::vector<double> precision;  // aligned with recall
  double ap = 0.0;
};

/// Detections of all frames are visited by descending score; each is a true
/// positive when the unmatched gt of its frame with the highest 3D IoU
/// reaches iou_thr, and that gt is then consumed. AP is interpolated at
/// recall points {0, 0.1, ..., 1} (Point11) or {1/40, ..., 1} (Point40).
PRCurve average_precision(std::span<const std::vector<ScoredBox>> dets_per_frame,
                          std::span<const std::vector<Box3D>> gts_per_frame, double iou_thr,
                          ApInterpolation interp = ApInterpolation::Point11);

/// Interpolated AP of an existing precision/recall table.
double interpolated_ap(std::span<const double> recall, std::span<const double> precision, ApInterpolation interp);

enum class Difficulty { Easy, Moderate, Hard };

/// KITTI devkit gt filter: minimum 2D box height (40/25/25 px), maximum
/// occlusion (0/1/2) and maximum truncation (0.15/0.3/0.5).
bool passes_difficulty(const kitti::KittiObject& obj, Difficulty d);

// Reports --------------------------------------------------------------------

/// Plain-text table: one row per rois value, one column per IoU threshold.
void write_recall_table(std::ostream& out, std::span<const RecallReport> reports);

/// CSV with header "rois,iou_threshold,recall,matched,total_gt".
void write_recall_csv(std::ostream& out, std::span<const RecallReport> reports);

}  // namespace ptdet
