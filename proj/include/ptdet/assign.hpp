// Copyright 2026 The ptdet Authors
// SPDX-License-Identifier: Apache-2.0
//
// Training-target assignment and scene augmentation.

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "ptdet/geom.hpp"
#include "ptdet/losses.hpp"

namespace ptdet {

enum class PointLabel : std::uint8_t { Background = 0, Foreground = 1, Ignored = 2 };

/// Foreground: inside any gt box. Ignored: outside every gt box but inside
/// one grown by `ignore_margin` on each side (2 * margin per dimension).
/// Background otherwise.
std::vector<PointLabel> label_points(const PointCloud& cloud, std::span<const Box3D> gt_boxes,
                                     double ignore_margin = 0.2);

/// For each point, the index of the gt box it is inside, or -1.
std::vector<int> point_gt_index(const PointCloud& cloud, std::span<const Box3D> gt_boxes);

struct AssignThresholds {
  double positive = 0.6;    // max IoU >= positive -> Positive
  double negative = 0.45;   // max IoU <  negative -> Negative
  double regression = 0.55; // max IoU >= regression -> regression target attached
};

struct ProposalLabel {
  ProposalClass cls = ProposalClass::Negative;
  std::optional<Box3D> regression_gt;
  int best_gt = -1;
  double max_iou = 0.0;
};

/// Labels proposals by their maximum 3D IoU over the gt boxes.
std::vector<ProposalLabel> label_proposals(std::span<const Box3D> proposals, std::span<const Box3D> gt_boxes,
                                           const AssignThresholds& thr = {});

struct GtSample {
  Box3D box;
  PointCloud points;  // the box's interior points in its source scene
};

struct AugmentConfig {
  double flip_prob = 0.5;
  double scale_min = 0.95;
  double scale_max = 1.05;
  double rot_range = kPi / 18.0;  // +-10 degrees
  std::vector<GtSample> gtaug_pool;
  std::size_t gtaug_max_boxes = 10;
};

/// One random draw of the global augmentation.
struct AugmentDraw {
  bool flip = false;
  double scale = 1.0;
  double rotation = 0.0;
};

AugmentDraw draw_augmentation(const AugmentConfig& cfg, std::uint64_t seed);

struct Scene {
  PointCloud cloud;
  std::vector<Box3D> boxes;
};

/// Applies flip (x -> -x, yaw -> pi - yaw), then a global scale, then a
/// rotation about the vertical axis, jointly to points and boxes.
Scene apply_augmentation(const Scene& scene, const AugmentDraw& draw);

Scene augment_scene(const Scene& scene, const AugmentConfig& cfg, std::uint64_t seed);

struct GtAugResult {
  Scene scene;
  std::size_t accepted = 0;
};

/// Tries up to cfg.gtaug_max_boxes pool samples (drawn without replacement);
/// a sample is pasted at its original location iff its BEV IoU with every box
/// already in the scene, including ones pasted earlier, is zero.
GtAugResult gt_aug(const Scene& scene, const AugmentConfig& cfg, std::uint64_t seed);

/// Indices selecting exactly `budget` points: a random subset when the cloud
/// is large enough, otherwise every point plus random repeats.
std::vector<std::size_t> subsample_points(std::size_t cloud_size, std::size_t budget, std::uint64_t seed);

/// Small random perturbation of a box for stage-2 training diversity.
Box3D jitter_box(const Box3D& b, double center_sigma, double size_sigma, double yaw_sigma, std::uint64_t seed);

}  // namespace ptdet
