// Copyright 2026 The ptdet Authors
// SPDX-License-Identifier: Apache-2.0

#include "ptdet/assign.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "ptdet/iou.hpp"
#include "ptdet/kernels.hpp"
#include "ptdet/pool.hpp"

namespace ptdet {

std::vector<int> point_gt_index(const PointCloud& cloud, std::span<const Box3D> gt_boxes) {
  return kernels::points_in_boxes_omp(cloud.points, gt_boxes);
}

std::vector<PointLabel> label_points(const PointCloud& cloud, std::span<const Box3D> gt_boxes,
                                     double ignore_margin) {
  std::vector<PointLabel> labels(cloud.size(), PointLabel::Background);
  if (gt_boxes.empty()) return labels;
  std::vector<Box3D> grown(gt_boxes.begin(), gt_boxes.end());
  for (Box3D& b : grown) b = enlarge_box(b, 2.0 * ignore_margin);
  const auto inside = kernels::points_in_boxes_omp(cloud.points, gt_boxes);
  const auto near = kernels::points_in_boxes_omp(cloud.points, grown);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (inside[i] >= 0) labels[i] = PointLabel::Foreground;
    else if (near[i] >= 0) labels[i] = PointLabel::Ignored;
  }
  return labels;
}

std::vector<ProposalLabel> label_proposals(std::span<const Box3D> proposals, std::span<const Box3D> gt_boxes,
                                           const AssignThresholds& thr) {
  const auto iou = kernels::iou3d_matrix_omp(proposals, gt_boxes);
  std::vector<ProposalLabel> out(proposals.size());
  for (std::size_t i = 0; i < proposals.size(); ++i) {
    ProposalLabel& lab = out[i];
    for (std::size_t j = 0; j < gt_boxes.size(); ++j) {
      const double v = iou[i * gt_boxes.size() + j];
      if (v > lab.max_iou) {
        lab.max_iou = v;
        lab.best_gt = static_cast<int>(j);
      }
    }
    if (lab.max_iou >= thr.positive) lab.cls = ProposalClass::Positive;
    else if (lab.max_iou < thr.negative) lab.cls = ProposalClass::Negative;
    else lab.cls = ProposalClass::Ignored;
    if (lab.best_gt >= 0 && lab.max_iou >= thr.regression) lab.regression_gt = gt_boxes[lab.best_gt];
  }
  return out;
}

AugmentDraw draw_augmentation(const AugmentConfig& cfg, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  AugmentDraw d;
  d.flip = unit(rng) < cfg.flip_prob;
  d.scale = cfg.scale_min + (cfg.scale_max - cfg.scale_min) * unit(rng);
  d.rotation = cfg.rot_range * (2.0 * unit(rng) - 1.0);
  return d;
}

Scene apply_augmentation(const Scene& scene, const AugmentDraw& draw) {
  Scene out = scene;
  auto transform = [&](Point3 p) {
    if (draw.flip) p.x = -p.x;
    p = draw.scale * p;
    return rotate_yaw(p, draw.rotation);
  };
  for (Point3& p : out.cloud.points) p = transform(p);
  for (Box3D& b : out.boxes) {
    const Point3 c = transform(b.center());
    b.x = c.x;
    b.y = c.y;
    b.z = c.z;
    b.h *= draw.scale;
    b.w *= draw.scale;
    b.l *= draw.scale;
    double t = draw.flip ? kPi - b.theta : b.theta;
    b.theta = wrap_angle(t + draw.rotation);
  }
  return out;
}

Scene augment_scene(const Scene& scene, const AugmentConfig& cfg, std::uint64_t seed) {
  return apply_augmentation(scene, draw_augmentation(cfg, seed));
}

GtAugResult gt_aug(const Scene& scene, const AugmentConfig& cfg, std::uint64_t seed) {
  GtAugResult res{scene, 0};
  const auto& pool = cfg.gtaug_pool;
  if (pool.empty()) return res;
  const std::size_t tries = std::min(cfg.gtaug_max_boxes, pool.size());
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> order(pool.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = 0; i < tries; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, order.size() - 1);
    std::swap(order[i], order[pick(rng)]);
  }
  for (std::size_t i = 0; i < tries; ++i) {
    const GtSample& s = pool[order[i]];
    const bool clear = std::all_of(res.scene.boxes.begin(), res.scene.boxes.end(),
                                   [&](const Box3D& b) { return bev_iou(b, s.box) == 0.0; });
    if (!clear) continue;
    res.scene.boxes.push_back(s.box);
    res.scene.cloud.append(s.points);
    ++res.accepted;
  }
  return res;
}

std::vector<std::size_t> subsample_points(std::size_t cloud_size, std::size_t budget, std::uint64_t seed) {
  return sample_indices(cloud_size, budget, seed);
}

Box3D jitter_box(const Box3D& b, double center_sigma, double size_sigma, double yaw_sigma, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01(0.0, 1.0);
  Box3D j = b;
  j.x += center_sigma * n01(rng);
  j.y += center_sigma * n01(rng);
  j.z += center_sigma * n01(rng);
  j.h *= std::exp(size_sigma * n01(rng));
  j.w *= std::exp(size_sigma * n01(rng));
  j.l *= std::exp(size_sigma * n01(rng));
  j.theta = wrap_angle(b.theta + yaw_sigma * n01(rng));
  return j;
}

}  // namespace ptdet
