// Copyright 2026 The ptdet Authors
// SPDX-License-Identifier: Apache-2.0
//
// Oriented bird's-eye-view IoU, 3D IoU and oriented NMS.

#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "ptdet/geom.hpp"

namespace ptdet {

/// Intersection slivers below this area (m^2) count as empty.
inline constexpr double kAreaEpsilon = 1e-12;

struct ScoredBox {
  Box3D box;
  double score = 0.0;
};

using Vec2 = std::array<double, 2>;

/// Clips a convex polygon by another convex polygon (both counter-clockwise
/// in the (x, z) plane) with Sutherland-Hodgman. Returns the intersection
/// polygon, possibly empty.
std::vector<Vec2> clip_convex(std::span<const Vec2> subject, std::span<const Vec2> clip);

/// Shoelace area, positive for counter-clockwise input.
double polygon_area(std::span<const Vec2> poly);

/// Ground-plane intersection area of two oriented boxes.
/// Throws std::invalid_argument for zero-area footprints.
double bev_intersection_area(const Box3D& a, const Box3D& b);

/// Oriented IoU of the ground-plane footprints, in [0, 1].
/// Throws std::invalid_argument for zero-area footprints.
double bev_iou(const Box3D& a, const Box3D& b);

/// Volumetric IoU: BEV intersection times vertical overlap over the union of
/// volumes. Throws std::invalid_argument for degenerate boxes.
double iou_3d(const Box3D& a, const Box3D& b);

/// Cheap necessary condition for a nonzero BEV overlap (circumscribed
/// circles intersect).
bool bev_may_overlap(const Box3D& a, const Box3D& b);

/// Greedy oriented NMS on BEV IoU. Boxes are visited by descending score
/// (ties by input index); a box is suppressed when its IoU with an already
/// kept box is strictly greater than `iou_threshold`. At most `max_keep`
/// boxes are returned, sorted by score.
std::vector<ScoredBox> oriented_nms(std::span<const ScoredBox> dets, double iou_threshold,
                                    std::size_t max_keep);

/// Same as oriented_nms, returning the kept input indices.
std::vector<std::size_t> oriented_nms_indices(std::span<const ScoredBox> dets,
                                              double iou_threshold, std::size_t max_keep);

}  // namespace ptdet
