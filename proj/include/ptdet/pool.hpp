// Copyright 2026 The ptdet Authors
// SPDX-License-Identifier: Apache-2.0
//
// Point cloud region pooling: gather the points of an enlarged proposal,
// express them in the proposal's canonical frame and sample a fixed number.

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "ptdet/codec.hpp"
#include "ptdet/geom.hpp"

namespace ptdet {

struct PooledPoint {
  Point3 local_xyz;        // canonical frame of the proposal
  double intensity = 0.0;  // r
  int seg_mask = 0;        // m, 0 or 1
  double sensor_dist = 0;  // d, measured before the canonical transform
  std::vector<double> features;

  /// (x~, y~, z~, r, m, d) followed by the stage-1 features.
  std::vector<double> feature_vector() const;
};

struct PooledRegion {
  Box3D proposal;
  std::vector<PooledPoint> points;
  /// Input indices of the sampled points, aligned with `points`.
  std::vector<std::size_t> source_index;
};

/// (x, y, z, h + eta, w + eta, l + eta, theta).
Box3D enlarge_box(const Box3D& b, double eta);

/// Indices of the cloud points inside the box enlarged by eta.
std::vector<std::size_t> region_members(std::span<const Point3> points, const Box3D& proposal, double eta);

/// Pools one proposal. Returns nullopt when the enlarged proposal contains no
/// points. Otherwise exactly `sample_count` points are drawn with a generator
/// seeded by `seed`: without replacement when the region has enough points,
/// otherwise every point once plus random repeats.
///
/// `seg_mask` and `stage1_features` are per cloud point; either may be empty
/// (mask 0, no features).
std::optional<PooledRegion> pool_region(const PointCloud& cloud, std::span<const std::uint8_t> seg_mask,
                                        std::span<const std::vector<double>> stage1_features,
                                        const Box3D& proposal, const HyperParams& hp,
                                        std::size_t sample_count, std::uint64_t seed);

/// Draws `count` indices from [0, n) as described for pool_region.
std::vector<std::size_t> sample_indices(std::size_t n, std::size_t count, std::uint64_t seed);

}  // namespace ptdet
