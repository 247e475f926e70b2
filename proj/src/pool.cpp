// Copyright 2026 The ptdet Authors
// SPDX-License-Identifier: Apache-2.0

#include "ptdet/pool.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <stdexcept>

#include "ptdet/kernels.hpp"

namespace ptdet {

std::vector<double> PooledPoint::feature_vector() const {
  std::vector<double> v = {local_xyz.x, local_xyz.y, local_xyz.z, intensity, static_cast<double>(seg_mask),
                           sensor_dist};
  v.insert(v.end(), features.begin(), features.end());
  return v;
}

Box3D enlarge_box(const Box3D& b, double eta) {
  Box3D e = b;
  e.h += eta;
  e.w += eta;
  e.l += eta;
  return e;
}

std::vector<std::size_t> region_members(std::span<const Point3> points, const Box3D& proposal, double eta) {
  const auto mask = kernels::point_in_box_mask_omp(points, enlarge_box(proposal, eta));
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) idx.push_back(i);
  return idx;
}

std::vector<std::size_t> sample_indices(std::size_t n, std::size_t count, std::uint64_t seed) {
  std::vector<std::size_t> out;
  if (n == 0 || count == 0) return out;
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  if (n >= count) {
    // Partial Fisher-Yates.
    for (std::size_t i = 0; i < count; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, n - 1);
      std::swap(perm[i], perm[pick(rng)]);
    }
    perm.resize(count);
    return perm;
  }
  out = perm;
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  while (out.size() < count) out.push_back(pick(rng));
  return out;
}

std::optional<PooledRegion> pool_region(const PointCloud& cloud, std::span<const std::uint8_t> seg_mask,
                                        std::span<const std::vector<double>> stage1_features,
                                        const Box3D& proposal, const HyperParams& hp,
                                        std::size_t sample_count, std::uint64_t seed) {
  const std::size_t n = cloud.size();
  if (cloud.intensity.size() != n || (!seg_mask.empty() && seg_mask.size() != n) ||
      (!stage1_features.empty() && stage1_features.size() != n))
    throw std::invalid_argument("pool_region: per-point arrays are not aligned");
  const std::vector<std::size_t> members = region_members(cloud.points, proposal, hp.context_eta);
  if (members.empty()) return std::nullopt;

  const CanonicalFrame frame = CanonicalFrame::of(proposal);
  PooledRegion region;
  region.proposal = proposal;
  for (std::size_t k : sample_indices(members.size(), sample_count, seed)) {
    const std::size_t i = members[k];
    const Point3& p = cloud.points[i];
    PooledPoint pp;
    pp.sensor_dist = sensor_distance(p);
    pp.local_xyz = canonical_transform(p, frame);
    pp.intensity = cloud.intensity[i];
    pp.seg_mask = seg_mask.empty() ? 0 : (seg_mask[i] ? 1 : 0);
    if (!stage1_features.empty()) pp.features = stage1_features[i];
    region.points.push_back(std::move(pp));
    region.source_index.push_back(i);
  }
  return region;
}

}  // namespace ptdet
