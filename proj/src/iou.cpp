// Copyright 2026 The ptdet Authors
// SPDX-License-Identifier: Apache-2.0

#include "ptdet/iou.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace ptdet {

namespace {

inline double cross(const Vec2& o, const Vec2& a, const Vec2& b) {
  return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
}

// Intersection of segment p->q with the infinite line through a->b.
inline Vec2 line_intersect(const Vec2& p, const Vec2& q, const Vec2& a, const Vec2& b) {
  const double cp = cross(a, b, p);
  const double cq = cross(a, b, q);
  const double t = cp / (cp - cq);
  return {p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])};
}

void check_footprint(const Box3D& b) {
  if (!(b.w > 0.0) || !(b.l > 0.0) || !std::isfinite(b.w * b.l))
    throw std::invalid_argument("bev_iou: box has a zero-area footprint");
}

}  // namespace

std::vector<Vec2> clip_convex(std::span<const Vec2> subject, std::span<const Vec2> clip) {
  std::vector<Vec2> out(subject.begin(), subject.end());
  std::vector<Vec2> in;
  const std::size_t m = clip.size();
  for (std::size_t e = 0; e < m && !out.empty(); ++e) {
    const Vec2& a = clip[e];
    const Vec2& b = clip[(e + 1) % m];
    in.swap(out);
    out.clear();
    const std::size_t n = in.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2& p = in[i];
      const Vec2& q = in[(i + 1) % n];
      const double cp = cross(a, b, p);
      const double cq = cross(a, b, q);
      if (cp >= 0.0) {
        out.push_back(p);
        if (cq < 0.0) out.push_back(line_intersect(p, q, a, b));
      } else if (cq >= 0.0) {
        out.push_back(line_intersect(p, q, a, b));
      }
    }
  }
  return out;
}

double polygon_area(std::span<const Vec2> poly) {
  const std::size_t n = poly.size();
  if (n < 3) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& p = poly[i];
    const Vec2& q = poly[(i + 1) % n];
    acc += p[0] * q[1] - q[0] * p[1];
  }
  return 0.5 * acc;
}

bool bev_may_overlap(const Box3D& a, const Box3D& b) {
  const double ra = 0.5 * std::hypot(a.l, a.w);
  const double rb = 0.5 * std::hypot(b.l, b.w);
  const double dx = a.x - b.x, dz = a.z - b.z;
  const double r = ra + rb;
  return dx * dx + dz * dz <= r * r;
}

double bev_intersection_area(const Box3D& a, const Box3D& b) {
  check_footprint(a);
  check_footprint(b);
  if (!bev_may_overlap(a, b)) return 0.0;
  const auto pa = bev_corners(a);
  const auto pb = bev_corners(b);
  const auto poly = clip_convex(pa, pb);
  const double area = polygon_area(poly);
  return area < kAreaEpsilon ? 0.0 : area;
}

double bev_iou(const Box3D& a, const Box3D& b) {
  // Clipping a box against itself can lose an ulp of area.
  if (a == b) {
    check_footprint(a);
    return 1.0;
  }
  const double inter = bev_intersection_area(a, b);
  if (inter == 0.0) return 0.0;
  const double uni = a.l * a.w + b.l * b.w - inter;
  return std::clamp(inter / uni, 0.0, 1.0);
}

double iou_3d(const Box3D& a, const Box3D& b) {
  if (!(a.h > 0.0) || !(b.h > 0.0)) throw std::invalid_argument("iou_3d: box has zero height");
  if (a == b) {
    check_footprint(a);
    return 1.0;
  }
  const double inter_bev = bev_intersection_area(a, b);
  if (inter_bev == 0.0) return 0.0;
  const double lo = std::max(a.y - 0.5 * a.h, b.y - 0.5 * b.h);
  const double hi = std::min(a.y + 0.5 * a.h, b.y + 0.5 * b.h);
  const double overlap_h = hi - lo;
  if (overlap_h <= 0.0) return 0.0;
  const double inter = inter_bev * overlap_h;
  const double uni = a.volume() + b.volume() - inter;
  return std::clamp(inter / uni, 0.0, 1.0);
}

std::vector<std::size_t> oriented_nms_indices(std::span<const ScoredBox> dets,
                                              double iou_threshold, std::size_t max_keep) {
  const std::size_t n = dets.size();
  for (const ScoredBox& d : dets) check_footprint(d.box);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    return dets[i].score > dets[j].score;
  });

  std::vector<std::size_t> keep;
  std::vector<char> suppressed(n, 0);
  for (std::size_t oi = 0; oi < n && keep.size() < max_keep; ++oi) {
    const std::size_t i = order[oi];
    if (suppressed[i]) continue;
    keep.push_back(i);
    const Box3D& kept = dets[i].box;
    const auto rest = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static) if (n - oi > 512)
    for (std::ptrdiff_t oj = static_cast<std::ptrdiff_t>(oi) + 1; oj < rest; ++oj) {
      const std::size_t j = order[static_cast<std::size_t>(oj)];
      if (suppressed[j] || !bev_may_overlap(kept, dets[j].box)) continue;
      if (bev_iou(kept, dets[j].box) > iou_threshold) suppressed[j] = 1;
    }
  }
  return keep;
}

std::vector<ScoredBox> oriented_nms(std::span<const ScoredBox> dets, double iou_threshold,
                                    std::size_t max_keep) {
  std::vector<ScoredBox> out;
  for (std::size_t i : oriented_nms_indices(dets, iou_threshold, max_keep)) out.push_back(dets[i]);
  return out;
}

}  // namespace ptdet
