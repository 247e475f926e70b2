// Copyright 2026 The ptdet Authors
// SPDX-License-Identifier: Apache-2.0

#include "ptdet/geom.hpp"

namespace ptdet {

double wrap_angle(double a) {
  constexpr double kTwoPi = 2.0 * kPi;
  if (a >= -kPi && a < kPi) return a;
  double r = a - kTwoPi * std::floor((a + kPi) / kTwoPi);
  // Rounding can land exactly on +pi or just below -pi.
  if (r >= kPi) r -= kTwoPi;
  if (r < -kPi) r = -kPi;
  return r;
}

double distance(const Point3& a, const Point3& b) {
  const Point3 d = a - b;
  return std::sqrt(d.x * d.x + d.y * d.y + d.z * d.z);
}

bool is_valid(const Box3D& b) {
  const double f[] = {b.x, b.y, b.z, b.h, b.w, b.l, b.theta};
  for (double v : f)
    if (!std::isfinite(v)) return false;
  return b.h > 0 && b.w > 0 && b.l > 0 && b.theta >= -kPi && b.theta < kPi;
}

Box3D flipped(const Box3D& b) {
  Box3D out = b;
  out.theta = wrap_angle(b.theta + kPi);
  return out;
}

void PointCloud::append(const PointCloud& other) {
  points.insert(points.end(), other.points.begin(), other.points.end());
  intensity.insert(intensity.end(), other.intensity.begin(), other.intensity.end());
}

bool is_valid(const PointCloud& c) {
  if (c.points.size() != c.intensity.size()) return false;
  for (const Point3& p : c.points)
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z)) return false;
  for (double r : c.intensity)
    if (!(r >= 0.0 && r <= 1.0)) return false;
  return true;
}

namespace {

constexpr double kFaceX[4] = {+0.5, +0.5, -0.5, -0.5};
constexpr double kFaceZ[4] = {-0.5, +0.5, +0.5, -0.5};

}  // namespace

std::array<Point3, 8> box_corners(const Box3D& box) {
  const double c = std::cos(box.theta), s = std::sin(box.theta);
  std::array<Point3, 8> out;
  for (int k = 0; k < 4; ++k) {
    const double lx = kFaceX[k] * box.l, lz = kFaceZ[k] * box.w;
    const double wx = box.x + lx * c - lz * s;
    const double wz = box.z + lx * s + lz * c;
    out[k] = {wx, box.y - 0.5 * box.h, wz};
    out[k + 4] = {wx, box.y + 0.5 * box.h, wz};
  }
  return out;
}

std::array<std::array<double, 2>, 4> bev_corners(const Box3D& box) {
  const double c = std::cos(box.theta), s = std::sin(box.theta);
  std::array<std::array<double, 2>, 4> out;
  for (int k = 0; k < 4; ++k) {
    const double lx = kFaceX[k] * box.l, lz = kFaceZ[k] * box.w;
    out[k] = {box.x + lx * c - lz * s, box.z + lx * s + lz * c};
  }
  return out;
}

Point3 rotate_yaw(const Point3& p, double yaw) {
  const double c = std::cos(yaw), s = std::sin(yaw);
  return {p.x * c - p.z * s, p.y, p.x * s + p.z * c};
}

Point3 canonical_transform(const Point3& p, const CanonicalFrame& frame) {
  return rotate_yaw(p - frame.origin, -frame.yaw);
}

Point3 canonical_inverse(const Point3& p_local, const CanonicalFrame& frame) {
  return rotate_yaw(p_local, frame.yaw) + frame.origin;
}

bool point_in_box(const Point3& p, const Box3D& box) {
  const double dy = p.y - box.y;
  if (std::abs(dy) > 0.5 * box.h) return false;
  const double dx = p.x - box.x, dz = p.z - box.z;
  const double c = std::cos(box.theta), s = std::sin(box.theta);
  const double lx = dx * c + dz * s;
  const double lz = -dx * s + dz * c;
  return std::abs(lx) <= 0.5 * box.l && std::abs(lz) <= 0.5 * box.w;
}

double sensor_distance(const Point3& p) { return std::sqrt(p.x * p.x + p.y * p.y + p.z * p.z); }

}  // namespace ptdet
