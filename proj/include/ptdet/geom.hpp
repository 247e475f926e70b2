// Copyright 2026 The ptdet Authors
// SPDX-License-Identifier: Apache-2.0
//
// Box and point geometry.
//
// Frame convention used throughout the library: Y is the vertical axis
// (pointing up) and the X-Z plane is the ground plane. Yaw is measured in the
// ground plane, positive from +X toward +Z, so a box with yaw t has its
// heading (length) direction along (cos t, 0, sin t). Length l runs along the
// heading, width w across it in the ground plane, and height h along Y.

#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

namespace ptdet {

inline constexpr double kPi = std::numbers::pi;

/// Wraps an angle into [-pi, pi).
double wrap_angle(double a);

struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend Point3 operator+(const Point3& a, const Point3& b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend Point3 operator-(const Point3& a, const Point3& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend Point3 operator*(double s, const Point3& a) { return {s * a.x, s * a.y, s * a.z}; }
  friend bool operator==(const Point3&, const Point3&) = default;
};

double distance(const Point3& a, const Point3& b);

/// Oriented 3D box: center (x, y, z), size (h, w, l), yaw theta.
struct Box3D {
  double x = 0.0, y = 0.0, z = 0.0;
  double h = 1.0, w = 1.0, l = 1.0;
  double theta = 0.0;

  Point3 center() const { return {x, y, z}; }
  double volume() const { return h * w * l; }
  /// Half-diagonal of the box, i.e. the radius of its circumscribed sphere.
  double circumradius() const { return 0.5 * std::sqrt(h * h + w * w + l * l); }

  friend bool operator==(const Box3D&, const Box3D&) = default;
};

/// Checks h, w, l > 0, finite fields and theta in [-pi, pi).
bool is_valid(const Box3D& b);

/// Same box turned by pi; it occupies exactly the same volume.
Box3D flipped(const Box3D& b);

/// N points with per-point reflection intensity in [0, 1].
struct PointCloud {
  std::vector<Point3> points;
  std::vector<double> intensity;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  void push_back(const Point3& p, double r) {
    points.push_back(p);
    intensity.push_back(r);
  }
  void append(const PointCloud& other);
};

/// Lengths equal, coordinates finite, intensities within [0, 1].
bool is_valid(const PointCloud& c);

/// Per-proposal canonical frame: origin at the box center, local X' along the
/// box heading, Y' shared with the sensor frame.
struct CanonicalFrame {
  Point3 origin;
  double yaw = 0.0;

  static CanonicalFrame of(const Box3D& b) { return {b.center(), b.theta}; }
};

/// Corner order: bottom face (y = center - h/2) first, then the top face in
/// the same order. Within a face, corners run in the positive-yaw direction
/// starting from the front-right corner in the box's own frame:
///   (+l/2, -w/2), (+l/2, +w/2), (-l/2, +w/2), (-l/2, -w/2)   as (x', z').
std::array<Point3, 8> box_corners(const Box3D& box);

/// Ground-plane rectangle of the box, same order as the bottom face of
/// box_corners, as (x, z) pairs.
std::array<std::array<double, 2>, 4> bev_corners(const Box3D& box);

/// Boundary points count as inside.
bool point_in_box(const Point3& p, const Box3D& box);

/// Sensor frame -> canonical frame: translate by -origin, rotate by -yaw.
Point3 canonical_transform(const Point3& p, const CanonicalFrame& frame);

/// Canonical frame -> sensor frame; exact inverse of canonical_transform.
Point3 canonical_inverse(const Point3& p_local, const CanonicalFrame& frame);

/// Rotates a point about the vertical axis through the origin by `yaw`.
Point3 rotate_yaw(const Point3& p, double yaw);

/// Euclidean distance of a point to the sensor origin.
double sensor_distance(const Point3& p);

}  // namespace ptdet
