// Copyright 2026 The ptdet Authors
// SPDX-License-Identifier: Apache-2.0

#include "ptdet/kernels.hpp"

#include <cstddef>
#include <stdexcept>

#include "ptdet/iou.hpp"

namespace ptdet::kernels {

namespace {

inline int first_containing(const Point3& p, std::span<const Box3D> boxes) {
  for (std::size_t b = 0; b < boxes.size(); ++b)
    if (point_in_box(p, boxes[b])) return static_cast<int>(b);
  return -1;
}

// Exceptions cannot escape an OpenMP region, so validate up front.
void require_nondegenerate(std::span<const Box3D> boxes) {
  for (const Box3D& b : boxes)
    if (!(b.h > 0.0) || !(b.w > 0.0) || !(b.l > 0.0))
      throw std::invalid_argument("iou kernel: degenerate box");
}

}  // namespace

std::vector<int> points_in_boxes_serial(std::span<const Point3> points, std::span<const Box3D> boxes) {
  std::vector<int> out(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) out[i] = first_containing(points[i], boxes);
  return out;
}

std::vector<int> points_in_boxes_omp(std::span<const Point3> points, std::span<const Box3D> boxes) {
  std::vector<int> out(points.size());
  const auto n = static_cast<std::ptrdiff_t>(points.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = first_containing(points[i], boxes);
  return out;
}

std::vector<std::uint8_t> point_in_box_mask_serial(std::span<const Point3> points, const Box3D& box) {
  std::vector<std::uint8_t> out(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) out[i] = point_in_box(points[i], box) ? 1 : 0;
  return out;
}

std::vector<std::uint8_t> point_in_box_mask_omp(std::span<const Point3> points, const Box3D& box) {
  std::vector<std::uint8_t> out(points.size());
  const auto n = static_cast<std::ptrdiff_t>(points.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = point_in_box(points[i], box) ? 1 : 0;
  return out;
}

std::vector<double> bev_iou_matrix_serial(std::span<const Box3D> a, std::span<const Box3D> b) {
  std::vector<double> out(a.size() * b.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) out[i * b.size() + j] = bev_iou(a[i], b[j]);
  return out;
}

std::vector<double> bev_iou_matrix_omp(std::span<const Box3D> a, std::span<const Box3D> b) {
  require_nondegenerate(a);
  require_nondegenerate(b);
  std::vector<double> out(a.size() * b.size());
  const auto n = static_cast<std::ptrdiff_t>(a.size());
#pragma omp parallel for schedule(dynamic, 8)
  for (std::ptrdiff_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < b.size(); ++j) out[i * b.size() + j] = bev_iou(a[i], b[j]);
  return out;
}

std::vector<double> iou3d_matrix_serial(std::span<const Box3D> a, std::span<const Box3D> b) {
  std::vector<double> out(a.size() * b.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) out[i * b.size() + j] = iou_3d(a[i], b[j]);
  return out;
}

std::vector<double> iou3d_matrix_omp(std::span<const Box3D> a, std::span<const Box3D> b) {
  require_nondegenerate(a);
  require_nondegenerate(b);
  std::vector<double> out(a.size() * b.size());
  const auto n = static_cast<std::ptrdiff_t>(a.size());
#pragma omp parallel for schedule(dynamic, 8)
  for (std::ptrdiff_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < b.size(); ++j) out[i * b.size() + j] = iou_3d(a[i], b[j]);
  return out;
}

}  // namespace ptdet::kernels
