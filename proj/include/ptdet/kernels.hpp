// Copyright 2026 The ptdet Authors
// SPDX-License-Identifier: Apache-2.0
//
// Data-parallel batch kernels. Each kernel has a serial reference version
// (`*_serial`) kept for testing and benchmarking, and an OpenMP version
// (`*_omp`) that the rest of the library calls. Both produce identical
// results for identical inputs.

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ptdet/geom.hpp"

namespace ptdet::kernels {

/// For each point, the index of the first box that contains it, or -1.
std::vector<int> points_in_boxes_serial(std::span<const Point3> points, std::span<const Box3D> boxes);
std::vector<int> points_in_boxes_omp(std::span<const Point3> points, std::span<const Box3D> boxes);

/// 0/1 membership of every point in a single box.
std::vector<std::uint8_t> point_in_box_mask_serial(std::span<const Point3> points, const Box3D& box);
std::vector<std::uint8_t> point_in_box_mask_omp(std::span<const Point3> points, const Box3D& box);

/// Row-major |a| x |b| matrix of BEV IoU values.
std::vector<double> bev_iou_matrix_serial(std::span<const Box3D> a, std::span<const Box3D> b);
std::vector<double> bev_iou_matrix_omp(std::span<const Box3D> a, std::span<const Box3D> b);

/// Row-major |a| x |b| matrix of 3D IoU values.
std::vector<double> iou3d_matrix_serial(std::span<const Box3D> a, std::span<const Box3D> b);
std::vector<double> iou3d_matrix_omp(std::span<const Box3D> a, std::span<const Box3D> b);

}  // namespace ptdet::kernels
