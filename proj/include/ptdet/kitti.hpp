// Copyright 2026 The ptdet Authors
// SPDX-License-Identifier: Apache-2.0
//
// KITTI object-benchmark file formats.
//
//   velodyne .bin : little-endian float32 quadruples (x, y, z, reflectance)
//   label .txt    : 15 whitespace-separated fields per object, 16 with score
//   calib .txt    : "NAME: v0 v1 ..." rows; P2 (3x4), R0_rect (3x3) and
//                   Tr_velo_to_cam (3x4) are used
//
// The library's internal frame is the rectified camera frame with the
// vertical axis flipped to point up: internal = (x_rect, -y_rect, z_rect).
// Velodyne points reach it through Tr_velo_to_cam and R0_rect. Labels are
// already in the rectified camera frame, so their conversion needs no
// calibration data; KITTI's rotation_y maps to yaw = -rotation_y.

#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ptdet/geom.hpp"

namespace ptdet::kitti {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct KittiObject {
  std::string class_name;
  double truncation = 0.0;
  int occlusion = 0;
  double alpha = 0.0;
  std::array<double, 4> bbox2d{};  // left, top, right, bottom (pixels)
  double h = 0.0, w = 0.0, l = 0.0;
  std::array<double, 3> location{};  // bottom center, rectified camera frame
  double rotation_y = 0.0;
  std::optional<double> score;

  bool is_dont_care() const { return class_name == "DontCare"; }
};

using Mat34 = std::array<double, 12>;  // row-major
using Mat33 = std::array<double, 9>;   // row-major

struct Calib {
  Mat34 velo_to_cam{1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0};
  Mat33 rect{1, 0, 0, 0, 1, 0, 0, 0, 1};
  Mat34 cam_proj{1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0};
};

/// Throws FormatError for non-finite entries or singular rotation blocks.
void validate(const Calib& calib);

// Velodyne -------------------------------------------------------------------

PointCloud read_velodyne(const std::filesystem::path& path);
void write_velodyne(const std::filesystem::path& path, const PointCloud& cloud);

Point3 velodyne_to_internal(const Point3& p, const Calib& calib);
Point3 internal_to_velodyne(const Point3& p, const Calib& calib);
/// Converts a raw velodyne cloud into the internal frame; intensities are
/// clamped into [0, 1].
PointCloud velodyne_cloud_to_internal(const PointCloud& velo, const Calib& calib);

// Labels ---------------------------------------------------------------------

KittiObject parse_object(const std::string& line, std::size_t line_no = 0);
std::vector<KittiObject> parse_labels(std::istream& in);
std::vector<KittiObject> read_labels(const std::filesystem::path& path);

/// One label line; reals use `precision` decimals (at least 2). The score is
/// emitted as a 16th field when present.
std::string format_object(const KittiObject& obj, int precision = 2);
void write_detections(std::ostream& out, const std::vector<KittiObject>& dets, int precision = 2);
void write_detections(const std::filesystem::path& path, const std::vector<KittiObject>& dets,
                      int precision = 2);

// Calibration ----------------------------------------------------------------

Calib parse_calib(std::istream& in);
Calib read_calib(const std::filesystem::path& path);
void write_calib(const std::filesystem::path& path, const Calib& calib);

// Boxes ----------------------------------------------------------------------

Point3 rect_to_internal(const Point3& p);
Point3 internal_to_rect(const Point3& p);

/// Label -> internal box. Throws FormatError for DontCare rows and invalid
/// calibrations.
Box3D label_to_box(const KittiObject& obj, const Calib& calib);

/// Internal box -> label. bbox2d is the image-plane hull of the projected
/// corners, alpha the observation angle.
KittiObject box_to_label(const Box3D& box, const Calib& calib, const std::string& class_name = "Car",
                         std::optional<double> score = std::nullopt);

/// Boxes of all non-DontCare objects whose class is in `classes` (all classes
/// when empty).
std::vector<Box3D> labels_to_boxes(const std::vector<KittiObject>& objs, const Calib& calib,
                                   const std::vector<std::string>& classes = {});

/// Pixel coordinates of an internal-frame point through cam_proj.
std::array<double, 2> project_to_image(const Point3& p, const Calib& calib);

}  // namespace ptdet::kitti
