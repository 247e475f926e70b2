// Copyright 2026 The ptdet Authors
// SPDX-License-Identifier: Apache-2.0

#include "ptdet/kitti.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

namespace ptdet::kitti {

namespace {

double det3(const Mat33& m) {
  return m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) +
         m[2] * (m[3] * m[7] - m[4] * m[6]);
}

Mat33 inverse3(const Mat33& m) {
  const double d = det3(m);
  if (!(std::abs(d) > 1e-12)) throw FormatError("calibration: singular 3x3 matrix");
  const double inv = 1.0 / d;
  return {(m[4] * m[8] - m[5] * m[7]) * inv, (m[2] * m[7] - m[1] * m[8]) * inv, (m[1] * m[5] - m[2] * m[4]) * inv,
          (m[5] * m[6] - m[3] * m[8]) * inv, (m[0] * m[8] - m[2] * m[6]) * inv, (m[2] * m[3] - m[0] * m[5]) * inv,
          (m[3] * m[7] - m[4] * m[6]) * inv, (m[1] * m[6] - m[0] * m[7]) * inv, (m[0] * m[4] - m[1] * m[3]) * inv};
}

Point3 mul(const Mat33& m, const Point3& p) {
  return {m[0] * p.x + m[1] * p.y + m[2] * p.z, m[3] * p.x + m[4] * p.y + m[5] * p.z,
          m[6] * p.x + m[7] * p.y + m[8] * p.z};
}

Mat33 rotation_block(const Mat34& m) { return {m[0], m[1], m[2], m[4], m[5], m[6], m[8], m[9], m[10]}; }
Point3 translation(const Mat34& m) { return {m[3], m[7], m[11]}; }

std::uint32_t to_le(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::little) return v;
  return ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
}

std::string fmt_real(double v, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", precision, v);
  return buf;
}

}  // namespace

void validate(const Calib& calib) {
  for (double v : calib.velo_to_cam)
    if (!std::isfinite(v)) throw FormatError("calibration: non-finite Tr_velo_to_cam entry");
  for (double v : calib.rect)
    if (!std::isfinite(v)) throw FormatError("calibration: non-finite R0_rect entry");
  for (double v : calib.cam_proj)
    if (!std::isfinite(v)) throw FormatError("calibration: non-finite P2 entry");
  if (!(std::abs(det3(calib.rect)) > 1e-12)) throw FormatError("calibration: singular R0_rect");
  if (!(std::abs(det3(rotation_block(calib.velo_to_cam))) > 1e-12))
    throw FormatError("calibration: singular Tr_velo_to_cam rotation");
}

PointCloud read_velodyne(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open velodyne file " + path.string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() % 16 != 0) {
    std::ostringstream os;
    os << path.string() << ": size " << bytes.size() << " is not a multiple of 16 bytes";
    throw FormatError(os.str());
  }
  PointCloud cloud;
  const std::size_t n = bytes.size() / 16;
  cloud.points.reserve(n);
  cloud.intensity.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    float f[4];
    for (int k = 0; k < 4; ++k) {
      std::uint32_t u;
      std::memcpy(&u, bytes.data() + 16 * i + 4 * k, 4);
      u = to_le(u);
      std::memcpy(&f[k], &u, 4);
    }
    cloud.points.push_back({f[0], f[1], f[2]});
    cloud.intensity.push_back(f[3]);
  }
  return cloud;
}

void write_velodyne(const std::filesystem::path& path, const PointCloud& cloud) {
  if (cloud.points.size() != cloud.intensity.size())
    throw std::invalid_argument("write_velodyne: points and intensities differ in length");
  std::vector<char> bytes(16 * cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const float f[4] = {static_cast<float>(cloud.points[i].x), static_cast<float>(cloud.points[i].y),
                        static_cast<float>(cloud.points[i].z), static_cast<float>(cloud.intensity[i])};
    for (int k = 0; k < 4; ++k) {
      std::uint32_t u;
      std::memcpy(&u, &f[k], 4);
      u = to_le(u);
      std::memcpy(bytes.data() + 16 * i + 4 * k, &u, 4);
    }
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write velodyne file " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

Point3 rect_to_internal(const Point3& p) { return {p.x, -p.y, p.z}; }
Point3 internal_to_rect(const Point3& p) { return {p.x, -p.y, p.z}; }

Point3 velodyne_to_internal(const Point3& p, const Calib& calib) {
  const Point3 cam = mul(rotation_block(calib.velo_to_cam), p) + translation(calib.velo_to_cam);
  return rect_to_internal(mul(calib.rect, cam));
}

Point3 internal_to_velodyne(const Point3& p, const Calib& calib) {
  const Point3 cam = mul(inverse3(calib.rect), internal_to_rect(p));
  return mul(inverse3(rotation_block(calib.velo_to_cam)), cam - translation(calib.velo_to_cam));
}

PointCloud velodyne_cloud_to_internal(const PointCloud& velo, const Calib& calib) {
  validate(calib);
  PointCloud out;
  out.points.reserve(velo.size());
  for (const Point3& p : velo.points) out.points.push_back(velodyne_to_internal(p, calib));
  out.intensity.reserve(velo.size());
  for (double r : velo.intensity) out.intensity.push_back(std::clamp(r, 0.0, 1.0));
  return out;
}

KittiObject parse_object(const std::string& line, std::size_t line_no) {
  std::istringstream is(line);
  std::vector<std::string> tok;
  for (std::string t; is >> t;) tok.push_back(t);
  auto fail = [&](const std::string& why) {
    std::ostringstream os;
    os << "label line " << line_no << ": " << why;
    throw FormatError(os.str());
  };
  if (tok.size() != 15 && tok.size() != 16) fail("expected 15 or 16 fields, got " + std::to_string(tok.size()));
  auto real = [&](std::size_t i) {
    try {
      std::size_t used = 0;
      const double v = std::stod(tok[i], &used);
      if (used != tok[i].size()) fail("field " + std::to_string(i + 1) + " is not a number: " + tok[i]);
      return v;
    } catch (const std::logic_error&) {
      fail("field " + std::to_string(i + 1) + " is not a number: " + tok[i]);
    }
    return 0.0;
  };
  KittiObject o;
  o.class_name = tok[0];
  o.truncation = real(1);
  const double occ = real(2);
  if (occ != std::floor(occ)) fail("occlusion must be an integer");
  o.occlusion = static_cast<int>(occ);
  o.alpha = real(3);
  for (int k = 0; k < 4; ++k) o.bbox2d[k] = real(4 + k);
  o.h = real(8);
  o.w = real(9);
  o.l = real(10);
  for (int k = 0; k < 3; ++k) o.location[k] = real(11 + k);
  o.rotation_y = real(14);
  if (tok.size() == 16) o.score = real(15);
  if (!o.is_dont_care() && !(o.h > 0 && o.w > 0 && o.l > 0)) fail("non-positive dimensions");
  return o;
}

std::vector<KittiObject> parse_labels(std::istream& in) {
  std::vector<KittiObject> out;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.push_back(parse_object(line, n));
  }
  return out;
}

std::vector<KittiObject> read_labels(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open label file " + path.string());
  try {
    return parse_labels(in);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::string format_object(const KittiObject& o, int precision) {
  precision = std::max(precision, 2);
  std::ostringstream os;
  os << o.class_name << ' ' << fmt_real(o.truncation, precision) << ' ' << o.occlusion << ' '
     << fmt_real(o.alpha, precision);
  for (double v : o.bbox2d) os << ' ' << fmt_real(v, precision);
  os << ' ' << fmt_real(o.h, precision) << ' ' << fmt_real(o.w, precision) << ' ' << fmt_real(o.l, precision);
  for (double v : o.location) os << ' ' << fmt_real(v, precision);
  os << ' ' << fmt_real(o.rotation_y, precision);
  if (o.score) os << ' ' << fmt_real(*o.score, precision);
  return os.str();
}

void write_detections(std::ostream& out, const std::vector<KittiObject>& dets, int precision) {
  for (const KittiObject& o : dets) out << format_object(o, precision) << '\n';
}

void write_detections(const std::filesystem::path& path, const std::vector<KittiObject>& dets, int precision) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write detection file " + path.string());
  write_detections(out, dets, precision);
}

Calib parse_calib(std::istream& in) {
  std::map<std::string, std::vector<double>> rows;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    const auto colon = line.find(':');
    if (colon == std::string::npos) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      throw FormatError("calib line " + std::to_string(n) + ": missing ':'");
    }
    std::istringstream is(line.substr(colon + 1));
    std::vector<double> vals;
    for (std::string t; is >> t;) {
      try {
        vals.push_back(std::stod(t));
      } catch (const std::logic_error&) {
        throw FormatError("calib line " + std::to_string(n) + ": not a number: " + t);
      }
    }
    rows[line.substr(0, colon)] = std::move(vals);
  }
  auto take = [&](const std::string& key, std::size_t count, double* dst) {
    const auto it = rows.find(key);
    if (it == rows.end()) throw FormatError("calib: missing row " + key);
    if (it->second.size() != count)
      throw FormatError("calib: row " + key + " has " + std::to_string(it->second.size()) + " values, expected " +
                        std::to_string(count));
    std::copy(it->second.begin(), it->second.end(), dst);
  };
  Calib c;
  take("P2", 12, c.cam_proj.data());
  take("R0_rect", 9, c.rect.data());
  take("Tr_velo_to_cam", 12, c.velo_to_cam.data());
  validate(c);
  return c;
}

Calib read_calib(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open calib file " + path.string());
  return parse_calib(in);
}

void write_calib(const std::filesystem::path& path, const Calib& calib) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write calib file " + path.string());
  auto row = [&](const char* name, const double* v, std::size_t n) {
    out << name << ':';
    char buf[40];
    for (std::size_t i = 0; i < n; ++i) {
      std::snprintf(buf, sizeof(buf), " %.17g", v[i]);
      out << buf;
    }
    out << '\n';
  };
  row("P2", calib.cam_proj.data(), 12);
  row("R0_rect", calib.rect.data(), 9);
  row("Tr_velo_to_cam", calib.velo_to_cam.data(), 12);
}

Box3D label_to_box(const KittiObject& obj, const Calib& calib) {
  if (obj.is_dont_care()) throw FormatError("label_to_box: DontCare rows have no box");
  validate(calib);
  const Point3 center_rect{obj.location[0], obj.location[1] - 0.5 * obj.h, obj.location[2]};
  const Point3 c = rect_to_internal(center_rect);
  return {c.x, c.y, c.z, obj.h, obj.w, obj.l, wrap_angle(-obj.rotation_y)};
}

std::array<double, 2> project_to_image(const Point3& p, const Calib& calib) {
  const Point3 r = internal_to_rect(p);
  const Mat34& P = calib.cam_proj;
  const double u = P[0] * r.x + P[1] * r.y + P[2] * r.z + P[3];
  const double v = P[4] * r.x + P[5] * r.y + P[6] * r.z + P[7];
  const double w = P[8] * r.x + P[9] * r.y + P[10] * r.z + P[11];
  return {u / w, v / w};
}

KittiObject box_to_label(const Box3D& box, const Calib& calib, const std::string& class_name,
                         std::optional<double> score) {
  validate(calib);
  KittiObject o;
  o.class_name = class_name;
  o.h = box.h;
  o.w = box.w;
  o.l = box.l;
  const Point3 c = internal_to_rect(box.center());
  o.location = {c.x, c.y + 0.5 * box.h, c.z};
  o.rotation_y = wrap_angle(-box.theta);
  o.alpha = wrap_angle(o.rotation_y - std::atan2(c.x, c.z));
  double lo_u = 1e300, lo_v = 1e300, hi_u = -1e300, hi_v = -1e300;
  for (const Point3& k : box_corners(box)) {
    const auto uv = project_to_image(k, calib);
    lo_u = std::min(lo_u, uv[0]);
    hi_u = std::max(hi_u, uv[0]);
    lo_v = std::min(lo_v, uv[1]);
    hi_v = std::max(hi_v, uv[1]);
  }
  o.bbox2d = {lo_u, lo_v, hi_u, hi_v};
  o.score = score;
  return o;
}

std::vector<Box3D> labels_to_boxes(const std::vector<KittiObject>& objs, const Calib& calib,
                                   const std::vector<std::string>& classes) {
  std::vector<Box3D> out;
  for (const KittiObject& o : objs) {
    if (o.is_dont_care()) continue;
    if (!classes.empty() && std::find(classes.begin(), classes.end(), o.class_name) == classes.end()) continue;
    out.push_back(label_to_box(o, calib));
  }
  return out;
}

}  // namespace ptdet::kitti
