// Copyright 2026 The ptdet Authors
// SPDX-License-Identifier: Apache-2.0

#include "ptdet/codec.hpp"

#include <atomic>
#include <cmath>
#include <sstream>

namespace ptdet {

namespace {

std::atomic<std::size_t> g_refine_clamps{0};

int whole_bins(double range, double bin) { return static_cast<int>(std::lround(range / bin)); }

void check_window(Axis axis, double offset, double range) {
  if (!(std::abs(offset) <= range)) {
    std::ostringstream os;
    os << "target center outside the search window on axis " << axis_name(axis) << ": offset "
       << offset << " m, window +-" << range << " m";
    throw EncodeError(axis, os.str());
  }
}

}  // namespace

int HyperParams::loc_bins() const { return whole_bins(2.0 * search_range, bin_size); }
int HyperParams::refine_loc_bins() const { return whole_bins(2.0 * refine_search_range, bin_size); }
int HyperParams::refine_orient_bins() const { return whole_bins(0.5 * kPi, refine_orient_bin); }

void validate(const HyperParams& hp) {
  if (!(hp.search_range > 0 && hp.bin_size > 0 && hp.orient_bins > 0 && hp.refine_search_range > 0 &&
        hp.refine_orient_bin > 0 && hp.context_eta >= 0 && hp.norm_c > 0))
    throw std::invalid_argument("hyperparameters must be positive");
  auto whole = [](double range, double bin) {
    const double q = range / bin;
    return std::abs(q - std::round(q)) < 1e-9;
  };
  if (!whole(2.0 * hp.search_range, hp.bin_size))
    throw std::invalid_argument("search range does not split into whole bins");
  if (!whole(2.0 * hp.refine_search_range, hp.bin_size))
    throw std::invalid_argument("refinement search range does not split into whole bins");
  if (!whole(0.5 * kPi, hp.refine_orient_bin))
    throw std::invalid_argument("pi/2 does not split into whole orientation bins");
}

const char* axis_name(Axis a) {
  switch (a) {
    case Axis::X: return "x";
    case Axis::Y: return "y";
    case Axis::Z: return "z";
    case Axis::Theta: return "theta";
  }
  return "?";
}

BinResidual encode_bin(double offset, double lower, double bin_size, int num_bins, double norm) {
  const double shifted = offset - lower;
  double q = shifted / bin_size;
  // Snap values that sit on a bin edge up to rounding, so that e.g. an angle
  // of exactly k bin widths lands in bin k rather than k - 1.
  const double nearest = std::round(q);
  if (std::abs(q - nearest) <= 1e-12 * std::max(1.0, std::abs(q))) q = nearest;
  int bin = static_cast<int>(std::floor(q));
  if (bin >= num_bins) bin = num_bins - 1;
  if (bin < 0) bin = 0;
  const double res = (shifted - (bin * bin_size + 0.5 * bin_size)) / norm;
  return {bin, res};
}

double decode_bin(BinResidual br, double lower, double bin_size, double norm) {
  return lower + br.bin * bin_size + 0.5 * bin_size + norm * br.res;
}

BinResidual encode_stage1_theta(double theta, const HyperParams& hp) {
  const double width = 2.0 * kPi / hp.orient_bins;
  return encode_bin(wrap_angle(theta), -kPi, width, hp.orient_bins, width);
}

double decode_stage1_theta(BinResidual br, const HyperParams& hp) {
  const double width = 2.0 * kPi / hp.orient_bins;
  return wrap_angle(decode_bin(br, -kPi, width, width));
}

StageOneTargets encode_stage1(const Point3& fg_point, const Box3D& gt, const ClassMeanSize& mean,
                              const HyperParams& hp) {
  const double dx = gt.x - fg_point.x;
  const double dz = gt.z - fg_point.z;
  check_window(Axis::X, dx, hp.search_range);
  check_window(Axis::Z, dz, hp.search_range);
  const int bins = hp.loc_bins();
  StageOneTargets t;
  const BinResidual bx = encode_bin(dx, -hp.search_range, hp.bin_size, bins, hp.norm_c);
  const BinResidual bz = encode_bin(dz, -hp.search_range, hp.bin_size, bins, hp.norm_c);
  const BinResidual bt = encode_stage1_theta(gt.theta, hp);
  t.bin_x = bx.bin;
  t.res_x = bx.res;
  t.bin_z = bz.bin;
  t.res_z = bz.res;
  t.res_y = gt.y - fg_point.y;
  t.bin_theta = bt.bin;
  t.res_theta = bt.res;
  t.res_h = gt.h - mean.h;
  t.res_w = gt.w - mean.w;
  t.res_l = gt.l - mean.l;
  return t;
}

Box3D decode_stage1(const Point3& point, const StageOneTargets& t, const ClassMeanSize& mean,
                    const HyperParams& hp) {
  Box3D b;
  b.x = point.x + decode_bin({t.bin_x, t.res_x}, -hp.search_range, hp.bin_size, hp.norm_c);
  b.z = point.z + decode_bin({t.bin_z, t.res_z}, -hp.search_range, hp.bin_size, hp.norm_c);
  b.y = point.y + t.res_y;
  b.theta = decode_stage1_theta({t.bin_theta, t.res_theta}, hp);
  b.h = mean.h + t.res_h;
  b.w = mean.w + t.res_w;
  b.l = mean.l + t.res_l;
  return b;
}

std::size_t refine_clamp_count() { return g_refine_clamps.load(); }
void reset_refine_clamp_count() { g_refine_clamps.store(0); }

RefineTargets encode_refine(const Box3D& proposal, const Box3D& gt, const ClassMeanSize& mean,
                            const HyperParams& hp) {
  const CanonicalFrame frame = CanonicalFrame::of(proposal);
  const Point3 local = canonical_transform(gt.center(), frame);
  check_window(Axis::X, local.x, hp.refine_search_range);
  check_window(Axis::Z, local.z, hp.refine_search_range);

  double dtheta = wrap_angle(gt.theta - proposal.theta);
  if (dtheta >= 0.5 * kPi) dtheta -= kPi;
  else if (dtheta < -0.5 * kPi) dtheta += kPi;
  const double quarter = 0.25 * kPi;
  if (std::abs(dtheta) > quarter) {
    if (std::abs(dtheta) - quarter > kPi / 16.0) {
      std::ostringstream os;
      os << "yaw difference " << dtheta << " rad is outside [-pi/4, pi/4]";
      throw EncodeError(Axis::Theta, os.str());
    }
    dtheta = std::copysign(quarter, dtheta);
    g_refine_clamps.fetch_add(1);
  }

  const int loc_bins = hp.refine_loc_bins();
  const BinResidual bx = encode_bin(local.x, -hp.refine_search_range, hp.bin_size, loc_bins, hp.norm_c);
  const BinResidual bz = encode_bin(local.z, -hp.refine_search_range, hp.bin_size, loc_bins, hp.norm_c);
  const double omega = hp.refine_orient_bin;
  const BinResidual bt = encode_bin(dtheta, -quarter, omega, hp.refine_orient_bins(), 0.5 * omega);

  RefineTargets t;
  t.bin_dx = bx.bin;
  t.res_dx = bx.res;
  t.bin_dz = bz.bin;
  t.res_dz = bz.res;
  t.res_dy = local.y;
  t.bin_dtheta = bt.bin;
  t.res_dtheta = bt.res;
  t.res_dh = gt.h - mean.h;
  t.res_dw = gt.w - mean.w;
  t.res_dl = gt.l - mean.l;
  return t;
}

Box3D decode_refine(const Box3D& proposal, const RefineTargets& t, const ClassMeanSize& mean,
                    const HyperParams& hp) {
  Point3 local;
  local.x = decode_bin({t.bin_dx, t.res_dx}, -hp.refine_search_range, hp.bin_size, hp.norm_c);
  local.z = decode_bin({t.bin_dz, t.res_dz}, -hp.refine_search_range, hp.bin_size, hp.norm_c);
  local.y = t.res_dy;
  const double omega = hp.refine_orient_bin;
  const double dtheta = decode_bin({t.bin_dtheta, t.res_dtheta}, -0.25 * kPi, omega, 0.5 * omega);
  const Point3 c = canonical_inverse(local, CanonicalFrame::of(proposal));
  Box3D b;
  b.x = c.x;
  b.y = c.y;
  b.z = c.z;
  b.theta = wrap_angle(proposal.theta + dtheta);
  b.h = mean.h + t.res_dh;
  b.w = mean.w + t.res_dw;
  b.l = mean.l + t.res_dl;
  return b;
}

const char* to_string(LossKind k) {
  switch (k) {
    case LossKind::RB: return "RB";
    case LossKind::RCB: return "RCB";
    case LossKind::CN: return "CN";
    case LossKind::PBB: return "PBB";
    case LossKind::BB: return "BB";
  }
  return "?";
}

LossKind parse_loss_kind(const std::string& s) {
  if (s == "RB") return LossKind::RB;
  if (s == "RCB") return LossKind::RCB;
  if (s == "CN") return LossKind::CN;
  if (s == "PBB") return LossKind::PBB;
  if (s == "BB") return LossKind::BB;
  throw std::invalid_argument("unknown loss kind: " + s);
}

std::size_t variant_width(LossKind kind) {
  switch (kind) {
    case LossKind::RB:
    case LossKind::CN:
    case LossKind::PBB: return 7;
    case LossKind::RCB: return 8;
    case LossKind::BB: break;
  }
  throw std::invalid_argument("variant_width: BB has no residual-style encoding");
}

double mean_diagonal(const ClassMeanSize& mean) { return std::hypot(mean.l, mean.w); }

VariantTargets encode_variant(LossKind kind, const Point3& fg_point, const Box3D& gt,
                              const ClassMeanSize& mean, const HyperParams& hp) {
  if (kind != LossKind::RB && kind != LossKind::RCB && kind != LossKind::PBB)
    throw std::invalid_argument(std::string("encode_variant: no target encoding for ") + to_string(kind));
  const double dx = gt.x - fg_point.x;
  const double dz = gt.z - fg_point.z;
  check_window(Axis::X, dx, hp.search_range);
  check_window(Axis::Z, dz, hp.search_range);
  const double diag = mean_diagonal(mean);
  VariantTargets t;
  t.kind = kind;
  t.values = {dx / diag,
              (gt.y - fg_point.y) / mean.h,
              dz / diag,
              std::log(gt.h / mean.h),
              std::log(gt.w / mean.w),
              std::log(gt.l / mean.l)};
  const double theta = wrap_angle(gt.theta);
  switch (kind) {
    case LossKind::RB: t.values.push_back(theta); break;
    case LossKind::RCB:
      t.values.push_back(std::cos(theta));
      t.values.push_back(std::sin(theta));
      break;
    default: {
      const BinResidual bt = encode_stage1_theta(theta, hp);
      t.theta_bin = bt.bin;
      t.values.push_back(bt.res);
    }
  }
  return t;
}

Box3D decode_residual_box(const Point3& point, std::span<const double> rb, const ClassMeanSize& mean) {
  const double diag = mean_diagonal(mean);
  Box3D b;
  b.x = point.x + rb[0] * diag;
  b.y = point.y + rb[1] * mean.h;
  b.z = point.z + rb[2] * diag;
  b.h = mean.h * std::exp(rb[3]);
  b.w = mean.w * std::exp(rb[4]);
  b.l = mean.l * std::exp(rb[5]);
  b.theta = wrap_angle(rb[6]);
  return b;
}

Box3D decode_variant(const Point3& point, const VariantTargets& t, const ClassMeanSize& mean,
                     const HyperParams& hp) {
  if (t.values.size() != variant_width(t.kind))
    throw std::invalid_argument("decode_variant: target vector has the wrong width");
  Box3D b = decode_residual_box(point, std::span<const double>(t.values).first(7), mean);
  if (t.kind == LossKind::RCB) b.theta = wrap_angle(std::atan2(t.values[7], t.values[6]));
  if (t.kind == LossKind::PBB) b.theta = decode_stage1_theta({t.theta_bin, t.values[6]}, hp);
  return b;
}

}  // namespace ptdet
