// Copyright 2026 The ptdet Authors
// SPDX-License-Identifier: Apache-2.0
//
// Bin-based box target codecs.
//
// Stage-1 targets are defined per foreground point: the object center is
// located by classifying a bin along X and Z inside a search window of
// +-search_range around the point, plus a residual inside the bin normalized
// by `norm_c`. Yaw uses `orient_bins` bins over [-pi, pi) with the residual
// normalized by the bin width. y and the sizes are plain residuals.
//
// Refinement targets are the same construction applied in the proposal's
// canonical frame, with a smaller window and yaw bins of width
// `refine_orient_bin` over [-pi/4, pi/4). The refinement yaw residual is
// scaled by 2 / refine_orient_bin, so it lies in [-1, 1].

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "ptdet/geom.hpp"

namespace ptdet {

struct HyperParams {
  double search_range = 3.0;                 // S, stage-1 window half-width (m)
  double bin_size = 0.5;                     // delta (m)
  int orient_bins = 12;                      // n, stage-1 yaw bins over 2*pi
  double refine_search_range = 1.5;          // refinement window half-width (m)
  double refine_orient_bin = kPi / 18.0;     // omega, 10 degrees
  double context_eta = 1.0;                  // pooling enlargement (m)
  double norm_c = 0.5;                       // residual normalizer, equal to bin_size

  int loc_bins() const;         // bins along X or Z for stage 1
  int refine_loc_bins() const;  // bins along X or Z for refinement
  int refine_orient_bins() const;
};

/// Throws std::invalid_argument when a field is non-positive or the search
/// ranges do not split into a whole number of bins.
void validate(const HyperParams& hp);

struct ClassMeanSize {
  double h = 1.52;
  double w = 1.63;
  double l = 3.88;
};

enum class Axis { X, Y, Z, Theta };
const char* axis_name(Axis a);

/// Raised when a target falls outside the codec's representable range.
class EncodeError : public std::runtime_error {
 public:
  EncodeError(Axis axis, const std::string& what) : std::runtime_error(what), axis_(axis) {}
  Axis axis() const { return axis_; }

 private:
  Axis axis_;
};

struct StageOneTargets {
  int bin_x = 0, bin_z = 0;
  double res_x = 0.0, res_z = 0.0;
  double res_y = 0.0;
  int bin_theta = 0;
  double res_theta = 0.0;
  double res_h = 0.0, res_w = 0.0, res_l = 0.0;
};

struct RefineTargets {
  int bin_dx = 0, bin_dz = 0;
  double res_dx = 0.0, res_dz = 0.0, res_dy = 0.0;
  int bin_dtheta = 0;
  double res_dtheta = 0.0;
  double res_dh = 0.0, res_dw = 0.0, res_dl = 0.0;
};

/// Bin index and normalized residual of one scalar.
struct BinResidual {
  int bin = 0;
  double res = 0.0;
};

/// One bin-classified scalar: `offset` is placed on a grid of `num_bins` bins
/// of width `bin_size` starting at `lower`, residual scaled by 1 / `norm`.
/// Values on the upper edge fall into the last bin.
BinResidual encode_bin(double offset, double lower, double bin_size, int num_bins, double norm);
double decode_bin(BinResidual br, double lower, double bin_size, double norm);

StageOneTargets encode_stage1(const Point3& fg_point, const Box3D& gt, const ClassMeanSize& mean,
                              const HyperParams& hp);
Box3D decode_stage1(const Point3& point, const StageOneTargets& t, const ClassMeanSize& mean,
                    const HyperParams& hp);

/// Stage-1 yaw codec alone (shared with the partial-bin variant).
BinResidual encode_stage1_theta(double theta, const HyperParams& hp);
double decode_stage1_theta(BinResidual br, const HyperParams& hp);

/// Counts refinement encodes whose yaw difference was clamped into
/// [-pi/4, pi/4]. Thread-safe.
std::size_t refine_clamp_count();
void reset_refine_clamp_count();

/// gt yaw is first replaced by its pi-flip when that brings the difference
/// closer to zero. Differences beyond pi/4 by at most pi/16 are clamped
/// (and counted); larger differences throw EncodeError.
RefineTargets encode_refine(const Box3D& proposal, const Box3D& gt, const ClassMeanSize& mean,
                            const HyperParams& hp);
Box3D decode_refine(const Box3D& proposal, const RefineTargets& t, const ClassMeanSize& mean,
                    const HyperParams& hp);

// Ablation encodings -------------------------------------------------------

enum class LossKind { RB, RCB, CN, PBB, BB };

const char* to_string(LossKind k);
/// Parses "RB", "RCB", "CN", "PBB" or "BB"; throws std::invalid_argument.
LossKind parse_loss_kind(const std::string& s);

/// Target vector of the residual-style encodings.
///  RB : [dx, dy, dz, dh, dw, dl, theta]               (7 values)
///  RCB: [dx, dy, dz, dh, dw, dl, cos theta, sin theta] (8 values)
///  PBB: [dx, dy, dz, dh, dw, dl, res_theta] and theta_bin (7 values + bin)
/// Center offsets are normalized by the mean-size ground diagonal (x, z) and
/// the mean height (y); sizes are log ratios to the class mean.
struct VariantTargets {
  LossKind kind = LossKind::RB;
  std::vector<double> values;
  int theta_bin = -1;
};

/// Number of regression values for a residual-style encoding.
std::size_t variant_width(LossKind kind);

/// Valid for RB, RCB and PBB. Same window precondition as encode_stage1.
VariantTargets encode_variant(LossKind kind, const Point3& fg_point, const Box3D& gt,
                              const ClassMeanSize& mean, const HyperParams& hp);
Box3D decode_variant(const Point3& point, const VariantTargets& t, const ClassMeanSize& mean,
                     const HyperParams& hp);

/// Decodes the 7-value RB parameterization directly; also used by the
/// corner loss.
Box3D decode_residual_box(const Point3& point, std::span<const double> rb, const ClassMeanSize& mean);

/// Ground diagonal of the class mean size, the RB center normalizer.
double mean_diagonal(const ClassMeanSize& mean);

}  // namespace ptdet
