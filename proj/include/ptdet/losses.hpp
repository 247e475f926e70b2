// Copyright 2026 The ptdet Authors
// SPDX-License-Identifier: Apache-2.0
//
// Loss functions with hand-derived gradients.
//
// Every loss returns its value together with the gradient with respect to its
// prediction inputs, laid out exactly like the inputs.

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ptdet/codec.hpp"
#include "ptdet/geom.hpp"

namespace ptdet {

/// Floor applied to probabilities before taking logarithms.
inline constexpr double kProbEpsilon = 1e-7;

struct FocalParams {
  double alpha = 0.25;
  double gamma = 2.0;
};

struct LossValueGrad {
  double value = 0.0;
  std::vector<double> grad;
  /// Set when the loss was defined by convention (e.g. no positives).
  bool flagged = false;
};

/// Deterministic pairwise summation.
double pairwise_sum(std::span<const double> v);

/// -alpha_t (1 - p_t)^gamma log(p_t), p_t = p for foreground and 1 - p
/// otherwise. grad is d/dp (one entry). p is clamped into
/// [kProbEpsilon, 1 - kProbEpsilon].
LossValueGrad focal_loss(double p, bool is_foreground, const FocalParams& fp = {});

/// Smooth L1 with the transition at |pred - target| = 1; grad is d/dpred.
LossValueGrad smooth_l1(double pred, double target);

/// -log softmax(logits)[true_bin]; grad = softmax - onehot.
/// Throws std::out_of_range for a bad bin index.
LossValueGrad softmax_ce(std::span<const double> logits, int true_bin);

/// Layout of one bin-based box prediction vector:
///   [x logits (K) | z logits (K) | yaw logits (N) |
///    x residuals (K) | z residuals (K) | yaw residuals (N) | y | h | w | l]
/// with one residual per bin. The residual of the target (or, at inference,
/// the arg-max) bin is the one used.
struct BinHeadLayout {
  int loc_bins = 12;
  int orient_bins = 12;

  static BinHeadLayout stage1(const HyperParams& hp) { return {hp.loc_bins(), hp.orient_bins}; }
  static BinHeadLayout refine(const HyperParams& hp) { return {hp.refine_loc_bins(), hp.refine_orient_bins()}; }

  std::size_t size() const { return 4 * std::size_t(loc_bins) + 2 * std::size_t(orient_bins) + 4; }
  std::size_t x_logits() const { return 0; }
  std::size_t z_logits() const { return loc_bins; }
  std::size_t t_logits() const { return 2 * std::size_t(loc_bins); }
  std::size_t x_res() const { return 2 * std::size_t(loc_bins) + orient_bins; }
  std::size_t z_res() const { return 3 * std::size_t(loc_bins) + orient_bins; }
  std::size_t t_res() const { return 4 * std::size_t(loc_bins) + orient_bins; }
  std::size_t y_res() const { return 4 * std::size_t(loc_bins) + 2 * std::size_t(orient_bins); }
};

/// Arg-max bins plus their residuals, read from one prediction vector.
StageOneTargets pick_stage1(std::span<const double> pred, const BinHeadLayout& layout);
RefineTargets pick_refine(std::span<const double> pred, const BinHeadLayout& layout);

/// Overall stage-1 regression loss: for each foreground point, bin CE plus
/// in-bin residual smooth L1 for x, z and yaw, plus smooth L1 for y, h, w, l;
/// summed and divided by n_pos. `preds` holds targets.size() consecutive
/// vectors in BinHeadLayout::stage1(hp) layout. n_pos == 0 yields a flagged
/// zero loss with zero gradient.
LossValueGrad stage1_loss(std::span<const double> preds, std::span<const StageOneTargets> targets,
                          std::size_t n_pos, const HyperParams& hp);

enum class ProposalClass { Negative = 0, Positive = 1, Ignored = 2 };

/// Refinement loss: mean two-class softmax CE over the labeled proposals plus
/// the bin-based regression loss averaged over the regression set.
///  cls_logits: 2 per proposal (background, object); Ignored proposals
///              contribute nothing and are not counted.
///  reg_preds : reg_targets.size() vectors in BinHeadLayout::refine(hp).
/// grad = [d/d cls_logits | d/d reg_preds]. An empty regression set gives a
/// zero regression term.
LossValueGrad refine_loss(std::span<const double> cls_logits, std::span<const ProposalClass> labels,
                          std::span<const double> reg_preds, std::span<const RefineTargets> reg_targets,
                          const HyperParams& hp);

/// Width of one per-point prediction vector for a stage-1 loss variant.
///  RB 7, RCB 8, CN 7 (RB parameterization), PBB 6 + 2N
///  ([6 residuals | yaw logits | yaw residuals]), BB the stage-1 layout.
std::size_t prediction_width(LossKind kind, const HyperParams& hp);

/// Decodes one per-point prediction vector of the given variant into a box.
Box3D decode_prediction(LossKind kind, std::span<const double> pred, const Point3& point,
                        const ClassMeanSize& mean, const HyperParams& hp);

/// Corner loss for one prediction in RB parameterization: mean smooth L1
/// over the 24 corner coordinates, minimized over gt and its pi-flip.
LossValueGrad corner_loss(std::span<const double> rb_pred, const Point3& point, const Box3D& gt,
                          const ClassMeanSize& mean);

/// Stage-1 regression loss of any variant, averaged over the foreground
/// points. Targets are encoded internally from (point, gt) pairs.
LossValueGrad variant_loss(LossKind kind, std::span<const double> preds,
                           std::span<const Point3> fg_points, std::span<const Box3D> gts,
                           const ClassMeanSize& mean, const HyperParams& hp);

}  // namespace ptdet
