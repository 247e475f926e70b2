// Copyright 2026 The ptdet Authors
// SPDX-License-Identifier: Apache-2.0

#include "ptdet/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace ptdet {

double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 8) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

LossValueGrad focal_loss(double p, bool is_foreground, const FocalParams& fp) {
  p = std::clamp(p, kProbEpsilon, 1.0 - kProbEpsilon);
  const double g = fp.gamma;
  LossValueGrad out;
  if (is_foreground) {
    // L = -a (1-p)^g log p
    const double a = fp.alpha;
    const double q = 1.0 - p;
    out.value = -a * std::pow(q, g) * std::log(p);
    const double dpow = g == 0.0 ? 0.0 : g * std::pow(q, g - 1.0);
    out.grad = {a * (dpow * std::log(p) - std::pow(q, g) / p)};
  } else {
    // L = -(1-a) p^g log(1-p)
    const double a = 1.0 - fp.alpha;
    const double q = 1.0 - p;
    out.value = -a * std::pow(p, g) * std::log(q);
    const double dpow = g == 0.0 ? 0.0 : g * std::pow(p, g - 1.0);
    out.grad = {-a * (dpow * std::log(q) - std::pow(p, g) / q)};
  }
  return out;
}

namespace {

inline double sl1_value(double d) { return std::abs(d) < 1.0 ? 0.5 * d * d : std::abs(d) - 0.5; }
inline double sl1_grad(double d) { return std::abs(d) < 1.0 ? d : (d > 0 ? 1.0 : -1.0); }

// Adds CE(logits, bin) and writes its gradient (scaled) into grad.
double ce_accumulate(std::span<const double> logits, int bin, std::span<double> grad, double scale) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double v : logits) z += std::exp(v - mx);
  const double lse = mx + std::log(z);
  for (std::size_t k = 0; k < logits.size(); ++k) {
    const double sm = std::exp(logits[k] - lse);
    grad[k] += scale * (sm - (static_cast<int>(k) == bin ? 1.0 : 0.0));
  }
  return lse - logits[static_cast<std::size_t>(bin)];
}

double sl1_accumulate(double pred, double target, double& grad, double scale) {
  const double d = pred - target;
  grad += scale * sl1_grad(d);
  return sl1_value(d);
}

struct BinBoxTargets {
  int bx, bz, bt;
  double rx, rz, rt, ry, rh, rw, rl;
};

BinBoxTargets as_bin_box(const StageOneTargets& t) {
  return {t.bin_x, t.bin_z, t.bin_theta, t.res_x, t.res_z, t.res_theta, t.res_y, t.res_h, t.res_w, t.res_l};
}

BinBoxTargets as_bin_box(const RefineTargets& t) {
  return {t.bin_dx, t.bin_dz, t.bin_dtheta, t.res_dx, t.res_dz, t.res_dtheta, t.res_dy, t.res_dh, t.res_dw, t.res_dl};
}

void check_bin(int bin, int count, const char* what) {
  if (bin < 0 || bin >= count)
    throw std::out_of_range(std::string("bin index out of range for ") + what);
}

// Bin-based box loss of a single prediction vector; gradient scaled by
// `scale` is added to grad.
double bin_box_loss(std::span<const double> pred, const BinBoxTargets& t, const BinHeadLayout& L,
                    std::span<double> grad, double scale) {
  const std::size_t K = L.loc_bins, N = L.orient_bins;
  check_bin(t.bx, L.loc_bins, "x");
  check_bin(t.bz, L.loc_bins, "z");
  check_bin(t.bt, L.orient_bins, "yaw");
  double v = 0.0;
  v += ce_accumulate(pred.subspan(L.x_logits(), K), t.bx, grad.subspan(L.x_logits(), K), scale);
  v += ce_accumulate(pred.subspan(L.z_logits(), K), t.bz, grad.subspan(L.z_logits(), K), scale);
  v += ce_accumulate(pred.subspan(L.t_logits(), N), t.bt, grad.subspan(L.t_logits(), N), scale);
  v += sl1_accumulate(pred[L.x_res() + t.bx], t.rx, grad[L.x_res() + t.bx], scale);
  v += sl1_accumulate(pred[L.z_res() + t.bz], t.rz, grad[L.z_res() + t.bz], scale);
  v += sl1_accumulate(pred[L.t_res() + t.bt], t.rt, grad[L.t_res() + t.bt], scale);
  const std::size_t y = L.y_res();
  v += sl1_accumulate(pred[y + 0], t.ry, grad[y + 0], scale);
  v += sl1_accumulate(pred[y + 1], t.rh, grad[y + 1], scale);
  v += sl1_accumulate(pred[y + 2], t.rw, grad[y + 2], scale);
  v += sl1_accumulate(pred[y + 3], t.rl, grad[y + 3], scale);
  return v;
}

int argmax(std::span<const double> v) {
  return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

BinBoxTargets pick_bin_box(std::span<const double> pred, const BinHeadLayout& L) {
  if (pred.size() != L.size()) throw std::invalid_argument("prediction vector has the wrong width");
  BinBoxTargets t{};
  t.bx = argmax(pred.subspan(L.x_logits(), L.loc_bins));
  t.bz = argmax(pred.subspan(L.z_logits(), L.loc_bins));
  t.bt = argmax(pred.subspan(L.t_logits(), L.orient_bins));
  t.rx = pred[L.x_res() + t.bx];
  t.rz = pred[L.z_res() + t.bz];
  t.rt = pred[L.t_res() + t.bt];
  t.ry = pred[L.y_res()];
  t.rh = pred[L.y_res() + 1];
  t.rw = pred[L.y_res() + 2];
  t.rl = pred[L.y_res() + 3];
  return t;
}

}  // namespace

LossValueGrad smooth_l1(double pred, double target) {
  const double d = pred - target;
  return {sl1_value(d), {sl1_grad(d)}, false};
}

LossValueGrad softmax_ce(std::span<const double> logits, int true_bin) {
  if (true_bin < 0 || static_cast<std::size_t>(true_bin) >= logits.size())
    throw std::out_of_range("softmax_ce: true bin out of range");
  LossValueGrad out;
  out.grad.assign(logits.size(), 0.0);
  out.value = ce_accumulate(logits, true_bin, out.grad, 1.0);
  return out;
}

StageOneTargets pick_stage1(std::span<const double> pred, const BinHeadLayout& layout) {
  const BinBoxTargets b = pick_bin_box(pred, layout);
  StageOneTargets t;
  t.bin_x = b.bx;
  t.bin_z = b.bz;
  t.bin_theta = b.bt;
  t.res_x = b.rx;
  t.res_z = b.rz;
  t.res_theta = b.rt;
  t.res_y = b.ry;
  t.res_h = b.rh;
  t.res_w = b.rw;
  t.res_l = b.rl;
  return t;
}

RefineTargets pick_refine(std::span<const double> pred, const BinHeadLayout& layout) {
  const BinBoxTargets b = pick_bin_box(pred, layout);
  RefineTargets t;
  t.bin_dx = b.bx;
  t.bin_dz = b.bz;
  t.bin_dtheta = b.bt;
  t.res_dx = b.rx;
  t.res_dz = b.rz;
  t.res_dtheta = b.rt;
  t.res_dy = b.ry;
  t.res_dh = b.rh;
  t.res_dw = b.rw;
  t.res_dl = b.rl;
  return t;
}

LossValueGrad stage1_loss(std::span<const double> preds, std::span<const StageOneTargets> targets,
                          std::size_t n_pos, const HyperParams& hp) {
  const BinHeadLayout L = BinHeadLayout::stage1(hp);
  if (preds.size() != targets.size() * L.size())
    throw std::invalid_argument("stage1_loss: predictions and targets are not aligned");
  LossValueGrad out;
  out.grad.assign(preds.size(), 0.0);
  if (n_pos == 0) {
    out.flagged = true;
    return out;
  }
  const double scale = 1.0 / static_cast<double>(n_pos);
  std::vector<double> per_point(targets.size());
  for (std::size_t i = 0; i < targets.size(); ++i) {
    per_point[i] = bin_box_loss(preds.subspan(i * L.size(), L.size()), as_bin_box(targets[i]), L,
                                std::span<double>(out.grad).subspan(i * L.size(), L.size()), scale);
  }
  out.value = pairwise_sum(per_point) * scale;
  return out;
}

LossValueGrad refine_loss(std::span<const double> cls_logits, std::span<const ProposalClass> labels,
                          std::span<const double> reg_preds, std::span<const RefineTargets> reg_targets,
                          const HyperParams& hp) {
  const BinHeadLayout L = BinHeadLayout::refine(hp);
  if (cls_logits.size() != 2 * labels.size())
    throw std::invalid_argument("refine_loss: need two logits per proposal");
  if (reg_preds.size() != reg_targets.size() * L.size())
    throw std::invalid_argument("refine_loss: regression predictions and targets are not aligned");
  LossValueGrad out;
  out.grad.assign(cls_logits.size() + reg_preds.size(), 0.0);
  std::span<double> g_cls(out.grad.data(), cls_logits.size());
  std::span<double> g_reg(out.grad.data() + cls_logits.size(), reg_preds.size());

  const auto labeled = static_cast<std::size_t>(
      std::count_if(labels.begin(), labels.end(), [](ProposalClass c) { return c != ProposalClass::Ignored; }));
  std::vector<double> terms;
  if (labeled > 0) {
    const double scale = 1.0 / static_cast<double>(labeled);
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == ProposalClass::Ignored) continue;
      terms.push_back(ce_accumulate(cls_logits.subspan(2 * i, 2), labels[i] == ProposalClass::Positive ? 1 : 0,
                                    g_cls.subspan(2 * i, 2), scale));
    }
    out.value = pairwise_sum(terms) * scale;
  } else {
    out.flagged = true;
  }
  if (!reg_targets.empty()) {
    const double scale = 1.0 / static_cast<double>(reg_targets.size());
    terms.assign(reg_targets.size(), 0.0);
    for (std::size_t i = 0; i < reg_targets.size(); ++i)
      terms[i] = bin_box_loss(reg_preds.subspan(i * L.size(), L.size()), as_bin_box(reg_targets[i]), L,
                              g_reg.subspan(i * L.size(), L.size()), scale);
    out.value += pairwise_sum(terms) * scale;
  }
  return out;
}

std::size_t prediction_width(LossKind kind, const HyperParams& hp) {
  switch (kind) {
    case LossKind::RB:
    case LossKind::CN: return 7;
    case LossKind::RCB: return 8;
    case LossKind::PBB: return 6 + 2 * static_cast<std::size_t>(hp.orient_bins);
    case LossKind::BB: return BinHeadLayout::stage1(hp).size();
  }
  throw std::invalid_argument("prediction_width: unknown loss kind");
}

Box3D decode_prediction(LossKind kind, std::span<const double> pred, const Point3& point,
                        const ClassMeanSize& mean, const HyperParams& hp) {
  if (pred.size() != prediction_width(kind, hp))
    throw std::invalid_argument("decode_prediction: prediction vector has the wrong width");
  switch (kind) {
    case LossKind::RB:
    case LossKind::CN: return decode_residual_box(point, pred, mean);
    case LossKind::RCB: {
      Box3D b = decode_residual_box(point, pred.first(7), mean);
      b.theta = wrap_angle(std::atan2(pred[7], pred[6]));
      return b;
    }
    case LossKind::PBB: {
      const std::size_t n = hp.orient_bins;
      double rb[7];
      std::copy(pred.begin(), pred.begin() + 6, rb);
      rb[6] = 0.0;
      Box3D b = decode_residual_box(point, rb, mean);
      const int bin = argmax(pred.subspan(6, n));
      b.theta = decode_stage1_theta({bin, pred[6 + n + bin]}, hp);
      return b;
    }
    case LossKind::BB: return decode_stage1(point, pick_stage1(pred, BinHeadLayout::stage1(hp)), mean, hp);
  }
  throw std::invalid_argument("decode_prediction: unknown loss kind");
}

namespace {

constexpr double kFaceX[4] = {+0.5, +0.5, -0.5, -0.5};
constexpr double kFaceZ[4] = {-0.5, +0.5, +0.5, -0.5};

// Corner loss against one gt; gradient w.r.t. the 7 RB parameters.
double corner_loss_against(std::span<const double> t, const Point3& point, const Box3D& gt,
                           const ClassMeanSize& mean, double* grad) {
  const double diag = mean_diagonal(mean);
  const Box3D b = decode_residual_box(point, t, mean);
  const double c = std::cos(t[6]), s = std::sin(t[6]);
  const auto gc = box_corners(gt);
  constexpr double kScale = 1.0 / 24.0;
  double value = 0.0;
  std::fill(grad, grad + 7, 0.0);
  for (int k = 0; k < 8; ++k) {
    const double ax = kFaceX[k % 4] * b.l;
    const double az = kFaceZ[k % 4] * b.w;
    const double ay = (k < 4 ? -0.5 : 0.5) * b.h;
    const double px = b.x + ax * c - az * s;
    const double py = b.y + ay;
    const double pz = b.z + ax * s + az * c;
    const double dx = px - gc[k].x, dy = py - gc[k].y, dz = pz - gc[k].z;
    value += sl1_value(dx) + sl1_value(dy) + sl1_value(dz);
    const double gx = kScale * sl1_grad(dx), gy = kScale * sl1_grad(dy), gz = kScale * sl1_grad(dz);
    grad[0] += gx * diag;
    grad[1] += gy * mean.h;
    grad[2] += gz * diag;
    grad[3] += gy * ay;
    grad[4] += gx * (-az * s) + gz * (az * c);
    grad[5] += gx * (ax * c) + gz * (ax * s);
    grad[6] += gx * (-ax * s - az * c) + gz * (ax * c - az * s);
  }
  return value * kScale;
}

}  // namespace

LossValueGrad corner_loss(std::span<const double> rb_pred, const Point3& point, const Box3D& gt,
                          const ClassMeanSize& mean) {
  if (rb_pred.size() != 7) throw std::invalid_argument("corner_loss: expects 7 parameters");
  double g0[7], g1[7];
  const double v0 = corner_loss_against(rb_pred, point, gt, mean, g0);
  const double v1 = corner_loss_against(rb_pred, point, flipped(gt), mean, g1);
  LossValueGrad out;
  const double* g = v0 <= v1 ? g0 : g1;
  out.value = std::min(v0, v1);
  out.grad.assign(g, g + 7);
  return out;
}

LossValueGrad variant_loss(LossKind kind, std::span<const double> preds,
                           std::span<const Point3> fg_points, std::span<const Box3D> gts,
                           const ClassMeanSize& mean, const HyperParams& hp) {
  const std::size_t n = fg_points.size();
  if (gts.size() != n) throw std::invalid_argument("variant_loss: points and gt boxes are not aligned");
  const std::size_t width = prediction_width(kind, hp);
  if (preds.size() != n * width) throw std::invalid_argument("variant_loss: predictions have the wrong size");

  if (kind == LossKind::BB) {
    std::vector<StageOneTargets> targets(n);
    for (std::size_t i = 0; i < n; ++i) targets[i] = encode_stage1(fg_points[i], gts[i], mean, hp);
    return stage1_loss(preds, targets, n, hp);
  }

  LossValueGrad out;
  out.grad.assign(preds.size(), 0.0);
  if (n == 0) {
    out.flagged = true;
    return out;
  }
  const double scale = 1.0 / static_cast<double>(n);
  std::vector<double> per_point(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto p = preds.subspan(i * width, width);
    std::span<double> g(out.grad.data() + i * width, width);
    if (kind == LossKind::CN) {
      const LossValueGrad cn = corner_loss(p, fg_points[i], gts[i], mean);
      per_point[i] = cn.value;
      for (std::size_t k = 0; k < width; ++k) g[k] += scale * cn.grad[k];
      continue;
    }
    const VariantTargets t = encode_variant(kind, fg_points[i], gts[i], mean, hp);
    double v = 0.0;
    if (kind == LossKind::PBB) {
      for (std::size_t k = 0; k < 6; ++k) v += sl1_accumulate(p[k], t.values[k], g[k], scale);
      const std::size_t nb = hp.orient_bins;
      v += ce_accumulate(p.subspan(6, nb), t.theta_bin, g.subspan(6, nb), scale);
      v += sl1_accumulate(p[6 + nb + t.theta_bin], t.values[6], g[6 + nb + t.theta_bin], scale);
    } else {
      for (std::size_t k = 0; k < width; ++k) v += sl1_accumulate(p[k], t.values[k], g[k], scale);
    }
    per_point[i] = v;
  }
  out.value = pairwise_sum(per_point) * scale;
  return out;
}

}  // namespace ptdet
