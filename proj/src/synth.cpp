// Copyright 2026 The ptdet Authors
// SPDX-License-Identifier: Apache-2.0

#include "ptdet/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <random>

#include "ptdet/iou.hpp"
#include "ptdet/kernels.hpp"
#include "ptdet/pool.hpp"

namespace ptdet::synth {

namespace {

template <class Rng>
double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

template <class Rng>
std::size_t uniform_count(Rng& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, std::max(lo, hi))(rng);
}

inline double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t k = 0; k < n; ++k) s += a[k] * b[k];
  return s;
}

inline void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) y[k] += alpha * x[k];
}

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

SynthScene generate_scene(const SynthSceneConfig& cfg) {
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> n01(0.0, 1.0);
  SynthScene scene;

  const std::size_t wanted = uniform_count(rng, cfg.min_objects, cfg.max_objects);
  for (std::size_t k = 0; k < wanted; ++k) {
    bool placed = false;
    for (std::size_t attempt = 0; attempt < cfg.placement_retries && !placed; ++attempt) {
      Box3D b;
      b.h = std::max(0.5 * cfg.mean_size.h, cfg.mean_size.h + cfg.size_sigma_h * n01(rng));
      b.w = std::max(0.5 * cfg.mean_size.w, cfg.mean_size.w + cfg.size_sigma_w * n01(rng));
      b.l = std::max(0.5 * cfg.mean_size.l, cfg.mean_size.l + cfg.size_sigma_l * n01(rng));
      b.x = uniform(rng, -cfg.x_range, cfg.x_range);
      b.z = uniform(rng, cfg.z_min, cfg.z_max);
      b.y = 0.5 * b.h;
      b.theta = wrap_angle(uniform(rng, -kPi, kPi));
      const bool clear = std::all_of(scene.boxes.begin(), scene.boxes.end(),
                                     [&](const Box3D& o) { return bev_iou(o, b) == 0.0; });
      if (clear) {
        scene.boxes.push_back(b);
        placed = true;
      }
    }
    if (!placed) scene.placement_shortfall = true;
  }

  for (const Box3D& b : scene.boxes) {
    const std::size_t count = uniform_count(rng, cfg.min_object_points, cfg.max_object_points);
    const CanonicalFrame frame = CanonicalFrame::of(b);
    for (std::size_t i = 0; i < count; ++i) {
      const Point3 local{uniform(rng, -0.5, 0.5) * b.l, uniform(rng, -0.5, 0.5) * b.h, uniform(rng, -0.5, 0.5) * b.w};
      Point3 p = canonical_inverse(local, frame);
      p.x += cfg.noise_sigma * n01(rng);
      p.y += cfg.noise_sigma * n01(rng);
      p.z += cfg.noise_sigma * n01(rng);
      scene.cloud.push_back(p, uniform(rng, 0.3, 0.9));
    }
    scene.object_points.push_back(count);
  }

  const double margin = 3.0;
  for (std::size_t i = 0; i < cfg.background_points; ++i) {
    const Point3 p{uniform(rng, -cfg.x_range - margin, cfg.x_range + margin),
                   -0.1 + cfg.noise_sigma * n01(rng),
                   uniform(rng, cfg.z_min - margin, cfg.z_max + margin)};
    scene.cloud.push_back(p, uniform(rng, 0.0, 0.3));
  }

  for (std::size_t c = 0; c < cfg.clutter_clusters; ++c) {
    Point3 center;
    bool ok = false;
    for (std::size_t attempt = 0; attempt < cfg.placement_retries && !ok; ++attempt) {
      center = {uniform(rng, -cfg.x_range, cfg.x_range), 0.0, uniform(rng, cfg.z_min, cfg.z_max)};
      ok = std::none_of(scene.boxes.begin(), scene.boxes.end(),
                        [&](const Box3D& b) { return point_in_box({center.x, b.y, center.z}, enlarge_box(b, 1.5)); });
    }
    if (!ok) continue;
    const bool pole = uniform(rng, 0.0, 1.0) < 0.5;
    for (std::size_t i = 0; i < cfg.clutter_points; ++i) {
      Point3 p;
      if (pole) {
        const double a = uniform(rng, -kPi, kPi);
        p = {center.x + 0.15 * std::cos(a), uniform(rng, 0.0, 2.5), center.z + 0.15 * std::sin(a)};
      } else {
        p = {center.x + 0.5 * n01(rng), 0.4 + 0.3 * n01(rng), center.z + 0.5 * n01(rng)};
      }
      scene.cloud.push_back(p, uniform(rng, 0.0, 0.6));
    }
  }
  return scene;
}

std::vector<SynthScene> generate_scenes(const SynthSceneConfig& cfg, std::size_t n) {
  std::vector<SynthScene> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    SynthSceneConfig c = cfg;
    c.seed = cfg.seed + i;
    out.push_back(generate_scene(c));
  }
  return out;
}

std::vector<double> point_features(const PointCloud& cloud) {
  constexpr double kRadii[3] = {0.8, 1.6, 3.0};
  const std::size_t n = cloud.size();
  std::vector<double> out(n * kFeatureDim, 0.0);
  const auto& pts = cloud.points;
  const auto sn = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t si = 0; si < sn; ++si) {
    const auto i = static_cast<std::size_t>(si);
    // Per radius: count, sum dx, dy, dz, sum dx^2, dx dz, dz^2, dy^2.
    double acc[3][8] = {};
    for (std::size_t j = 0; j < n; ++j) {
      const double dx = pts[j].x - pts[i].x, dy = pts[j].y - pts[i].y, dz = pts[j].z - pts[i].z;
      const double d2 = dx * dx + dy * dy + dz * dz;
      for (int r = 0; r < 3; ++r) {
        if (d2 > kRadii[r] * kRadii[r]) continue;
        double* a = acc[r];
        a[0] += 1.0;
        a[1] += dx;
        a[2] += dy;
        a[3] += dz;
        a[4] += dx * dx;
        a[5] += dx * dz;
        a[6] += dz * dz;
        a[7] += dy * dy;
      }
    }
    double* f = out.data() + i * kFeatureDim;
    for (int r = 0; r < 3; ++r) {
      const double* a = acc[r];
      const double c = a[0];
      const double rad = kRadii[r];
      const double mx = a[1] / c, my = a[2] / c, mz = a[3] / c;
      const double cxx = a[4] / c - mx * mx, cxz = a[5] / c - mx * mz, czz = a[6] / c - mz * mz;
      const double cyy = a[7] / c - my * my;
      const double tr = cxx + czz + 1e-6;
      double* g = f + 10 * r;
      g[0] = std::log1p(c);
      g[1] = mx / rad;
      g[2] = my / rad;
      g[3] = mz / rad;
      g[4] = cxx / (rad * rad);
      g[5] = cxz / (rad * rad);
      g[6] = czz / (rad * rad);
      g[7] = cyy / (rad * rad);
      g[8] = (cxx - czz) / tr;
      g[9] = 2.0 * cxz / tr;
    }
    f[30] = pts[i].y;
  }
  return out;
}

// TinyNet ----------------------------------------------------------------------

TinyNet::TinyNet(std::size_t in_dim, std::size_t hidden, std::size_t reg_dim, std::uint64_t seed)
    : in_(in_dim), hid_(hidden), reg_(reg_dim) {
  o_w1_ = 0;
  o_b1_ = o_w1_ + hid_ * in_;
  o_w2_ = o_b1_ + hid_;
  o_b2_ = o_w2_ + hid_ * hid_;
  o_ws_ = o_b2_ + hid_;
  o_bs_ = o_ws_ + hid_;
  o_wr_ = o_bs_ + 1;
  o_br_ = o_wr_ + reg_ * hid_;
  params_.assign(o_br_ + reg_, 0.0);

  // Trunk and segmentation head are drawn first so they do not depend on
  // the regression width.
  std::mt19937_64 rng(seed);
  auto fill = [&](std::size_t off, std::size_t count, std::size_t fan_in, std::size_t fan_out) {
    const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> u(-a, a);
    for (std::size_t k = 0; k < count; ++k) params_[off + k] = u(rng);
  };
  fill(o_w1_, hid_ * in_, in_, hid_);
  fill(o_w2_, hid_ * hid_, hid_, hid_);
  fill(o_ws_, hid_, hid_, 1);
  fill(o_wr_, reg_ * hid_, hid_, reg_);
}

TinyNet::Activations TinyNet::forward(std::span<const double> x) const {
  Activations act;
  act.n = x.size() / in_;
  act.h1.resize(act.n * hid_);
  act.h2.resize(act.n * hid_);
  act.seg.resize(act.n);
  const double* W1 = params_.data() + o_w1_;
  const double* b1 = params_.data() + o_b1_;
  const double* W2 = params_.data() + o_w2_;
  const double* b2 = params_.data() + o_b2_;
  const double* ws = params_.data() + o_ws_;
  const double bs = params_[o_bs_];
  for (std::size_t i = 0; i < act.n; ++i) {
    const double* xi = x.data() + i * in_;
    double* h1 = act.h1.data() + i * hid_;
    double* h2 = act.h2.data() + i * hid_;
    for (std::size_t j = 0; j < hid_; ++j) h1[j] = std::tanh(b1[j] + dot(W1 + j * in_, xi, in_));
    for (std::size_t j = 0; j < hid_; ++j) h2[j] = std::tanh(b2[j] + dot(W2 + j * hid_, h1, hid_));
    act.seg[i] = bs + dot(ws, h2, hid_);
  }
  return act;
}

std::vector<double> TinyNet::regress(const Activations& act, std::span<const std::size_t> rows) const {
  std::vector<double> out(rows.size() * reg_);
  const double* Wr = params_.data() + o_wr_;
  const double* br = params_.data() + o_br_;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const double* h2 = act.h2.data() + rows[k] * hid_;
    for (std::size_t r = 0; r < reg_; ++r) out[k * reg_ + r] = br[r] + dot(Wr + r * hid_, h2, hid_);
  }
  return out;
}

void TinyNet::backward(std::span<const double> x, const Activations& act, std::span<const double> d_seg,
                       std::span<const std::size_t> rows, std::span<const double> d_reg,
                       std::span<double> grad) const {
  const double* W2 = params_.data() + o_w2_;
  const double* ws = params_.data() + o_ws_;
  const double* Wr = params_.data() + o_wr_;
  double* gW1 = grad.data() + o_w1_;
  double* gb1 = grad.data() + o_b1_;
  double* gW2 = grad.data() + o_w2_;
  double* gb2 = grad.data() + o_b2_;
  double* gws = grad.data() + o_ws_;
  double* gWr = grad.data() + o_wr_;
  double* gbr = grad.data() + o_br_;

  // d loss / d h2, seeded by the heads.
  std::vector<double> dh2(act.n * hid_, 0.0);
  for (std::size_t i = 0; i < act.n; ++i) {
    const double ds = d_seg[i];
    if (ds == 0.0) continue;
    axpy(ds, ws, dh2.data() + i * hid_, hid_);
    axpy(ds, act.h2.data() + i * hid_, gws, hid_);
    grad[o_bs_] += ds;
  }
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const std::size_t i = rows[k];
    const double* h2 = act.h2.data() + i * hid_;
    double* d = dh2.data() + i * hid_;
    for (std::size_t r = 0; r < reg_; ++r) {
      const double g = d_reg[k * reg_ + r];
      if (g == 0.0) continue;
      axpy(g, Wr + r * hid_, d, hid_);
      axpy(g, h2, gWr + r * hid_, hid_);
      gbr[r] += g;
    }
  }

  std::vector<double> da2(hid_), dh1(hid_), da1(hid_);
  for (std::size_t i = 0; i < act.n; ++i) {
    const double* h1 = act.h1.data() + i * hid_;
    const double* h2 = act.h2.data() + i * hid_;
    const double* d2 = dh2.data() + i * hid_;
    bool any = false;
    for (std::size_t j = 0; j < hid_; ++j) {
      da2[j] = d2[j] * (1.0 - h2[j] * h2[j]);
      any = any || da2[j] != 0.0;
    }
    if (!any) continue;
    std::fill(dh1.begin(), dh1.end(), 0.0);
    for (std::size_t j = 0; j < hid_; ++j) {
      axpy(da2[j], h1, gW2 + j * hid_, hid_);
      gb2[j] += da2[j];
      axpy(da2[j], W2 + j * hid_, dh1.data(), hid_);
    }
    const double* xi = x.data() + i * in_;
    for (std::size_t j = 0; j < hid_; ++j) {
      da1[j] = dh1[j] * (1.0 - h1[j] * h1[j]);
      axpy(da1[j], xi, gW1 + j * in_, in_);
      gb1[j] += da1[j];
    }
  }
}

// Training ---------------------------------------------------------------------

FeatureScaler FeatureScaler::fit(std::span<const std::vector<double>> raw_features) {
  FeatureScaler s;
  s.mean.assign(kFeatureDim, 0.0);
  s.inv_std.assign(kFeatureDim, 1.0);
  std::vector<double> sq(kFeatureDim, 0.0);
  double count = 0.0;
  for (const auto& f : raw_features) {
    for (std::size_t i = 0; i + kFeatureDim <= f.size(); i += kFeatureDim) {
      for (std::size_t k = 0; k < kFeatureDim; ++k) {
        s.mean[k] += f[i + k];
        sq[k] += f[i + k] * f[i + k];
      }
      count += 1.0;
    }
  }
  if (count == 0.0) return s;
  for (std::size_t k = 0; k < kFeatureDim; ++k) {
    s.mean[k] /= count;
    const double var = sq[k] / count - s.mean[k] * s.mean[k];
    s.inv_std[k] = var > 1e-12 ? 1.0 / std::sqrt(var) : 1.0;
  }
  return s;
}

void FeatureScaler::apply(std::vector<double>& feats) const {
  for (std::size_t i = 0; i + kFeatureDim <= feats.size(); i += kFeatureDim)
    for (std::size_t k = 0; k < kFeatureDim; ++k) feats[i + k] = (feats[i + k] - mean[k]) * inv_std[k];
}

std::vector<PreparedScene> prepare_scenes(std::span<const SynthScene> scenes, const FeatureScaler& scaler,
                                          double ignore_margin) {
  std::vector<PreparedScene> out;
  out.reserve(scenes.size());
  for (const SynthScene& s : scenes) {
    PreparedScene p;
    p.cloud = s.cloud;
    p.boxes = s.boxes;
    p.features = point_features(s.cloud);
    scaler.apply(p.features);
    p.labels = label_points(s.cloud, s.boxes, ignore_margin);
    const auto owner = point_gt_index(s.cloud, s.boxes);
    for (std::size_t i = 0; i < s.cloud.size(); ++i) {
      if (p.labels[i] != PointLabel::Foreground) continue;
      p.fg_rows.push_back(i);
      p.fg_gt.push_back(s.boxes[static_cast<std::size_t>(owner[i])]);
    }
    out.push_back(std::move(p));
  }
  return out;
}

SceneLoss scene_loss(const TinyNet& net, const PreparedScene& scene, LossKind kind, const TrainConfig& cfg,
                     std::span<double> grad) {
  const TinyNet::Activations act = net.forward(scene.features);
  const std::size_t n = act.n;
  const bool want_grad = !grad.empty();
  SceneLoss loss;

  std::vector<double> d_seg(n, 0.0);
  const double norm = 1.0 / static_cast<double>(std::max<std::size_t>(1, scene.fg_rows.size()));
  std::vector<double> terms;
  terms.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (scene.labels[i] == PointLabel::Ignored) continue;
    const double p = sigmoid(act.seg[i]);
    const LossValueGrad fl = focal_loss(p, scene.labels[i] == PointLabel::Foreground, cfg.focal);
    terms.push_back(fl.value);
    d_seg[i] = cfg.seg_weight * norm * fl.grad[0] * p * (1.0 - p);
  }
  loss.seg = cfg.seg_weight * norm * pairwise_sum(terms);

  std::vector<double> d_reg;
  if (!scene.fg_rows.empty()) {
    const std::vector<double> preds = net.regress(act, scene.fg_rows);
    std::vector<Point3> pts;
    pts.reserve(scene.fg_rows.size());
    for (std::size_t i : scene.fg_rows) pts.push_back(scene.cloud.points[i]);
    LossValueGrad reg = variant_loss(kind, preds, pts, scene.fg_gt, cfg.mean_size, cfg.hp);
    loss.reg = reg.value;
    d_reg = std::move(reg.grad);
  }
  if (want_grad) net.backward(scene.features, act, d_seg, scene.fg_rows, d_reg, grad);
  return loss;
}

namespace {

bool sanitize(Box3D& b) {
  if (!std::isfinite(b.x) || !std::isfinite(b.y) || !std::isfinite(b.z) || !std::isfinite(b.theta)) return false;
  auto clamp_size = [](double v) { return std::isfinite(v) ? std::clamp(v, 0.05, 20.0) : 20.0; };
  b.h = clamp_size(b.h);
  b.w = clamp_size(b.w);
  b.l = clamp_size(b.l);
  b.theta = wrap_angle(b.theta);
  return true;
}

}  // namespace

std::vector<ScoredBox> predict_proposals(const TinyNet& net, const PreparedScene& scene, LossKind kind,
                                         const TrainConfig& cfg) {
  const TinyNet::Activations act = net.forward(scene.features);
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < act.n; ++i)
    if (sigmoid(act.seg[i]) > cfg.seg_threshold) rows.push_back(i);
  const std::vector<double> preds = net.regress(act, rows);
  const std::size_t width = net.reg_dim();
  std::vector<ScoredBox> boxes;
  boxes.reserve(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    Box3D b = decode_prediction(kind, std::span<const double>(preds).subspan(k * width, width),
                                scene.cloud.points[rows[k]], cfg.mean_size, cfg.hp);
    if (!sanitize(b)) continue;
    boxes.push_back({b, sigmoid(act.seg[rows[k]])});
  }
  return oriented_nms(boxes, cfg.nms.iou, cfg.nms.top);
}

namespace {

EpochMetrics evaluate(const TinyNet& net, std::span<const PreparedScene> eval, LossKind kind, const TrainConfig& cfg) {
  std::vector<std::vector<ScoredBox>> props;
  std::vector<std::vector<Box3D>> gts;
  props.reserve(eval.size());
  for (const PreparedScene& s : eval) {
    props.push_back(predict_proposals(net, s, kind, cfg));
    gts.push_back(s.boxes);
  }
  EpochMetrics m;
  m.recall50 = proposal_recall(props, gts, cfg.rois, 0.5);
  m.recall70 = proposal_recall(props, gts, cfg.rois, 0.7);
  return m;
}

}  // namespace

std::vector<EpochMetrics> train_variant(LossKind kind, std::span<const PreparedScene> train,
                                        std::span<const PreparedScene> eval, const TrainConfig& cfg,
                                        const std::function<void(const EpochMetrics&)>& on_epoch) {
  if (eval.empty()) eval = train;
  TinyNet net(kFeatureDim, cfg.hidden, prediction_width(kind, cfg.hp), cfg.seed);
  std::vector<EpochMetrics> curve;
  curve.push_back(evaluate(net, eval, kind, cfg));
  if (on_epoch) on_epoch(curve.back());

  std::vector<double> grad(net.num_params());
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::mt19937_64 shuffle_rng(cfg.seed * 1000003ULL + epoch);
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    std::vector<double> losses;
    losses.reserve(train.size());
    for (std::size_t idx : order) {
      std::fill(grad.begin(), grad.end(), 0.0);
      const SceneLoss l = scene_loss(net, train[idx], kind, cfg, grad);
      if (!std::isfinite(l.total()))
        throw DivergenceError(epoch, std::string("training diverged (non-finite loss) in epoch ") +
                                         std::to_string(epoch) + " for variant " + to_string(kind));
      losses.push_back(l.total());
      auto params = net.params();
      for (std::size_t k = 0; k < params.size(); ++k) params[k] -= cfg.lr * grad[k];
    }
    EpochMetrics m = evaluate(net, eval, kind, cfg);
    m.epoch = epoch;
    m.train_loss = losses.empty() ? 0.0 : pairwise_sum(losses) / static_cast<double>(losses.size());
    curve.push_back(m);
    if (on_epoch) on_epoch(curve.back());
  }
  return curve;
}

std::size_t epochs_to_fraction(std::span<const EpochMetrics> curve, double fraction) {
  if (curve.empty()) return 0;
  const double target = fraction * curve.back().recall50.recall;
  for (const EpochMetrics& m : curve)
    if (m.recall50.recall >= target) return m.epoch;
  return curve.back().epoch;
}

void write_curve_csv(std::ostream& out, LossKind kind, std::span<const EpochMetrics> curve, bool header) {
  if (header) out << "variant,epoch,train_loss,recall_50,recall_70\n";
  char buf[160];
  for (const EpochMetrics& m : curve) {
    std::snprintf(buf, sizeof(buf), "%s,%zu,%.6f,%.6f,%.6f\n", to_string(kind), m.epoch, m.train_loss,
                  m.recall50.recall, m.recall70.recall);
    out << buf;
  }
}

// Stage-2 mechanics ------------------------------------------------------------

OracleRefineResult oracle_refinement(std::span<const SynthScene> scenes, const HyperParams& hp,
                                     const ClassMeanSize& mean, std::uint64_t seed) {
  OracleRefineResult res;
  double before = 0.0, after = 0.0;
  std::uint64_t s = seed;
  for (const SynthScene& scene : scenes) {
    for (const Box3D& gt : scene.boxes) {
      const Box3D proposal = jitter_box(gt, 0.3, 0.08, 0.15, ++s);
      const double iou0 = iou_3d(proposal, gt);
      if (iou0 < 0.55) continue;
      if (!pool_region(scene.cloud, {}, {}, proposal, hp, 512, s)) continue;
      const RefineTargets t = encode_refine(proposal, gt, mean, hp);
      const Box3D refined = decode_refine(proposal, t, mean, hp);
      before += iou0;
      after += iou_3d(refined, gt);
      ++res.proposals;
    }
  }
  if (res.proposals > 0) {
    res.mean_iou_before = before / static_cast<double>(res.proposals);
    res.mean_iou_after = after / static_cast<double>(res.proposals);
  }
  return res;
}

std::vector<ContextStudyRow> context_width_study(std::span<const SynthScene> scenes, std::span<const double> etas,
                                                 const HyperParams& hp, std::uint64_t seed) {
  std::vector<ContextStudyRow> rows;
  for (double eta : etas) {
    HyperParams h = hp;
    h.context_eta = eta;
    ContextStudyRow row;
    row.eta = eta;
    double points = 0.0, coverage = 0.0, foreign = 0.0;
    std::uint64_t s = seed;
    for (const SynthScene& scene : scenes) {
      const auto owner = kernels::points_in_boxes_omp(scene.cloud.points, scene.boxes);
      for (std::size_t g = 0; g < scene.boxes.size(); ++g) {
        const Box3D proposal = jitter_box(scene.boxes[g], 0.3, 0.08, 0.15, ++s);
        ++row.regions;
        const auto members = region_members(scene.cloud.points, proposal, h.context_eta);
        if (members.empty()) {
          ++row.empty_regions;
          continue;
        }
        std::size_t own = 0, other = 0, own_total = 0;
        for (std::size_t i : members) {
          if (owner[i] == static_cast<int>(g)) ++own;
          else if (owner[i] >= 0) ++other;
        }
        for (int o : owner) own_total += (o == static_cast<int>(g));
        points += static_cast<double>(members.size());
        coverage += own_total ? static_cast<double>(own) / static_cast<double>(own_total) : 0.0;
        foreign += static_cast<double>(other) / static_cast<double>(members.size());
      }
    }
    const double nonempty = static_cast<double>(row.regions - row.empty_regions);
    if (nonempty > 0) {
      row.mean_points = points / nonempty;
      row.own_coverage = coverage / nonempty;
      row.foreign_fraction = foreign / nonempty;
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace ptdet::synth
