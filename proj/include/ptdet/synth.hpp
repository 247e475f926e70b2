// Copyright 2026 The ptdet Authors
// SPDX-License-Identifier: Apache-2.0
//
// Desk-scale synthetic scenes and a tiny hand-differentiated network used to
// compare the stage-1 box regression losses end to end:
//   encode targets -> train -> decode per-point boxes -> NMS -> recall.
//
// The network is a stand-in for a learned point backbone. Its per-point
// inputs are hand-crafted neighborhood statistics (see point_features).

#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "ptdet/assign.hpp"
#include "ptdet/codec.hpp"
#include "ptdet/config.hpp"
#include "ptdet/eval.hpp"
#include "ptdet/losses.hpp"

namespace ptdet::synth {

struct SynthSceneConfig {
  std::size_t min_objects = 3;
  std::size_t max_objects = 8;
  ClassMeanSize mean_size;
  double size_sigma_h = 0.08;
  double size_sigma_w = 0.08;
  double size_sigma_l = 0.2;
  std::size_t min_object_points = 40;
  std::size_t max_object_points = 100;
  std::size_t background_points = 300;
  std::size_t clutter_clusters = 6;  // small background blobs (poles, bushes)
  std::size_t clutter_points = 15;   // points per blob
  double noise_sigma = 0.02;
  double x_range = 20.0;             // centers in [-x_range, x_range]
  double z_min = 4.0, z_max = 40.0;
  std::size_t placement_retries = 100;
  std::uint64_t seed = 0;
};

struct SynthScene {
  PointCloud cloud;
  std::vector<Box3D> boxes;
  /// Interior points generated for each box (before noise).
  std::vector<std::size_t> object_points;
  /// Set when fewer objects than requested could be placed.
  bool placement_shortfall = false;
};

/// Non-overlapping (BEV IoU 0) boxes resting on the ground plane y = 0,
/// each filled with uniformly sampled interior points, plus ground points
/// and clutter blobs. Deterministic in cfg.seed.
SynthScene generate_scene(const SynthSceneConfig& cfg);

/// n scenes with seeds cfg.seed, cfg.seed + 1, ...
std::vector<SynthScene> generate_scenes(const SynthSceneConfig& cfg, std::size_t n);

/// Per-point features: for each radius in {0.8, 1.6, 3.0} m, the log
/// neighbor count, the mean neighbor offset / radius (3 values) and the
/// ground-plane offset covariance / radius^2 (xx, xz, zz, yy) with its
/// normalized anisotropy (2 values); then the point height. 31 values.
inline constexpr std::size_t kFeatureDim = 31;
std::vector<double> point_features(const PointCloud& cloud);

// Network --------------------------------------------------------------------

/// Two tanh hidden layers with a segmentation logit head and a regression
/// head. All parameters live in one flat vector:
///   W1 (H x D), b1 (H), W2 (H x H), b2 (H), ws (H), bs (1), Wr (R x H), br (R)
class TinyNet {
 public:
  TinyNet(std::size_t in_dim, std::size_t hidden, std::size_t reg_dim, std::uint64_t seed);

  std::size_t in_dim() const { return in_; }
  std::size_t hidden() const { return hid_; }
  std::size_t reg_dim() const { return reg_; }
  std::size_t num_params() const { return params_.size(); }
  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }

  /// Cached activations of one forward pass over n rows.
  struct Activations {
    std::size_t n = 0;
    std::vector<double> h1, h2;  // n x H each
    std::vector<double> seg;     // n
  };

  /// Trunk and segmentation head for all rows of x (n x D, row-major).
  Activations forward(std::span<const double> x) const;
  /// Regression head outputs for the given rows (|rows| x R).
  std::vector<double> regress(const Activations& act, std::span<const std::size_t> rows) const;

  /// Backpropagates d loss / d seg (n) and d loss / d reg (|rows| x R),
  /// accumulating into grad (num_params()).
  void backward(std::span<const double> x, const Activations& act, std::span<const double> d_seg,
                std::span<const std::size_t> rows, std::span<const double> d_reg, std::span<double> grad) const;

 private:
  std::size_t in_, hid_, reg_;
  std::vector<double> params_;
  std::size_t o_w1_, o_b1_, o_w2_, o_b2_, o_ws_, o_bs_, o_wr_, o_br_;
};

// Training -------------------------------------------------------------------

/// A scene prepared for training: standardized features, point labels and
/// the gt box of every foreground point.
struct PreparedScene {
  PointCloud cloud;
  std::vector<Box3D> boxes;
  std::vector<double> features;  // n x kFeatureDim, standardized
  std::vector<PointLabel> labels;
  std::vector<std::size_t> fg_rows;
  std::vector<Box3D> fg_gt;  // aligned with fg_rows
};

struct FeatureScaler {
  std::vector<double> mean, inv_std;
  static FeatureScaler fit(std::span<const std::vector<double>> raw_features);
  void apply(std::vector<double>& feats) const;
};

std::vector<PreparedScene> prepare_scenes(std::span<const SynthScene> scenes, const FeatureScaler& scaler,
                                          double ignore_margin);

struct TrainConfig {
  std::size_t epochs = 20;
  double lr = 0.02;
  std::size_t hidden = 64;
  double seg_weight = 1.0;
  FocalParams focal;
  HyperParams hp;
  ClassMeanSize mean_size;
  NmsSetting nms{0.8, 100};
  std::size_t rois = 100;
  double seg_threshold = 0.5;
  std::uint64_t seed = 0;
};

struct SceneLoss {
  double seg = 0.0;
  double reg = 0.0;
  double total() const { return seg + reg; }
};

/// Loss of the network on one scene; when grad is non-empty the gradient
/// w.r.t. all parameters is accumulated into it. Segmentation uses the focal
/// loss averaged over non-ignored points; regression the variant loss over
/// foreground points.
SceneLoss scene_loss(const TinyNet& net, const PreparedScene& scene, LossKind kind, const TrainConfig& cfg,
                     std::span<double> grad);

/// Runs the network on a scene and returns the NMS-filtered proposals.
std::vector<ScoredBox> predict_proposals(const TinyNet& net, const PreparedScene& scene, LossKind kind,
                                         const TrainConfig& cfg);

struct EpochMetrics {
  std::size_t epoch = 0;  // 0 = before training
  double train_loss = 0.0;
  RecallReport recall50;
  RecallReport recall70;
};

class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(std::size_t epoch, const std::string& what) : std::runtime_error(what), epoch_(epoch) {}
  std::size_t epoch() const { return epoch_; }

 private:
  std::size_t epoch_;
};

/// Trains a fresh TinyNet (initialized from cfg.seed, identically across
/// variants) with plain per-scene gradient descent and evaluates proposal
/// recall on `eval` after every epoch. Entry 0 is the untrained network.
/// Throws DivergenceError on a non-finite loss.
std::vector<EpochMetrics> train_variant(LossKind kind, std::span<const PreparedScene> train,
                                        std::span<const PreparedScene> eval, const TrainConfig& cfg,
                                        const std::function<void(const EpochMetrics&)>& on_epoch = {});

/// First epoch whose recall@0.5 reaches `fraction` of the final epoch's.
std::size_t epochs_to_fraction(std::span<const EpochMetrics> curve, double fraction);

/// CSV header "variant,epoch,train_loss,recall_50,recall_70".
void write_curve_csv(std::ostream& out, LossKind kind, std::span<const EpochMetrics> curve, bool header);

// Stage-2 mechanics ----------------------------------------------------------

struct OracleRefineResult {
  std::size_t proposals = 0;
  double mean_iou_before = 0.0;
  double mean_iou_after = 0.0;
};

/// Jitters every gt into a proposal, keeps those with iou_3d >= 0.55 and a
/// non-empty pooled region, refines them with oracle targets
/// (encode_refine -> decode_refine) and reports mean iou_3d before/after.
OracleRefineResult oracle_refinement(std::span<const SynthScene> scenes, const HyperParams& hp,
                                     const ClassMeanSize& mean, std::uint64_t seed);

struct ContextStudyRow {
  double eta = 0.0;
  std::size_t regions = 0;
  std::size_t empty_regions = 0;
  double mean_points = 0.0;      // pooled points per non-empty region
  double own_coverage = 0.0;     // fraction of the gt object's points pooled
  double foreign_fraction = 0.0; // pooled points belonging to other objects
};

/// Pools jittered gt proposals at each context width and reports what the
/// enlarged regions capture.
std::vector<ContextStudyRow> context_width_study(std::span<const SynthScene> scenes, std::span<const double> etas,
                                                 const HyperParams& hp, std::uint64_t seed);

}  // namespace ptdet::synth
