// Copyright 2026 The ptdet Authors
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>

#include "ptdet/codec.hpp"
#include "ptdet/eval.hpp"
#include "ptdet/iou.hpp"
#include "ptdet/kitti.hpp"
#include "ptdet/synth.hpp"

namespace ptdet::cli {

namespace fs = std::filesystem;

// codec-check ----------------------------------------------------------------

bool CodecCheckReport::ok() const {
  return std::all_of(codecs.begin(), codecs.end(), [](const CodecStats& s) { return s.failures == 0; });
}

namespace {

double box_error(const Box3D& a, const Box3D& b) {
  const double e[] = {a.x - b.x, a.y - b.y, a.z - b.z, a.h - b.h, a.w - b.w, a.l - b.l, wrap_angle(a.theta - b.theta)};
  double m = 0.0;
  for (double v : e) m = std::max(m, std::abs(v));
  return m;
}

struct CaseGen {
  std::mt19937_64 rng;
  double u(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
  Box3D sizes(Box3D b) {
    b.h = u(1.0, 2.5);
    b.w = u(1.0, 2.5);
    b.l = u(2.0, 6.0);
    return b;
  }
};

}  // namespace

CodecCheckReport codec_check(std::size_t cases, std::uint64_t seed, const RunConfig& cfg, bool inject_out_of_range,
                             double tolerance) {
  CodecCheckReport rep;
  for (const char* name : {"stage1", "refine", "RB", "RCB", "PBB"}) rep.codecs.push_back({name});
  const HyperParams& hp = cfg.hp;
  const double s1 = hp.search_range * (1.0 - 1e-6);
  const double s2 = hp.refine_search_range * (1.0 - 1e-6);
  const double dt = kPi / 4.0 * (1.0 - 1e-6);
  CaseGen g{std::mt19937_64(seed)};

  auto record = [&](std::size_t codec, std::size_t index, auto&& roundtrip) {
    CodecStats& st = rep.codecs[codec];
    ++st.cases;
    try {
      const double err = roundtrip();
      st.max_error = std::max(st.max_error, err);
      if (!(err < tolerance)) {
        ++st.failures;
        rep.messages.push_back(st.name + " case " + std::to_string(index) + ": roundtrip error " +
                               std::to_string(err));
      }
    } catch (const std::exception& e) {
      ++st.failures;
      rep.messages.push_back(st.name + " case " + std::to_string(index) + ": " + e.what());
    }
  };

  for (std::size_t i = 0; i < cases; ++i) {
    const Point3 p{g.u(-40, 40), g.u(-3, 1), g.u(0, 70)};
    Box3D gt = g.sizes({});
    gt.x = p.x + g.u(-s1, s1);
    gt.y = p.y + g.u(-2, 2);
    gt.z = p.z + g.u(-s1, s1);
    gt.theta = g.u(-kPi, kPi);

    record(0, i, [&] { return box_error(decode_stage1(p, encode_stage1(p, gt, cfg.mean_size, hp), cfg.mean_size, hp), gt); });
    std::size_t slot = 2;
    for (LossKind k : {LossKind::RB, LossKind::RCB, LossKind::PBB}) {
      record(slot++, i, [&] {
        return box_error(decode_variant(p, encode_variant(k, p, gt, cfg.mean_size, hp), cfg.mean_size, hp), gt);
      });
    }

    Box3D prop = g.sizes({});
    prop.x = g.u(-40, 40);
    prop.y = g.u(-2, 2);
    prop.z = g.u(0, 70);
    prop.theta = g.u(-kPi, kPi);
    Box3D rgt = g.sizes({});
    const Point3 c = canonical_inverse({g.u(-s2, s2), g.u(-1, 1), g.u(-s2, s2)}, CanonicalFrame::of(prop));
    rgt.x = c.x;
    rgt.y = c.y;
    rgt.z = c.z;
    rgt.theta = wrap_angle(prop.theta + g.u(-dt, dt));
    record(1, i, [&] {
      return box_error(decode_refine(prop, encode_refine(prop, rgt, cfg.mean_size, hp), cfg.mean_size, hp), rgt);
    });
  }

  if (inject_out_of_range) {
    const Point3 p{0.0, 0.0, 20.0};
    Box3D gt = g.sizes({});
    gt.x = p.x + 1.5 * hp.search_range;
    gt.z = p.z;
    record(0, cases, [&] { return box_error(decode_stage1(p, encode_stage1(p, gt, cfg.mean_size, hp), cfg.mean_size, hp), gt); });
  }
  return rep;
}

void write_codec_report(std::ostream& out, const CodecCheckReport& rep) {
  char buf[160];
  for (const std::string& m : rep.messages) out << "FAIL " << m << '\n';
  out << "codec,cases,failures,max_abs_error\n";
  for (const CodecStats& s : rep.codecs) {
    std::snprintf(buf, sizeof(buf), "%s,%zu,%zu,%.3e\n", s.name.c_str(), s.cases, s.failures, s.max_error);
    out << buf;
  }
  out << (rep.ok() ? "codec-check: OK\n" : "codec-check: FAILED\n");
}

// kitti-pool dump ------------------------------------------------------------

void write_pooled(std::ostream& out, const Box3D& b, const std::optional<PooledRegion>& region) {
  char buf[512];
  out << "ptdet-pooled-region 1\n";
  std::snprintf(buf, sizeof(buf), "proposal %.17g %.17g %.17g %.17g %.17g %.17g %.17g\n", b.x, b.y, b.z, b.h, b.w,
                b.l, b.theta);
  out << buf;
  if (!region) {
    out << "EMPTY\n";
    return;
  }
  out << "points " << region->points.size() << '\n';
  for (const PooledPoint& p : region->points) {
    std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g %.17g %d %.17g\n", p.local_xyz.x, p.local_xyz.y,
                  p.local_xyz.z, p.intensity, p.seg_mask, p.sensor_dist);
    out << buf;
  }
}

PooledDump read_pooled(std::istream& in) {
  auto fail = [](const std::string& what) { return std::runtime_error("pooled dump: " + what); };
  std::string tag;
  int version = 0;
  if (!(in >> tag >> version) || tag != "ptdet-pooled-region" || version != 1) throw fail("bad header");
  PooledDump d;
  Box3D& b = d.proposal;
  if (!(in >> tag >> b.x >> b.y >> b.z >> b.h >> b.w >> b.l >> b.theta) || tag != "proposal")
    throw fail("bad proposal line");
  if (!(in >> tag)) throw fail("missing points block");
  if (tag == "EMPTY") return d;
  std::size_t n = 0;
  if (tag != "points" || !(in >> n)) throw fail("bad points line");
  d.empty = false;
  d.points.resize(n);
  for (PooledPoint& p : d.points)
    if (!(in >> p.local_xyz.x >> p.local_xyz.y >> p.local_xyz.z >> p.intensity >> p.seg_mask >> p.sensor_dist))
      throw fail("truncated point list");
  return d;
}

// Commands -------------------------------------------------------------------

namespace {

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');)
    if (!item.empty()) out.push_back(item);
  return out;
}

// Scored boxes of a KITTI detection file; rows without a score are an error.
std::vector<ScoredBox> read_scored(const fs::path& path, const std::string& cls,
                                   std::vector<kitti::KittiObject>* rows = nullptr) {
  std::vector<ScoredBox> out;
  const kitti::Calib calib;
  for (const kitti::KittiObject& o : kitti::read_labels(path)) {
    if (o.is_dont_care() || (!cls.empty() && o.class_name != cls)) continue;
    if (!o.score) throw kitti::FormatError(path.string() + ": detection row without score");
    out.push_back({kitti::label_to_box(o, calib), *o.score});
    if (rows) rows->push_back(o);
  }
  return out;
}

struct NmsArgs {
  std::string input, output;
  std::optional<double> iou;
  std::optional<std::size_t> top;
  std::string cls;
  int precision = 6;
};

int cmd_nms(const NmsArgs& a, const RunConfig& cfg, std::ostream& out) {
  std::vector<kitti::KittiObject> rows;
  const auto dets = read_scored(a.input, a.cls, &rows);
  const double thr = a.iou.value_or(cfg.nms_infer.iou);
  const std::size_t top = a.top.value_or(cfg.nms_infer.top);
  const auto keep = oriented_nms_indices(dets, thr, top);
  std::vector<kitti::KittiObject> kept;
  for (std::size_t i : keep) kept.push_back(rows[i]);
  if (a.output.empty() || a.output == "-") kitti::write_detections(out, kept, a.precision);
  else kitti::write_detections(fs::path(a.output), kept, a.precision);
  return 0;
}

struct RecallArgs {
  std::string proposals, gt, csv;
  std::string rois = "10,50,100,300";
  std::string iou = "0.5,0.7";
  std::string cls = "Car";
  std::string difficulty;
};

int cmd_eval_recall(const RecallArgs& a, std::ostream& out) {
  std::vector<std::size_t> rois;
  for (const std::string& s : split_list(a.rois)) rois.push_back(std::stoul(s));
  std::vector<double> thrs;
  for (const std::string& s : split_list(a.iou)) thrs.push_back(std::stod(s));
  std::optional<Difficulty> diff;
  if (a.difficulty == "easy") diff = Difficulty::Easy;
  else if (a.difficulty == "moderate") diff = Difficulty::Moderate;
  else if (a.difficulty == "hard") diff = Difficulty::Hard;
  else if (!a.difficulty.empty()) throw std::invalid_argument("unknown difficulty '" + a.difficulty + "'");

  std::vector<fs::path> frames;
  for (const auto& e : fs::directory_iterator(a.gt))
    if (e.is_regular_file() && e.path().extension() == ".txt") frames.push_back(e.path().filename());
  std::sort(frames.begin(), frames.end());

  const kitti::Calib calib;
  std::vector<std::vector<ScoredBox>> props;
  std::vector<std::vector<Box3D>> gts;
  for (const fs::path& name : frames) {
    std::vector<Box3D> g;
    for (const kitti::KittiObject& o : kitti::read_labels(fs::path(a.gt) / name)) {
      if (o.is_dont_care() || (!a.cls.empty() && o.class_name != a.cls)) continue;
      if (diff && !passes_difficulty(o, *diff)) continue;
      g.push_back(kitti::label_to_box(o, calib));
    }
    gts.push_back(std::move(g));
    const fs::path p = fs::path(a.proposals) / name;
    props.push_back(fs::exists(p) ? read_scored(p, a.cls) : std::vector<ScoredBox>{});
  }

  std::vector<RecallReport> reps;
  for (std::size_t r : rois)
    for (double t : thrs) reps.push_back(proposal_recall(props, gts, r, t));
  write_recall_table(out, reps);
  if (!a.csv.empty()) {
    std::ofstream f(a.csv);
    if (!f) throw std::runtime_error("cannot write " + a.csv);
    write_recall_csv(f, reps);
  }
  return 0;
}

struct AblationArgs {
  std::string variants = "RB,RCB,CN,PBB,BB";
  std::size_t epochs = 15;
  std::size_t scenes = 200;
  double eval_fraction = 0.2;
  double lr = 0.02;
  std::size_t hidden = 64;
  std::string out_dir;
};

int cmd_synth_ablation(const AblationArgs& a, const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  std::vector<LossKind> kinds;
  for (const std::string& s : split_list(a.variants)) kinds.push_back(parse_loss_kind(s));
  if (a.scenes < 2) throw std::invalid_argument("--scenes must be at least 2");

  synth::SynthSceneConfig sc;
  sc.mean_size = cfg.mean_size;
  sc.seed = cfg.seed;
  const auto scenes = synth::generate_scenes(sc, a.scenes);
  std::size_t n_eval = static_cast<std::size_t>(std::lround(a.eval_fraction * static_cast<double>(a.scenes)));
  n_eval = std::clamp<std::size_t>(n_eval, 1, a.scenes - 1);
  const std::span<const synth::SynthScene> all(scenes);
  const auto train_raw = all.first(a.scenes - n_eval);
  std::vector<std::vector<double>> raw;
  for (const auto& s : train_raw) raw.push_back(synth::point_features(s.cloud));
  const auto scaler = synth::FeatureScaler::fit(raw);
  const auto train = synth::prepare_scenes(train_raw, scaler, cfg.ignore_margin);
  const auto eval = synth::prepare_scenes(all.subspan(a.scenes - n_eval), scaler, cfg.ignore_margin);

  synth::TrainConfig tc;
  tc.epochs = a.epochs;
  tc.lr = a.lr;
  tc.hidden = a.hidden;
  tc.seg_weight = cfg.seg_weight;
  tc.focal = cfg.focal;
  tc.hp = cfg.hp;
  tc.mean_size = cfg.mean_size;
  tc.nms = cfg.nms_infer;
  tc.seed = cfg.seed;

  // Variants train independently; results are collected per slot so the
  // output order does not depend on scheduling.
  std::vector<std::vector<synth::EpochMetrics>> curves(kinds.size());
  std::vector<std::string> errors(kinds.size());
  const auto nk = static_cast<std::ptrdiff_t>(kinds.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t k = 0; k < nk; ++k) {
    try {
      curves[k] = synth::train_variant(kinds[k], train, eval, tc);
    } catch (const std::exception& e) {
      errors[k] = e.what();
    }
  }

  int status = 0;
  for (std::size_t k = 0; k < kinds.size(); ++k) {
    if (!errors[k].empty()) {
      err << to_string(kinds[k]) << ": " << errors[k] << '\n';
      status = 1;
    }
  }

  std::ostringstream csv;
  for (std::size_t k = 0; k < kinds.size(); ++k) synth::write_curve_csv(csv, kinds[k], curves[k], k == 0);

  std::ostringstream summary;
  summary << "variant,final_recall_50,final_recall_70,epochs_to_90pct\n";
  char buf[160];
  for (std::size_t k = 0; k < kinds.size(); ++k) {
    if (curves[k].empty()) continue;
    const auto& last = curves[k].back();
    std::snprintf(buf, sizeof(buf), "%s,%.6f,%.6f,%zu\n", to_string(kinds[k]), last.recall50.recall,
                  last.recall70.recall, synth::epochs_to_fraction(curves[k], 0.9));
    summary << buf;
  }

  if (!a.out_dir.empty()) {
    fs::create_directories(a.out_dir);
    std::ofstream(fs::path(a.out_dir) / "curves.csv") << csv.str();
    std::ofstream(fs::path(a.out_dir) / "summary.csv") << summary.str();
    for (std::size_t k = 0; k < kinds.size(); ++k) {
      std::vector<RecallReport> reps;
      for (const auto& m : curves[k]) {
        reps.push_back(m.recall50);
        reps.push_back(m.recall70);
      }
      std::ofstream f(fs::path(a.out_dir) / (std::string("recall_") + to_string(kinds[k]) + ".csv"));
      write_recall_csv(f, reps);
    }
  }
  out << summary.str();
  return status;
}

struct PoolArgs {
  std::string velodyne, labels, calib, output;
  std::size_t proposal = 0;
  std::optional<std::size_t> samples;
  std::optional<double> eta;
};

int cmd_kitti_pool(const PoolArgs& a, const RunConfig& cfg, std::ostream& out) {
  const kitti::Calib calib = kitti::read_calib(a.calib);
  const PointCloud cloud = kitti::velodyne_cloud_to_internal(kitti::read_velodyne(a.velodyne), calib);
  const auto boxes = kitti::labels_to_boxes(kitti::read_labels(a.labels), calib);
  if (a.proposal >= boxes.size())
    throw std::out_of_range("proposal index " + std::to_string(a.proposal) + " out of range (" +
                            std::to_string(boxes.size()) + " objects)");
  HyperParams hp = cfg.hp;
  if (a.eta) hp.context_eta = *a.eta;
  std::vector<std::uint8_t> mask(cloud.size(), 0);
  const auto owner = point_gt_index(cloud, boxes);
  for (std::size_t i = 0; i < cloud.size(); ++i) mask[i] = owner[i] >= 0;
  const Box3D& prop = boxes[a.proposal];
  const auto region = pool_region(cloud, mask, {}, prop, hp, a.samples.value_or(cfg.pooled_samples), cfg.seed);
  if (a.output.empty() || a.output == "-") {
    write_pooled(out, prop, region);
  } else {
    std::ofstream f(a.output);
    if (!f) throw std::runtime_error("cannot write " + a.output);
    write_pooled(f, prop, region);
  }
  return 0;
}

struct ContextArgs {
  std::size_t scenes = 50;
  std::string etas = "0,0.5,1,1.5,2";
};

int cmd_context_study(const ContextArgs& a, const RunConfig& cfg, std::ostream& out) {
  synth::SynthSceneConfig sc;
  sc.mean_size = cfg.mean_size;
  sc.seed = cfg.seed;
  const auto scenes = synth::generate_scenes(sc, a.scenes);
  std::vector<double> etas;
  for (const std::string& s : split_list(a.etas)) etas.push_back(std::stod(s));
  const auto rows = synth::context_width_study(scenes, etas, cfg.hp, cfg.seed);
  out << "eta,regions,empty_regions,mean_points,own_coverage,foreign_fraction\n";
  char buf[200];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%.3f,%zu,%zu,%.3f,%.6f,%.6f\n", r.eta, r.regions, r.empty_regions,
                  r.mean_points, r.own_coverage, r.foreign_fraction);
    out << buf;
  }
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"ptdet: two-stage point cloud 3D detection toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path;
  std::optional<std::uint64_t> seed;
  app.add_option("--config", config_path, "key = value config file (default: $PTDET_CONFIG)");
  app.add_option("--seed", seed, "Random seed (overrides the config)");

  std::size_t cases = 1000;
  bool inject = false;
  auto* codec = app.add_subcommand("codec-check", "Encode/decode roundtrips of every box codec");
  codec->add_option("--cases", cases, "Random cases per codec")->capture_default_str();
  codec->add_flag("--inject-out-of-range", inject, "Add one out-of-window case (must be reported)");

  NmsArgs nms;
  auto* nms_cmd = app.add_subcommand("nms", "Oriented NMS over a KITTI-format detection file");
  nms_cmd->add_option("--input", nms.input, "Detections with scores (KITTI label format)")
      ->required()
      ->check(CLI::ExistingFile);
  nms_cmd->add_option("--iou", nms.iou, "BEV IoU threshold (default: nms_infer_iou)");
  nms_cmd->add_option("--top", nms.top, "Maximum boxes kept (default: nms_infer_top)");
  nms_cmd->add_option("--output", nms.output, "Output file ('-' or omitted: stdout)");
  nms_cmd->add_option("--class", nms.cls, "Only this class (default: all)");
  nms_cmd->add_option("--precision", nms.precision, "Decimals in the output")->capture_default_str();

  RecallArgs rec;
  auto* rec_cmd = app.add_subcommand("eval-recall", "Proposal recall table over a directory of frames");
  rec_cmd->add_option("--proposals", rec.proposals, "Directory of scored proposals, one .txt per frame")
      ->required()
      ->check(CLI::ExistingDirectory);
  rec_cmd->add_option("--gt", rec.gt, "Directory of ground-truth labels")->required()->check(CLI::ExistingDirectory);
  rec_cmd->add_option("--rois", rec.rois, "Comma-separated RoI counts")->capture_default_str();
  rec_cmd->add_option("--iou", rec.iou, "Comma-separated 3D IoU thresholds")->capture_default_str();
  rec_cmd->add_option("--class", rec.cls, "Object class ('' for all)")->capture_default_str();
  rec_cmd->add_option("--difficulty", rec.difficulty, "Ground-truth filter: easy, moderate or hard");
  rec_cmd->add_option("--csv", rec.csv, "Also write the table as CSV");

  AblationArgs abl;
  auto* abl_cmd = app.add_subcommand("synth-ablation", "Train every regression-loss variant on synthetic scenes");
  abl_cmd->add_option("--variants", abl.variants, "Comma-separated subset of RB,RCB,CN,PBB,BB")->capture_default_str();
  abl_cmd->add_option("--epochs", abl.epochs)->capture_default_str();
  abl_cmd->add_option("--scenes", abl.scenes, "Scenes generated (train + eval)")->capture_default_str();
  abl_cmd->add_option("--eval-fraction", abl.eval_fraction, "Share of scenes held out for recall")
      ->capture_default_str();
  abl_cmd->add_option("--lr", abl.lr, "Learning rate")->capture_default_str();
  abl_cmd->add_option("--hidden", abl.hidden, "Hidden layer width")->capture_default_str();
  abl_cmd->add_option("--out-dir", abl.out_dir, "Directory for curves.csv, summary.csv and recall tables");

  PoolArgs pool;
  auto* pool_cmd = app.add_subcommand("kitti-pool", "Dump the pooled region of one labeled object");
  pool_cmd->add_option("--velodyne", pool.velodyne)->required()->check(CLI::ExistingFile);
  pool_cmd->add_option("--labels", pool.labels)->required()->check(CLI::ExistingFile);
  pool_cmd->add_option("--calib", pool.calib)->required()->check(CLI::ExistingFile);
  pool_cmd->add_option("--proposal", pool.proposal, "Index among the non-DontCare objects")->required();
  pool_cmd->add_option("--samples", pool.samples, "Pooled points (default: pooled_samples)");
  pool_cmd->add_option("--eta", pool.eta, "Context enlargement in meters (default: context_eta)");
  pool_cmd->add_option("--output", pool.output, "Output file ('-' or omitted: stdout)");

  ContextArgs ctx;
  auto* ctx_cmd = app.add_subcommand("context-study", "What enlarged proposals capture at several context widths");
  ctx_cmd->add_option("--scenes", ctx.scenes)->capture_default_str();
  ctx_cmd->add_option("--etas", ctx.etas, "Comma-separated enlargements (m)")->capture_default_str();

  auto* cfg_cmd = app.add_subcommand("config", "Print the effective configuration");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    RunConfig cfg = default_config();
    if (!config_path.empty()) apply_config_file(config_path, cfg);
    if (seed) cfg.seed = *seed;

    if (*codec) {
      const CodecCheckReport rep = codec_check(cases, cfg.seed, cfg, inject);
      write_codec_report(out, rep);
      return rep.ok() ? 0 : 1;
    }
    if (*nms_cmd) return cmd_nms(nms, cfg, out);
    if (*rec_cmd) return cmd_eval_recall(rec, out);
    if (*abl_cmd) return cmd_synth_ablation(abl, cfg, out, err);
    if (*pool_cmd) return cmd_kitti_pool(pool, cfg, out);
    if (*ctx_cmd) return cmd_context_study(ctx, cfg, out);
    if (*cfg_cmd) {
      write_config(out, cfg);
      return 0;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace ptdet::cli
