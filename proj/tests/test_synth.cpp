#include <doctest.h>

#include <cmath>
#include <sstream>

#include "oracles.hpp"
#include "ptdet/iou.hpp"
#include "ptdet/synth.hpp"

using namespace ptdet;
using namespace ptdet::synth;

namespace {

std::vector<PreparedScene> prepared(std::size_t n, std::uint64_t seed) {
  SynthSceneConfig sc;
  sc.seed = seed;
  const auto scenes = generate_scenes(sc, n);
  std::vector<std::vector<double>> raw;
  for (const auto& s : scenes) raw.push_back(point_features(s.cloud));
  return prepare_scenes(scenes, FeatureScaler::fit(raw), 0.2);
}

}  // namespace

TEST_CASE("generate_scene") {
  SynthSceneConfig cfg;
  cfg.seed = 42;
  const SynthScene a = generate_scene(cfg);
  const SynthScene b = generate_scene(cfg);
  CHECK(a.cloud.points == b.cloud.points);
  CHECK(a.boxes == b.boxes);
  cfg.seed = 43;
  CHECK(generate_scene(cfg).cloud.points != a.cloud.points);

  CHECK(a.boxes.size() >= 3);
  CHECK(a.boxes.size() <= 8);
  CHECK(is_valid(a.cloud));
  for (std::size_t i = 0; i < a.boxes.size(); ++i) {
    CHECK(is_valid(a.boxes[i]));
    CHECK(a.boxes[i].y - a.boxes[i].h / 2 == doctest::Approx(0.0));
    for (std::size_t j = i + 1; j < a.boxes.size(); ++j) CHECK(oracle::bev_intersection(a.boxes[i], a.boxes[j]) < 1e-9);
  }

  SUBCASE("interior point counts without noise") {
    SynthSceneConfig quiet;
    quiet.noise_sigma = 0.0;
    quiet.seed = 5;
    const SynthScene s = generate_scene(quiet);
    REQUIRE(s.object_points.size() == s.boxes.size());
    for (std::size_t i = 0; i < s.boxes.size(); ++i) {
      std::size_t inside = 0;
      for (const Point3& p : s.cloud.points) inside += oracle::in_rect({p.x, p.z}, s.boxes[i], 0.0) &&
                                                       std::abs(p.y - s.boxes[i].y) <= s.boxes[i].h / 2;
      CHECK(inside >= s.object_points[i]);
    }
  }
  SUBCASE("no objects") {
    SynthSceneConfig empty;
    empty.min_objects = empty.max_objects = 0;
    const SynthScene s = generate_scene(empty);
    CHECK(s.boxes.empty());
    CHECK(s.cloud.size() >= empty.background_points);
    CHECK_FALSE(s.placement_shortfall);
  }
  SUBCASE("crowded scenes report a shortfall") {
    SynthSceneConfig crowded;
    crowded.min_objects = crowded.max_objects = 200;
    crowded.x_range = 5;
    crowded.z_min = 5;
    crowded.z_max = 10;
    crowded.placement_retries = 20;
    const SynthScene s = generate_scene(crowded);
    CHECK(s.placement_shortfall);
    CHECK(s.boxes.size() < 200);
  }
}

TEST_CASE("point_features") {
  SynthSceneConfig cfg;
  cfg.seed = 1;
  const SynthScene s = generate_scene(cfg);
  const auto f = point_features(s.cloud);
  REQUIRE(f.size() == s.cloud.size() * kFeatureDim);
  for (double v : f) CHECK(std::isfinite(v));
  // A lone point sees only itself.
  PointCloud one;
  one.push_back({0, 2, 0}, 0.5);
  const auto g = point_features(one);
  CHECK(g[0] == doctest::Approx(std::log(2.0)));
  CHECK(g[30] == 2.0);
}

TEST_CASE("network gradients match finite differences") {
  // Two foreground points, hidden width 4.
  PreparedScene s;
  s.cloud.push_back({1.0, 0.5, 10.0}, 0.3);
  s.cloud.push_back({1.5, 0.9, 10.4}, 0.6);
  s.boxes = {{1.2, 0.75, 10.2, 1.5, 1.6, 3.9, 0.3}};
  oracle::Rng r(1);
  for (std::size_t i = 0; i < 2 * kFeatureDim; ++i) s.features.push_back(r.normal());
  s.labels = {PointLabel::Foreground, PointLabel::Foreground};
  s.fg_rows = {0, 1};
  s.fg_gt = {s.boxes[0], s.boxes[0]};

  TrainConfig cfg;
  for (LossKind k : {LossKind::RB, LossKind::RCB, LossKind::CN, LossKind::PBB, LossKind::BB}) {
    CAPTURE(to_string(k));
    TinyNet net(kFeatureDim, 4, prediction_width(k, cfg.hp), 3);
    const std::vector<double> x0(net.params().begin(), net.params().end());
    auto f = [&](const std::vector<double>& x) {
      std::copy(x.begin(), x.end(), net.params().begin());
      LossValueGrad out;
      out.grad.assign(x.size(), 0.0);
      out.value = scene_loss(net, s, k, cfg, out.grad).total();
      return out;
    };
    CHECK(oracle::gradient_error(f, x0, 1e-6) < 1e-4);
  }
}

TEST_CASE("TinyNet initialization is shared across heads") {
  TinyNet a(kFeatureDim, 8, 7, 9), b(kFeatureDim, 8, 76, 9);
  const std::size_t trunk = 8 * kFeatureDim + 8 + 8 * 8 + 8 + 8 + 1;
  for (std::size_t i = 0; i < trunk; ++i) CHECK(a.params()[i] == b.params()[i]);
}

TEST_CASE("training") {
  const auto scenes = prepared(4, 10);
  const std::span<const PreparedScene> train(scenes.data(), 3), eval(scenes.data() + 3, 1);
  TrainConfig cfg;
  cfg.hidden = 16;
  cfg.epochs = 3;

  SUBCASE("zero learning rate gives a flat curve") {
    cfg.lr = 0.0;
    const auto c = train_variant(LossKind::BB, train, eval, cfg);
    REQUIRE(c.size() == 4);
    for (const auto& m : c) {
      CHECK(m.recall50.recall == c[0].recall50.recall);
      CHECK(m.recall70.recall == c[0].recall70.recall);
    }
    CHECK(c[1].train_loss == c[3].train_loss);
  }
  SUBCASE("runs are reproducible") {
    const auto a = train_variant(LossKind::PBB, train, eval, cfg);
    const auto b = train_variant(LossKind::PBB, train, eval, cfg);
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].train_loss == b[i].train_loss);
      CHECK(a[i].recall50.matched == b[i].recall50.matched);
    }
  }
  SUBCASE("single-scene overfit decreases the loss") {
    cfg.lr = 0.005;
    cfg.epochs = 11;
    for (LossKind k : {LossKind::RB, LossKind::RCB, LossKind::CN, LossKind::PBB, LossKind::BB}) {
      CAPTURE(to_string(k));
      const auto c = train_variant(k, train.first(1), eval, cfg);
      for (std::size_t e = 2; e < c.size(); ++e) CHECK(c[e].train_loss <= c[e - 1].train_loss);
      CHECK(c.back().train_loss < c[1].train_loss);
    }
  }
  SUBCASE("divergence is reported") {
    cfg.lr = std::nan("");
    try {
      train_variant(LossKind::RB, train, eval, cfg);
      FAIL("expected DivergenceError");
    } catch (const DivergenceError& e) {
      CHECK(e.epoch() == 1);
    }
  }
}

TEST_CASE("curve helpers") {
  std::vector<EpochMetrics> c(4);
  for (std::size_t i = 0; i < 4; ++i) {
    c[i].epoch = i;
    c[i].recall50.recall = 0.3 * static_cast<double>(i);
  }
  CHECK(epochs_to_fraction(c, 0.9) == 3);
  CHECK(epochs_to_fraction(c, 0.5) == 2);
  std::ostringstream out;
  write_curve_csv(out, LossKind::BB, c, true);
  CHECK(out.str().rfind("variant,epoch,train_loss,recall_50,recall_70\nBB,0,", 0) == 0);
}

TEST_CASE("oracle refinement improves proposals") {
  SynthSceneConfig sc;
  sc.seed = 3;
  const auto scenes = generate_scenes(sc, 10);
  const auto r = oracle_refinement(scenes, {}, {}, 1);
  CHECK(r.proposals > 10);
  CHECK(r.mean_iou_after > r.mean_iou_before);
  CHECK(r.mean_iou_after == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("context width study") {
  SynthSceneConfig sc;
  sc.seed = 4;
  const auto scenes = generate_scenes(sc, 5);
  const std::vector<double> etas{0.0, 1.0, 2.0};
  const auto rows = context_width_study(scenes, etas, {}, 1);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].mean_points <= rows[1].mean_points);
  CHECK(rows[1].mean_points <= rows[2].mean_points);
  CHECK(rows[0].own_coverage <= rows[1].own_coverage);
}
