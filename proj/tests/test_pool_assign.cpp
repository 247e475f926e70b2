#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "oracles.hpp"
#include "ptdet/assign.hpp"
#include "ptdet/iou.hpp"
#include "ptdet/pool.hpp"

using namespace ptdet;

namespace {

// Oriented containment written out independently of the library.
bool inside(const Point3& p, const Box3D& b) {
  const double dx = p.x - b.x, dz = p.z - b.z;
  const double u = dx * std::cos(b.theta) + dz * std::sin(b.theta);
  const double v = -dx * std::sin(b.theta) + dz * std::cos(b.theta);
  return std::abs(u) <= b.l / 2 && std::abs(v) <= b.w / 2 && std::abs(p.y - b.y) <= b.h / 2;
}

std::size_t count_inside(const PointCloud& c, const Box3D& b) {
  return static_cast<std::size_t>(
      std::count_if(c.points.begin(), c.points.end(), [&](const Point3& p) { return inside(p, b); }));
}

}  // namespace

TEST_CASE("enlarge_box") {
  const Box3D b{1, 2, 3, 1.5, 1.6, 3.9, 0.3};
  CHECK(enlarge_box(b, 0.0) == b);
  const Box3D e = enlarge_box(b, 1.0);
  CHECK(e.h == doctest::Approx(2.5));
  CHECK(e.w == doctest::Approx(2.6));
  CHECK(e.l == doctest::Approx(4.9));
  CHECK(e.center() == b.center());
  CHECK(e.theta == b.theta);
  for (double eta : {0.01, 0.5, 2.0})
    for (const Point3& c : box_corners(b)) CHECK(point_in_box(c, enlarge_box(b, eta)));
}

TEST_CASE("sample_indices") {
  const auto a = sample_indices(100, 30, 1);
  CHECK(a.size() == 30);
  CHECK(std::set<std::size_t>(a.begin(), a.end()).size() == 30);
  CHECK(a == sample_indices(100, 30, 1));
  const auto b = sample_indices(5, 12, 2);
  CHECK(b.size() == 12);
  CHECK(std::set<std::size_t>(b.begin(), b.end()).size() == 5);
  CHECK(sample_indices(0, 10, 1).empty());
}

TEST_CASE("pool_region") {
  const HyperParams hp;
  const Box3D prop{4, 0.5, 10, 1.5, 1.6, 3.9, 0.7};
  SUBCASE("empty region") {
    PointCloud c;
    c.push_back({50, 0, 50}, 0.1);
    CHECK_FALSE(pool_region(c, {}, {}, prop, hp, 512, 0).has_value());
  }
  SUBCASE("single point at the center") {
    PointCloud c;
    c.push_back(prop.center(), 0.4);
    const std::vector<std::uint8_t> mask{1};
    const std::vector<std::vector<double>> feats{{7.0, 8.0}};
    const auto r = pool_region(c, mask, feats, prop, hp, 4, 0);
    REQUIRE(r.has_value());
    REQUIRE(r->points.size() == 4);
    const PooledPoint& q = r->points[0];
    CHECK(distance(q.local_xyz, {0, 0, 0}) < 1e-12);
    CHECK(q.sensor_dist == doctest::Approx(std::sqrt(16 + 0.25 + 100)));
    CHECK(q.intensity == 0.4);
    CHECK(q.seg_mask == 1);
    CHECK(q.feature_vector() == std::vector<double>{q.local_xyz.x, q.local_xyz.y, q.local_xyz.z, 0.4, 1,
                                                    q.sensor_dist, 7.0, 8.0});
  }
  SUBCASE("membership equals a brute-force test") {
    oracle::Rng r(1);
    PointCloud c;
    for (int i = 0; i < 10000; ++i) c.push_back({r.uniform(0, 8), r.uniform(-1.5, 2.5), r.uniform(6, 14)}, 0.5);
    const auto members = region_members(c.points, prop, hp.context_eta);
    std::vector<std::size_t> expected;
    const Box3D big{prop.x, prop.y, prop.z, prop.h + 1, prop.w + 1, prop.l + 1, prop.theta};
    for (std::size_t i = 0; i < c.size(); ++i)
      if (inside(c.points[i], big)) expected.push_back(i);
    CHECK(members == expected);

    const auto region = pool_region(c, {}, {}, prop, hp, 512, 3);
    REQUIRE(region.has_value());
    CHECK(region->points.size() == 512);
    for (std::size_t k = 0; k < region->points.size(); ++k) {
      const std::size_t src = region->source_index[k];
      CHECK(std::binary_search(expected.begin(), expected.end(), src));
      const Point3 back = canonical_inverse(region->points[k].local_xyz, CanonicalFrame::of(prop));
      CHECK(distance(back, c.points[src]) < 1e-9);
    }
  }
}

TEST_CASE("label_points") {
  const Box3D gt{0, 1, 10, 2, 2, 4, 0};
  PointCloud c;
  c.push_back({0, 1, 10}, 0);      // center
  c.push_back({2.1, 1, 10}, 0);    // 0.1 m beyond the front face
  c.push_back({2.3, 1, 10}, 0);    // 0.3 m beyond it
  c.push_back({0, 1, 11.15}, 0);   // 0.15 m beyond a side face
  const auto none = label_points(c, std::vector<Box3D>{}, 0.2);
  CHECK(std::all_of(none.begin(), none.end(), [](PointLabel l) { return l == PointLabel::Background; }));
  const auto l = label_points(c, std::vector{gt}, 0.2);
  CHECK(l[0] == PointLabel::Foreground);
  CHECK(l[1] == PointLabel::Ignored);
  CHECK(l[2] == PointLabel::Background);
  CHECK(l[3] == PointLabel::Ignored);
  CHECK(point_gt_index(c, std::vector{gt}) == std::vector<int>{0, -1, -1, -1});
}

TEST_CASE("label_proposals") {
  const Box3D gt{0, 0, 10, 1.5, 1.6, 3.9, 0.2};
  // Shifting along the heading by l/3 leaves 2/3 of the length overlapping:
  // IoU = (2/3) / (4/3) = 1/2.
  const double s = gt.l / 3;
  const Box3D half{gt.x + s * std::cos(gt.theta), gt.y, gt.z + s * std::sin(gt.theta), gt.h, gt.w, gt.l, gt.theta};
  CHECK(std::abs(oracle::monte_carlo_iou(half, gt, 1000000, 1) - 0.5) < 0.005);
  const Box3D far{30, 0, 30, 1.5, 1.6, 3.9, 0};
  const auto labels = label_proposals(std::vector{gt, far, half}, std::vector{gt});
  CHECK(labels[0].cls == ProposalClass::Positive);
  REQUIRE(labels[0].regression_gt.has_value());
  CHECK(*labels[0].regression_gt == gt);
  CHECK(labels[0].best_gt == 0);
  CHECK(labels[1].cls == ProposalClass::Negative);
  CHECK_FALSE(labels[1].regression_gt.has_value());
  CHECK(labels[2].cls == ProposalClass::Ignored);
  CHECK_FALSE(labels[2].regression_gt.has_value());
  CHECK(labels[2].max_iou == doctest::Approx(0.5));
  const auto empty = label_proposals(std::vector{gt}, std::vector<Box3D>{});
  CHECK(empty[0].cls == ProposalClass::Negative);
}

TEST_CASE("augmentation") {
  oracle::Rng r(2);
  Scene s;
  for (int i = 0; i < 3; ++i) s.boxes.push_back({-8.0 + 8 * i, 0.75, 15, 1.5, 1.6, 3.9, r.uniform(-3, 3)});
  for (int i = 0; i < 3000; ++i) s.cloud.push_back({r.uniform(-12, 12), r.uniform(-0.5, 2), r.uniform(10, 20)}, 0.3);

  const Scene same = apply_augmentation(s, {false, 1.0, 0.0});
  CHECK(same.cloud.points == s.cloud.points);
  CHECK(same.boxes == s.boxes);

  const Scene twice = apply_augmentation(apply_augmentation(s, {true, 1.0, 0.0}), {true, 1.0, 0.0});
  for (std::size_t i = 0; i < s.boxes.size(); ++i) {
    CHECK(std::abs(twice.boxes[i].x - s.boxes[i].x) < 1e-12);
    CHECK(std::abs(wrap_angle(twice.boxes[i].theta - s.boxes[i].theta)) < 1e-12);
  }

  const AugmentConfig cfg;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const AugmentDraw d = draw_augmentation(cfg, seed);
    CHECK(d.scale >= 0.95);
    CHECK(d.scale <= 1.05);
    CHECK(std::abs(d.rotation) <= kPi / 18);
    const Scene a = augment_scene(s, cfg, seed);
    for (std::size_t b = 0; b < s.boxes.size(); ++b) {
      CHECK(is_valid(a.boxes[b]));
      // Shrink slightly so boundary points cannot flip on rounding.
      Box3D in = s.boxes[b], out = a.boxes[b];
      CHECK(count_inside(a.cloud, out) >= count_inside(s.cloud, enlarge_box(in, -1e-6)));
      CHECK(count_inside(a.cloud, enlarge_box(out, -1e-6 * d.scale)) <= count_inside(s.cloud, in));
      CHECK(count_inside(a.cloud, out) == count_inside(s.cloud, in));
    }
  }
}

TEST_CASE("gt_aug") {
  AugmentConfig cfg;
  GtSample sample;
  sample.box = {0, 0.75, 20, 1.5, 1.6, 3.9, 0.1};
  sample.points.push_back({0, 0.5, 20}, 0.4);
  sample.points.push_back({0.5, 1.0, 20.3}, 0.6);
  cfg.gtaug_pool = {sample};

  const GtAugResult into_empty = gt_aug({}, cfg, 1);
  CHECK(into_empty.accepted == 1);
  REQUIRE(into_empty.scene.boxes.size() == 1);
  CHECK(into_empty.scene.boxes[0] == sample.box);
  CHECK(into_empty.scene.cloud.points == sample.points.points);

  Scene occupied;
  occupied.boxes.push_back({0.5, 0.75, 20.5, 1.5, 1.6, 3.9, 0.0});
  const GtAugResult rejected = gt_aug(occupied, cfg, 1);
  CHECK(rejected.accepted == 0);
  CHECK(rejected.scene.boxes.size() == 1);

  oracle::Rng r(3);
  cfg.gtaug_pool.clear();
  for (int i = 0; i < 40; ++i) {
    GtSample g;
    g.box = {r.uniform(-20, 20), 0.75, r.uniform(5, 45), 1.5, 1.6, 3.9, r.uniform(-3, 3)};
    cfg.gtaug_pool.push_back(g);
  }
  cfg.gtaug_max_boxes = 40;
  const GtAugResult many = gt_aug(occupied, cfg, 7);
  CHECK(many.accepted > 0);
  const auto& bx = many.scene.boxes;
  for (std::size_t i = 0; i < bx.size(); ++i)
    for (std::size_t j = i + 1; j < bx.size(); ++j) CHECK(oracle::bev_intersection(bx[i], bx[j]) < 1e-9);
}

TEST_CASE("subsample_points and jitter_box") {
  const auto idx = subsample_points(100000, 16384, 1);
  CHECK(idx.size() == 16384);
  CHECK(std::set<std::size_t>(idx.begin(), idx.end()).size() == 16384);
  CHECK(subsample_points(10, 16, 1).size() == 16);
  const Box3D b{1, 1, 1, 1.5, 1.6, 3.9, 0};
  CHECK(jitter_box(b, 0.1, 0.05, 0.1, 3) == jitter_box(b, 0.1, 0.05, 0.1, 3));
  CHECK(is_valid(jitter_box(b, 0.1, 0.05, 0.1, 3)));
}
