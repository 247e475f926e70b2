#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "oracles.hpp"
#include "ptdet/iou.hpp"
#include "ptdet/kernels.hpp"

using namespace ptdet;

TEST_CASE("bev_iou closed-form cases") {
  const Box3D a{0, 0, 0, 1, 2, 2, 0};
  CHECK(bev_iou(a, a) == doctest::Approx(1.0));
  CHECK(std::abs(bev_iou(a, {1, 0, 0, 1, 2, 2, 0}) - 1.0 / 3.0) < 1e-12);
  const double oct = 8 * (std::sqrt(2.0) - 1);
  CHECK(std::abs(bev_iou(a, {0, 0, 0, 1, 2, 2, kPi / 4}) - oct / (8 - oct)) < 1e-9);
  CHECK(bev_iou(a, {5, 0, 0, 1, 2, 2, 0}) == 0.0);
  // Touching edges share no area.
  CHECK(bev_iou(a, {2, 0, 0, 1, 2, 2, 0}) == doctest::Approx(0.0));
}

TEST_CASE("bev_iou matches the polygon oracle") {
  oracle::Rng r(11);
  for (int i = 0; i < 2000; ++i) {
    const Box3D a = oracle::random_box(r, 2.0), b = oracle::random_box(r, 2.0);
    CHECK(std::abs(bev_iou(a, b) - oracle::bev_iou(a, b)) < 1e-9);
    CHECK(bev_iou(a, b) == doctest::Approx(bev_iou(b, a)).epsilon(1e-12));
  }
}

TEST_CASE("iou_3d") {
  const Box3D a{0, 0, 0, 1, 2, 2, 0.3};
  CHECK(iou_3d(a, a) == doctest::Approx(1.0));
  CHECK(iou_3d(a, {0, 2, 0, 1, 2, 2, 0.3}) == 0.0);
  // Same footprint, half the height overlapping: 1/3.
  CHECK(iou_3d(a, {0, 0.5, 0, 1, 2, 2, 0.3}) == doctest::Approx(1.0 / 3.0));
  oracle::Rng r(5);
  for (int i = 0; i < 20; ++i) {
    const Box3D p = oracle::random_box(r, 1.0), q = oracle::random_box(r, 1.0);
    CHECK(std::abs(iou_3d(p, q) - oracle::monte_carlo_iou(p, q, 200000, i)) < 0.01);
    CHECK(std::abs(iou_3d(p, q) - oracle::iou_3d(p, q)) < 1e-9);
  }
}

TEST_CASE("degenerate boxes are rejected") {
  const Box3D ok{0, 0, 0, 1, 1, 1, 0};
  CHECK_THROWS_AS(bev_iou(ok, {0, 0, 0, 1, 0, 1, 0}), std::invalid_argument);
  CHECK_THROWS_AS(iou_3d(ok, {0, 0, 0, 0, 1, 1, 0}), std::invalid_argument);
  std::vector<ScoredBox> d{{ok, 0.9}, {{0, 0, 0, 1, 1, 0, 0}, 0.8}};
  CHECK_THROWS_AS(oriented_nms(d, 0.5, 10), std::invalid_argument);
}

TEST_CASE("clip_convex and polygon_area") {
  const std::vector<Vec2> sq{{0, 0}, {2, 0}, {2, 2}, {0, 2}};
  const std::vector<Vec2> sh{{1, 1}, {3, 1}, {3, 3}, {1, 3}};
  CHECK(polygon_area(sq) == doctest::Approx(4.0));
  CHECK(polygon_area(clip_convex(sq, sh)) == doctest::Approx(1.0));
  const std::vector<Vec2> far{{5, 5}, {6, 5}, {6, 6}, {5, 6}};
  CHECK(clip_convex(sq, far).empty());
}

TEST_CASE("bev_may_overlap is a necessary condition") {
  oracle::Rng r(2);
  for (int i = 0; i < 2000; ++i) {
    const Box3D a = oracle::random_box(r, 5.0), b = oracle::random_box(r, 5.0);
    if (!bev_may_overlap(a, b)) CHECK(bev_iou(a, b) == 0.0);
  }
}

TEST_CASE("oriented_nms") {
  const Box3D b{0, 0, 0, 1.5, 1.6, 3.9, 0};
  SUBCASE("identical boxes keep the higher score") {
    const std::vector<ScoredBox> d{{b, 0.8}, {b, 0.9}};
    const auto k = oriented_nms(d, 0.8, 100);
    REQUIRE(k.size() == 1);
    CHECK(k[0].score == 0.9);
  }
  SUBCASE("disjoint boxes are all kept") {
    std::vector<ScoredBox> d;
    for (int i = 0; i < 3; ++i) d.push_back({{10.0 * i, 0, 0, 1.5, 1.6, 3.9, 0.2 * i}, 0.1 * i});
    CHECK(oriented_nms(d, 0.1, 100).size() == 3);
  }
  SUBCASE("threshold is strict") {
    // IoU exactly 1/3.
    const std::vector<ScoredBox> d{{{0, 0, 0, 1, 2, 2, 0}, 0.9}, {{1, 0, 0, 1, 2, 2, 0}, 0.8}};
    CHECK(oriented_nms(d, 1.0 / 3.0 + 1e-9, 10).size() == 2);
    CHECK(oriented_nms(d, 1.0 / 3.0 - 1e-9, 10).size() == 1);
  }
  SUBCASE("max_keep and empty input") {
    std::vector<ScoredBox> d;
    for (int i = 0; i < 10; ++i) d.push_back({{10.0 * i, 0, 0, 1, 1, 1, 0}, 1.0 - 0.01 * i});
    const auto k = oriented_nms(d, 0.5, 4);
    REQUIRE(k.size() == 4);
    CHECK(k[0].score > k[3].score);
    CHECK(oriented_nms(std::vector<ScoredBox>{}, 0.5, 4).empty());
  }
  SUBCASE("matches naive suppression on random frames") {
    oracle::Rng r(9);
    for (int f = 0; f < 10; ++f) {
      std::vector<ScoredBox> d;
      for (int c = 0; c < 10; ++c) {
        const Box3D base = oracle::random_box(r, 15.0);
        for (int j = 0; j < 20; ++j) {
          Box3D x = base;
          x.x += 0.4 * r.normal();
          x.z += 0.4 * r.normal();
          x.theta = wrap_angle(x.theta + 0.2 * r.normal());
          d.push_back({x, r.uniform()});
        }
      }
      const double thr = r.uniform(0.1, 0.9);
      CHECK(oriented_nms_indices(d, thr, 1000) == oracle::naive_nms(d, thr, 1000));
      CHECK(oriented_nms_indices(d, thr, 7) == oracle::naive_nms(d, thr, 7));
    }
  }
}

TEST_CASE("serial and OpenMP kernels agree") {
  oracle::Rng r(4);
  std::vector<Box3D> boxes;
  for (int i = 0; i < 40; ++i) boxes.push_back(oracle::random_box(r, 8.0));
  std::vector<Box3D> others;
  for (int i = 0; i < 30; ++i) others.push_back(oracle::random_box(r, 8.0));
  std::vector<Point3> pts;
  for (int i = 0; i < 5000; ++i) pts.push_back({r.uniform(-10, 10), r.uniform(-2, 2), r.uniform(-10, 10)});

  CHECK(kernels::points_in_boxes_serial(pts, boxes) == kernels::points_in_boxes_omp(pts, boxes));
  CHECK(kernels::point_in_box_mask_serial(pts, boxes[0]) == kernels::point_in_box_mask_omp(pts, boxes[0]));
  CHECK(kernels::bev_iou_matrix_serial(boxes, others) == kernels::bev_iou_matrix_omp(boxes, others));
  CHECK(kernels::iou3d_matrix_serial(boxes, others) == kernels::iou3d_matrix_omp(boxes, others));

  const auto owner = kernels::points_in_boxes_serial(pts, boxes);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    int first = -1;
    for (std::size_t b = 0; b < boxes.size() && first < 0; ++b)
      if (point_in_box(pts[i], boxes[b])) first = static_cast<int>(b);
    CHECK(owner[i] == first);
  }
  const auto m = kernels::iou3d_matrix_serial(boxes, others);
  for (std::size_t i = 0; i < boxes.size(); ++i)
    for (std::size_t j = 0; j < others.size(); ++j) CHECK(m[i * others.size() + j] == iou_3d(boxes[i], others[j]));

  std::vector<Box3D> bad = boxes;
  bad[3].w = 0.0;
  CHECK_THROWS_AS(kernels::iou3d_matrix_omp(bad, others), std::invalid_argument);
}
