#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "oracles.hpp"
#include "ptdet/kitti.hpp"

using namespace ptdet;
namespace fs = std::filesystem;

namespace {

fs::path temp_path(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "ptdet_tests";
  fs::create_directories(dir);
  return dir / name;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

// Random rotation (via a random unit quaternion) and translation.
kitti::Mat34 random_rigid(oracle::Rng& r) {
  double q[4];
  double n = 0;
  for (double& v : q) {
    v = r.normal();
    n += v * v;
  }
  n = std::sqrt(n);
  const double w = q[0] / n, x = q[1] / n, y = q[2] / n, z = q[3] / n;
  return {1 - 2 * (y * y + z * z), 2 * (x * y - z * w),     2 * (x * z + y * w),     r.uniform(-1, 1),
          2 * (x * y + z * w),     1 - 2 * (x * x + z * z), 2 * (y * z - x * w),     r.uniform(-1, 1),
          2 * (x * z - y * w),     2 * (y * z + x * w),     1 - 2 * (x * x + y * y), r.uniform(-1, 1)};
}

kitti::Calib random_calib(oracle::Rng& r) {
  kitti::Calib c;
  c.velo_to_cam = random_rigid(r);
  const auto rr = random_rigid(r);
  c.rect = {rr[0], rr[1], rr[2], rr[4], rr[5], rr[6], rr[8], rr[9], rr[10]};
  c.cam_proj = {721.5, 0, 609.6, 44.9, 0, 721.5, 172.9, 0.2, 0, 0, 1, 0.003};
  return c;
}

}  // namespace

TEST_CASE("velodyne files") {
  SUBCASE("empty file") {
    const fs::path p = temp_path("empty.bin");
    std::ofstream(p, std::ios::binary).close();
    CHECK(kitti::read_velodyne(p).empty());
  }
  SUBCASE("hand-written two-point file") {
    const float raw[8] = {1.5f, -2.0f, 0.25f, 0.5f, 10.0f, 20.0f, -1.0f, 1.0f};
    const fs::path p = temp_path("two.bin");
    {
      std::ofstream f(p, std::ios::binary);
      for (float v : raw) {
        unsigned char b[4];
        std::uint32_t u;
        std::memcpy(&u, &v, 4);
        for (int k = 0; k < 4; ++k) b[k] = static_cast<unsigned char>(u >> (8 * k));
        f.write(reinterpret_cast<const char*>(b), 4);
      }
    }
    const PointCloud c = kitti::read_velodyne(p);
    REQUIRE(c.size() == 2);
    CHECK(c.points[0] == Point3{1.5, -2.0, 0.25});
    CHECK(c.intensity[0] == 0.5);
    CHECK(c.points[1] == Point3{10, 20, -1});
    CHECK(c.intensity[1] == 1.0);
  }
  SUBCASE("truncated file") {
    const fs::path p = temp_path("bad.bin");
    std::ofstream(p, std::ios::binary) << "123456789";
    CHECK_THROWS_AS(kitti::read_velodyne(p), kitti::FormatError);
  }
  SUBCASE("write and read back") {
    oracle::Rng r(1);
    PointCloud c;
    for (int i = 0; i < 1000; ++i)
      c.push_back({static_cast<float>(r.uniform(-80, 80)), static_cast<float>(r.uniform(-3, 3)),
                   static_cast<float>(r.uniform(-80, 80))},
                  static_cast<float>(r.uniform()));
    const fs::path a = temp_path("a.bin"), b = temp_path("b.bin");
    kitti::write_velodyne(a, c);
    const PointCloud back = kitti::read_velodyne(a);
    CHECK(back.points == c.points);
    CHECK(back.intensity == c.intensity);
    kitti::write_velodyne(b, back);
    CHECK(slurp(a) == slurp(b));
    CHECK(fs::file_size(a) == 16 * c.size());
  }
}

TEST_CASE("label lines") {
  const std::string line = "Car 0.50 1 -1.57 100.00 120.00 300.00 250.00 1.52 1.63 3.88 2.00 1.70 15.00 -1.60";
  const kitti::KittiObject o = kitti::parse_object(line);
  CHECK(o.class_name == "Car");
  CHECK(o.truncation == 0.5);
  CHECK(o.occlusion == 1);
  CHECK(o.alpha == -1.57);
  CHECK(o.bbox2d == std::array<double, 4>{100, 120, 300, 250});
  CHECK(o.h == 1.52);
  CHECK(o.w == 1.63);
  CHECK(o.l == 3.88);
  CHECK(o.location == std::array<double, 3>{2.0, 1.7, 15.0});
  CHECK(o.rotation_y == -1.60);
  CHECK_FALSE(o.score.has_value());
  CHECK(kitti::format_object(o) == line);

  const auto scored = kitti::parse_object(line + " 0.93");
  REQUIRE(scored.score.has_value());
  CHECK(*scored.score == 0.93);

  CHECK_THROWS_AS(kitti::parse_object("Car 0 0 0"), kitti::FormatError);
  CHECK_THROWS_AS(kitti::parse_object("Car x 1 -1.57 100 120 300 250 1.52 1.63 3.88 2 1.7 15 -1.6"),
                  kitti::FormatError);
  CHECK_THROWS_AS(kitti::parse_object("Car 0 1 -1.57 100 120 300 250 -1 1.63 3.88 2 1.7 15 -1.6"),
                  kitti::FormatError);

  const auto dc = kitti::parse_object("DontCare -1 -1 -10 500.00 170.00 590.00 190.00 -1 -1 -1 -1000 -1000 -1000 -10");
  CHECK(dc.is_dont_care());
  CHECK_THROWS_AS(kitti::label_to_box(dc, {}), kitti::FormatError);
  CHECK(kitti::labels_to_boxes({o, dc}, {}).size() == 1);
  CHECK(kitti::labels_to_boxes({o, dc}, {}, {"Pedestrian"}).empty());
}

TEST_CASE("label files roundtrip within formatting precision") {
  oracle::Rng r(2);
  std::vector<kitti::KittiObject> objs;
  for (int i = 0; i < 50; ++i) {
    kitti::KittiObject o;
    o.class_name = i % 3 == 0 ? "Pedestrian" : "Car";
    o.truncation = r.uniform();
    o.occlusion = r.integer(0, 3);
    o.alpha = r.uniform(-3, 3);
    o.bbox2d = {r.uniform(0, 600), r.uniform(0, 180), r.uniform(600, 1200), r.uniform(180, 370)};
    o.h = r.uniform(1, 2);
    o.w = r.uniform(1, 2);
    o.l = r.uniform(1, 5);
    o.location = {r.uniform(-20, 20), r.uniform(0, 3), r.uniform(2, 60)};
    o.rotation_y = r.uniform(-3, 3);
    o.score = r.uniform();
    objs.push_back(o);
  }
  const fs::path p = temp_path("labels.txt");
  kitti::write_detections(p, objs, 2);
  const auto back = kitti::read_labels(p);
  REQUIRE(back.size() == objs.size());
  for (std::size_t i = 0; i < objs.size(); ++i) {
    CHECK(back[i].class_name == objs[i].class_name);
    CHECK(back[i].occlusion == objs[i].occlusion);
    CHECK(std::abs(back[i].l - objs[i].l) <= 0.005 + 1e-12);
    CHECK(std::abs(back[i].location[2] - objs[i].location[2]) <= 0.005 + 1e-12);
    CHECK(std::abs(*back[i].score - *objs[i].score) <= 0.005 + 1e-12);
    CHECK(kitti::format_object(back[i]) == kitti::format_object(objs[i]));
  }
  std::istringstream in("\n" + kitti::format_object(objs[0]) + "\n\n");
  CHECK(kitti::parse_labels(in).size() == 1);
}

TEST_CASE("calibration files") {
  oracle::Rng r(3);
  const kitti::Calib c = random_calib(r);
  const fs::path p = temp_path("calib.txt");
  kitti::write_calib(p, c);
  const kitti::Calib back = kitti::read_calib(p);
  CHECK(back.velo_to_cam == c.velo_to_cam);
  CHECK(back.rect == c.rect);
  CHECK(back.cam_proj == c.cam_proj);

  std::istringstream missing("P2: 1 0 0 0 0 1 0 0 0 0 1 0\n");
  CHECK_THROWS_AS(kitti::parse_calib(missing), kitti::FormatError);
  kitti::Calib singular;
  singular.rect = {1, 0, 0, 0, 0, 0, 0, 0, 1};
  CHECK_THROWS_AS(kitti::validate(singular), kitti::FormatError);
}

TEST_CASE("frame conversions") {
  kitti::KittiObject o;
  o.class_name = "Car";
  o.h = 1.5;
  o.w = 1.6;
  o.l = 3.9;
  o.location = {0, 1.5, 0};
  o.rotation_y = 0;
  const Box3D b = kitti::label_to_box(o, {});
  // Bottom at rect y = 1.5, i.e. internal y = -1.5; center h/2 above it.
  CHECK(b.x == 0);
  CHECK(b.y == doctest::Approx(-0.75));
  CHECK(b.z == 0);
  CHECK(b.theta == 0);

  oracle::Rng r(4);
  for (int i = 0; i < 200; ++i) {
    const kitti::Calib c = random_calib(r);
    const Box3D box{r.uniform(-20, 20), r.uniform(-2, 1), r.uniform(5, 50), r.uniform(1, 2), r.uniform(1, 2),
                    r.uniform(2, 5), r.uniform(-kPi, kPi)};
    const Box3D back = kitti::label_to_box(kitti::box_to_label(box, c), c);
    CHECK(std::abs(back.x - box.x) < 1e-9);
    CHECK(std::abs(back.y - box.y) < 1e-9);
    CHECK(std::abs(back.z - box.z) < 1e-9);
    CHECK(std::abs(back.l - box.l) < 1e-9);
    CHECK(std::abs(wrap_angle(back.theta - box.theta)) < 1e-9);

    const Point3 v{r.uniform(-50, 50), r.uniform(-50, 50), r.uniform(-3, 3)};
    CHECK(distance(kitti::internal_to_velodyne(kitti::velodyne_to_internal(v, c), c), v) < 1e-9);
  }
}

TEST_CASE("velodyne points reach the internal frame") {
  // KITTI-like extrinsics: velo x forward -> cam z, velo y left -> cam -x,
  // velo z up -> cam -y (internal +y).
  kitti::Calib c;
  c.velo_to_cam = {0, -1, 0, 0, 0, 0, -1, 0, 1, 0, 0, 0};
  const Point3 p = kitti::velodyne_to_internal({10, 2, 1}, c);
  CHECK(p.x == doctest::Approx(-2));
  CHECK(p.y == doctest::Approx(1));
  CHECK(p.z == doctest::Approx(10));
}

TEST_CASE("projected center lies in its own 2D box") {
  kitti::Calib c;
  c.cam_proj = {721.5, 0, 609.6, 44.9, 0, 721.5, 172.9, 0.2, 0, 0, 1, 0.003};
  const Box3D box{2.0, -0.8, 15.0, 1.5, 1.6, 3.9, 0.4};
  const kitti::KittiObject o = kitti::box_to_label(box, c, "Car", 0.9);
  const auto uv = kitti::project_to_image(box.center(), c);
  CHECK(uv[0] > o.bbox2d[0]);
  CHECK(uv[0] < o.bbox2d[2]);
  CHECK(uv[1] > o.bbox2d[1]);
  CHECK(uv[1] < o.bbox2d[3]);
  CHECK(o.score.value() == 0.9);
  CHECK(o.alpha == doctest::Approx(wrap_angle(o.rotation_y - std::atan2(2.0, 15.0))));
}
