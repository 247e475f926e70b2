// Copyright 2026 The ptdet Authors
// SPDX-License-Identifier: Apache-2.0
//
// Serial reference kernels against their OpenMP counterparts.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "ptdet/kernels.hpp"
#include "ptdet/synth.hpp"

using namespace ptdet;

namespace {

std::vector<Box3D> random_boxes(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 g(seed);
  std::uniform_real_distribution<double> pos(-40.0, 40.0), size(0.5, 4.0), yaw(-kPi, kPi);
  std::vector<Box3D> out(n);
  for (Box3D& b : out) b = {pos(g), 0.0, pos(g), size(g), size(g), size(g), yaw(g)};
  return out;
}

std::vector<Point3> random_points(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 g(seed);
  std::uniform_real_distribution<double> pos(-40.0, 40.0), up(-1.0, 2.0);
  std::vector<Point3> out(n);
  for (Point3& p : out) p = {pos(g), up(g), pos(g)};
  return out;
}

template <auto Kernel>
void bm_points_in_boxes(benchmark::State& state) {
  const auto pts = random_points(static_cast<std::size_t>(state.range(0)), 1);
  const auto boxes = random_boxes(50, 2);
  for (auto _ : state) benchmark::DoNotOptimize(Kernel(pts, boxes));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <auto Kernel>
void bm_box_mask(benchmark::State& state) {
  const auto pts = random_points(static_cast<std::size_t>(state.range(0)), 3);
  const Box3D box{0, 0.5, 0, 1.5, 1.6, 3.9, 0.3};
  for (auto _ : state) benchmark::DoNotOptimize(Kernel(pts, box));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <auto Kernel>
void bm_iou_matrix(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_boxes(n, 4), b = random_boxes(n, 5);
  for (auto _ : state) benchmark::DoNotOptimize(Kernel(a, b));
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(0));
}

void bm_point_features(benchmark::State& state) {
  synth::SynthSceneConfig cfg;
  cfg.seed = 11;
  const auto scene = synth::generate_scene(cfg);
  for (auto _ : state) benchmark::DoNotOptimize(synth::point_features(scene.cloud));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(scene.cloud.size()));
}

}  // namespace

BENCHMARK(bm_points_in_boxes<kernels::points_in_boxes_serial>)->Name("points_in_boxes/serial")->Arg(16384)->Arg(131072);
BENCHMARK(bm_points_in_boxes<kernels::points_in_boxes_omp>)->Name("points_in_boxes/omp")->Arg(16384)->Arg(131072);
BENCHMARK(bm_box_mask<kernels::point_in_box_mask_serial>)->Name("point_in_box_mask/serial")->Arg(16384)->Arg(131072);
BENCHMARK(bm_box_mask<kernels::point_in_box_mask_omp>)->Name("point_in_box_mask/omp")->Arg(16384)->Arg(131072);
BENCHMARK(bm_iou_matrix<kernels::bev_iou_matrix_serial>)->Name("bev_iou_matrix/serial")->Arg(64)->Arg(256);
BENCHMARK(bm_iou_matrix<kernels::bev_iou_matrix_omp>)->Name("bev_iou_matrix/omp")->Arg(64)->Arg(256);
BENCHMARK(bm_iou_matrix<kernels::iou3d_matrix_serial>)->Name("iou3d_matrix/serial")->Arg(64)->Arg(256);
BENCHMARK(bm_iou_matrix<kernels::iou3d_matrix_omp>)->Name("iou3d_matrix/omp")->Arg(64)->Arg(256);
BENCHMARK(bm_point_features)->Name("synth_point_features/omp")->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
