// Copyright 2026 The ptdet Authors
// SPDX-License-Identifier: Apache-2.0
//
// Hand-built evaluation fixtures shared by the unit and acceptance tests.

#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "oracles.hpp"
#include "ptdet/iou.hpp"

namespace fixtures {

using ptdet::Box3D;
using ptdet::ScoredBox;

inline Box3D car(double x, double z, double theta = 0.0) { return {x, 0.75, z, 1.5, 1.6, 3.9, theta}; }

// Moves a box along its heading by `s` meters.
inline Box3D slide(Box3D b, double s) {
  b.x += s * std::cos(b.theta);
  b.z += s * std::sin(b.theta);
  return b;
}

struct RecallFixture {
  std::vector<std::vector<ScoredBox>> proposals;
  std::vector<std::vector<Box3D>> gts;
};

// Three frames, six gts, proposals with hand-placed partial overlaps. Sliding
// a car by d along its length gives IoU (l - d) / (l + d).
inline RecallFixture recall_fixture() {
  RecallFixture f;
  // Frame 0: one exact hit, one gt only covered at IoU ~0.56.
  f.gts.push_back({car(0, 10), car(6, 12, 0.5)});
  f.proposals.push_back({{car(0, 10), 0.9}, {slide(car(6, 12, 0.5), 1.1), 0.8}, {car(30, 30), 0.95}});
  // Frame 1: a gt reached only by the lowest-scored proposal, a gt hit twice
  // and a low-overlap proposal (IoU ~0.33).
  f.gts.push_back({car(-5, 20, 1.0), car(5, 25, -0.3)});
  f.proposals.push_back({{car(5, 25, -0.3), 0.7},
                         {slide(car(5, 25, -0.3), 0.3), 0.6},
                         {slide(car(-5, 20, 1.0), 1.95), 0.5},
                         {slide(car(-5, 20, 1.0), 0.5), 0.1}});
  // Frame 2: no proposals at all.
  f.gts.push_back({car(0, 40), car(4, 45, 2.0)});
  f.proposals.push_back({});
  return f;
}

// Per gt: is there any proposal among the top `rois` of its frame (by score,
// ties by order) with 3D IoU >= thr? Checked pair by pair with the oracle.
inline std::size_t exhaustive_matches(const RecallFixture& f, std::size_t rois, double thr) {
  std::size_t matched = 0;
  for (std::size_t fr = 0; fr < f.gts.size(); ++fr) {
    const auto& props = f.proposals[fr];
    std::vector<std::size_t> order(props.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return props[a].score > props[b].score; });
    order.resize(std::min(rois, order.size()));
    for (const Box3D& g : f.gts[fr]) {
      bool hit = false;
      for (std::size_t i : order) hit = hit || oracle::iou_3d(props[i].box, g) >= thr;
      matched += hit;
    }
  }
  return matched;
}

struct ApFixture {
  std::vector<std::vector<ScoredBox>> dets;
  std::vector<std::vector<Box3D>> gts;
};

// Five detections over three gts in two frames; in score order they are
// TP, FP, TP, FP, FP at IoU 0.7. The second FP is a duplicate of an already
// matched gt.
inline ApFixture ap_fixture() {
  ApFixture f;
  f.gts.push_back({car(0, 10), car(8, 15, 0.4)});
  f.gts.push_back({car(-3, 30, -1.0)});
  f.dets.push_back({{car(0, 10), 0.95},                  // TP
                    {slide(car(8, 15, 0.4), 1.5), 0.9},  // FP: IoU ~0.44
                    {slide(car(0, 10), 0.1), 0.6},       // FP: duplicate
                    {car(20, 20), 0.5}});                // FP: nothing there
  f.dets.push_back({{slide(car(-3, 30, -1.0), 0.2), 0.8}});  // TP: IoU ~0.90
  return f;
}

}  // namespace fixtures
