// Copyright 2026 The ptdet Authors
// SPDX-License-Identifier: Apache-2.0
//
// Run configuration: every tunable constant of the pipeline in one place,
// loadable from a key=value text file.

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "ptdet/assign.hpp"
#include "ptdet/codec.hpp"
#include "ptdet/losses.hpp"

namespace ptdet {

/// Environment variable naming the default config file.
inline constexpr const char* kConfigEnvVar = "PTDET_CONFIG";

struct NmsSetting {
  double iou = 0.8;
  std::size_t top = 100;
};

struct RunConfig {
  HyperParams hp;
  ClassMeanSize mean_size;
  NmsSetting nms_train{0.85, 300};
  NmsSetting nms_infer{0.8, 100};
  double nms_final_iou = 0.01;
  AssignThresholds assign;
  double ignore_margin = 0.2;
  std::size_t point_budget = 16384;
  std::size_t pooled_samples = 512;
  FocalParams focal;
  double seg_weight = 1.0;
  std::uint64_t seed = 0;
};

/// Applies `key = value` lines (blank lines and '#' comments ignored) on top
/// of `cfg`. Unknown keys and malformed values throw std::runtime_error with
/// the line number.
void apply_config(std::istream& in, RunConfig& cfg);
void apply_config_file(const std::filesystem::path& path, RunConfig& cfg);

/// Defaults, overlaid with the file named by $PTDET_CONFIG when set.
RunConfig default_config();

/// All recognized keys with their current values, one "key = value" per line.
void write_config(std::ostream& out, const RunConfig& cfg);

std::vector<std::string> config_keys();

}  // namespace ptdet
