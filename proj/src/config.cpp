// Copyright 2026 The ptdet Authors
// SPDX-License-Identifier: Apache-2.0

#include "ptdet/config.hpp"

#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

namespace ptdet {

namespace {

struct Field {
  std::function<void(RunConfig&, double)> set;
  std::function<double(const RunConfig&)> get;
};

#define PTDET_REAL(key, member) \
  {key, {[](RunConfig& c, double v) { c.member = v; }, [](const RunConfig& c) { return double(c.member); }}}
#define PTDET_COUNT(key, member)                                                           \
  {key,                                                                                    \
   {[](RunConfig& c, double v) { c.member = static_cast<decltype(c.member)>(v); },         \
    [](const RunConfig& c) { return static_cast<double>(c.member); }}}

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> table = {
      PTDET_REAL("search_range", hp.search_range),
      PTDET_REAL("bin_size", hp.bin_size),
      PTDET_COUNT("orient_bins", hp.orient_bins),
      PTDET_REAL("refine_search_range", hp.refine_search_range),
      {"refine_orient_bin_deg",
       {[](RunConfig& c, double v) { c.hp.refine_orient_bin = v * kPi / 180.0; },
        [](const RunConfig& c) { return c.hp.refine_orient_bin * 180.0 / kPi; }}},
      PTDET_REAL("context_eta", hp.context_eta),
      PTDET_REAL("norm_c", hp.norm_c),
      PTDET_REAL("mean_h", mean_size.h),
      PTDET_REAL("mean_w", mean_size.w),
      PTDET_REAL("mean_l", mean_size.l),
      PTDET_REAL("nms_train_iou", nms_train.iou),
      PTDET_COUNT("nms_train_top", nms_train.top),
      PTDET_REAL("nms_infer_iou", nms_infer.iou),
      PTDET_COUNT("nms_infer_top", nms_infer.top),
      PTDET_REAL("nms_final_iou", nms_final_iou),
      PTDET_REAL("assign_positive_iou", assign.positive),
      PTDET_REAL("assign_negative_iou", assign.negative),
      PTDET_REAL("assign_regression_iou", assign.regression),
      PTDET_REAL("ignore_margin", ignore_margin),
      PTDET_COUNT("point_budget", point_budget),
      PTDET_COUNT("pooled_samples", pooled_samples),
      PTDET_REAL("focal_alpha", focal.alpha),
      PTDET_REAL("focal_gamma", focal.gamma),
      PTDET_REAL("seg_weight", seg_weight),
      PTDET_COUNT("seed", seed),
  };
  return table;
}

#undef PTDET_REAL
#undef PTDET_COUNT

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

void apply_config(std::istream& in, RunConfig& cfg) {
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::runtime_error("config line " + std::to_string(n) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    const auto it = fields().find(key);
    if (it == fields().end()) throw std::runtime_error("config line " + std::to_string(n) + ": unknown key '" + key + "'");
    double v = 0.0;
    try {
      std::size_t used = 0;
      v = std::stod(val, &used);
      if (used != val.size()) throw std::invalid_argument(val);
    } catch (const std::logic_error&) {
      throw std::runtime_error("config line " + std::to_string(n) + ": bad value '" + val + "' for " + key);
    }
    it->second.set(cfg, v);
  }
  validate(cfg.hp);
}

void apply_config_file(const std::filesystem::path& path, RunConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path.string());
  apply_config(in, cfg);
}

RunConfig default_config() {
  RunConfig cfg;
  if (const char* env = std::getenv(kConfigEnvVar); env != nullptr && *env != '\0') apply_config_file(env, cfg);
  return cfg;
}

void write_config(std::ostream& out, const RunConfig& cfg) {
  for (const auto& [key, field] : fields()) out << key << " = " << field.get(cfg) << '\n';
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& kv : fields()) keys.push_back(kv.first);
  return keys;
}

}  // namespace ptdet
