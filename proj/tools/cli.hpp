// Copyright 2026 The ptdet Authors
// SPDX-License-Identifier: Apache-2.0
//
// The `ptdet` command line. Commands are plain functions so tests can run
// them in-process.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ptdet/config.hpp"
#include "ptdet/pool.hpp"

namespace ptdet::cli {

/// Runs the command line; returns the process exit status
/// (0 success, 1 a check failed or a command error, 2 usage error).
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

// codec-check ----------------------------------------------------------------

struct CodecStats {
  std::string name;
  std::size_t cases = 0;
  std::size_t failures = 0;
  double max_error = 0.0;
};

struct CodecCheckReport {
  std::vector<CodecStats> codecs;  // stage1, refine, RB, RCB, PBB
  std::vector<std::string> messages;
  bool ok() const;
};

/// Random in-range encode/decode roundtrips. A roundtrip fails when any box
/// parameter differs by `tolerance` or more, or the encoder throws. With
/// `inject_out_of_range` one stage-1 case outside the search window is added.
CodecCheckReport codec_check(std::size_t cases, std::uint64_t seed, const RunConfig& cfg,
                             bool inject_out_of_range = false, double tolerance = 1e-9);
void write_codec_report(std::ostream& out, const CodecCheckReport& rep);

// kitti-pool dump ------------------------------------------------------------

/// Text dump of one pooled region:
///   ptdet-pooled-region 1
///   proposal x y z h w l theta
///   points N            (followed by N lines "x y z r m d")
/// or "EMPTY" instead of the points block when nothing was pooled.
void write_pooled(std::ostream& out, const Box3D& proposal, const std::optional<PooledRegion>& region);

struct PooledDump {
  Box3D proposal;
  bool empty = true;
  std::vector<PooledPoint> points;
};
/// Throws std::runtime_error on malformed input.
PooledDump read_pooled(std::istream& in);

}  // namespace ptdet::cli
