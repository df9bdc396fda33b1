// Copyright 2026 The fsreloc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fsreloc/geometry.hpp"
#include "fsreloc/pnp.hpp"
#include "fsreloc/ransac.hpp"
#include "fsreloc/sampling.hpp"
#include "fsreloc/scene.hpp"

namespace fsreloc {

inline constexpr int kReportSchemaVersion = 1;

struct LocalizationResult {
  FrameId id;
  /// Absent when localization failed; errors are then +infinity.
  std::optional<Pose> estimate;
  Pose truth;
  double trans_err = 0.0;  // meters
  double rot_err = 0.0;    // degrees
  double runtime_ms = 0.0;
  std::string failure;
  RansacDiagnostics diagnostics;

  bool failed() const { return !estimate.has_value(); }
};

/// Fills trans_err / rot_err from estimate and truth (+inf when failed).
void score_result(LocalizationResult& r);

struct SuccessThreshold {
  double trans_m;
  double rot_deg;
};
inline constexpr SuccessThreshold kFineSuccess{0.05, 5.0};
inline constexpr SuccessThreshold kCoarseSuccess{0.20, 20.0};

/// Strictly below both thresholds.
bool succeeded(const LocalizationResult& r, SuccessThreshold t);

struct BinRow {
  std::string label;  // "(0,10]", ..., "overflow"
  double lower = 0.0;  // cm and degrees
  double upper = 0.0;  // +inf for the overflow bin
  std::size_t count = 0;
  std::optional<double> success_fine;
  std::optional<double> success_coarse;
};

struct Report {
  std::size_t frames = 0;
  std::size_t failures = 0;
  double median_trans_m = 0.0;
  double median_rot_deg = 0.0;
  double success_fine = 0.0;    // (5 cm, 5 deg)
  double success_coarse = 0.0;  // (20 cm, 20 deg)
  std::vector<BinRow> bins;
  std::map<std::string, std::string> config;
  std::uint64_t seed = 0;
};

/// Lower median of `values` (element (n-1)/2 after sorting).
double lower_median(std::vector<double> values);

/// Throws EmptyResults for an empty result list.
Report compute_report(std::span<const LocalizationResult> results);

struct BinConfig {
  double width = 10.0;     // cm and degrees
  std::size_t count = 5;   // regular bins before the overflow bin
};

/// Distance of a test pose to the few-shot set: separate minima of the
/// translation (cm) and rotation (degrees) differences.
std::pair<double, double> viewpoint_distance(const Pose& pose, std::span<const Pose> few_shot);

/// Bin index of a (cm, deg) distance: max of ceil(x / width) - 1 over both
/// components, clamped below at 0; `cfg.count` marks the overflow bin.
std::size_t viewpoint_bin(double trans_cm, double rot_deg, const BinConfig& cfg);

std::vector<BinRow> bin_by_viewpoint(std::span<const LocalizationResult> results,
                                     std::span<const Pose> few_shot, const BinConfig& cfg = {});

struct UpperBoundConfig {
  std::size_t per_image = 10;
  std::uint64_t seed = 0;
  RefineConfig refine;
};

/// Per test frame: `per_image` valid-depth pixels, their true scene points
/// snapped to the nearest cloud point, a pose from the best four-point subset
/// and a refinement over all pairs (none when per_image is 4).
std::vector<LocalizationResult> upper_bound(const PointCloud& cloud,
                                            std::span<const Frame> test_frames,
                                            const UpperBoundConfig& cfg);

std::string report_to_json(const Report& report);
/// One row per (bin, metric): bin,metric,value.
std::string report_to_csv(const Report& report);
/// Per-frame results without timings: frame,trans_err_m,rot_err_deg,status,
/// followed by the 12 pose entries.
std::string results_to_csv(std::span<const LocalizationResult> results);
/// frame,runtime_ms
std::string timings_to_csv(std::span<const LocalizationResult> results);

/// Reads the per-frame CSV written by results_to_csv. Throws BadFormat.
std::vector<LocalizationResult> results_from_csv(const std::string& text);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace fsreloc
