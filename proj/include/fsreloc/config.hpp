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
#include <string>
#include <vector>

#include "fsreloc/encoder.hpp"
#include "fsreloc/eval.hpp"
#include "fsreloc/ransac.hpp"
#include "fsreloc/regression_tree.hpp"
#include "fsreloc/synthetic.hpp"
#include "fsreloc/triplet.hpp"

namespace fsreloc {

enum class AblationMode { Full, NoDecoupling, VanillaRansac };
const char* to_string(AblationMode m);
AblationMode parse_ablation_mode(const std::string& s);

/// Every tunable of the pipeline. The global seed is split into per-stage
/// seeds by stage_seed(seed, stage name); the embedded configs' own seed
/// fields are overwritten from it.
struct PipelineConfig {
  std::uint64_t seed = 0;
  AblationMode mode = AblationMode::Full;
  std::size_t few_shot = 10;
  std::size_t per_frame = 19200;
  std::size_t leaf_cap = kDefaultLeafCap;
  EncoderVariant encoder = EncoderVariant::Learned;
  double oracle_noise = 0.0;
  /// Fraction of query predictions replaced by random scene coordinates
  /// (robustness experiments; 0 in normal runs).
  double outlier_fraction = 0.0;
  TripletTrainConfig train;
  RansacConfig ransac;
  UpperBoundConfig upper_bound;
  BinConfig bins;
  SyntheticSceneConfig synth;

  PipelineConfig();
  void validate() const;

  /// Applies one `key = value` setting. Throws ConfigError for unknown keys
  /// and malformed values.
  void set(const std::string& key, const std::string& value);
  /// All settings as key/value strings, in a fixed order.
  std::map<std::string, std::string> echo() const;

  std::uint64_t stage(const char* name) const;
};

/// Parses "key = value" lines; '#' starts a comment. Throws ConfigError with
/// the line number on malformed lines, unknown keys and duplicates.
PipelineConfig parse_pipeline_config(const std::string& text);
PipelineConfig load_pipeline_config(const std::filesystem::path& path);

}  // namespace fsreloc
