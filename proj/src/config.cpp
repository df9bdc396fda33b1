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


#include "fsreloc/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>

#include "fsreloc/error.hpp"
#include "fsreloc/rng.hpp"

namespace fsreloc {

const char* to_string(AblationMode m) {
  switch (m) {
    case AblationMode::Full: return "full";
    case AblationMode::NoDecoupling: return "no_decoupling";
    case AblationMode::VanillaRansac: return "vanilla_ransac";
  }
  return "?";
}

AblationMode parse_ablation_mode(const std::string& s) {
  if (s == "full") return AblationMode::Full;
  if (s == "no_decoupling") return AblationMode::NoDecoupling;
  if (s == "vanilla_ransac") return AblationMode::VanillaRansac;
  throw Error(ErrorCode::ConfigError,
              "mode: expected full, no_decoupling or vanilla_ransac, got '" + s + "'");
}

namespace {

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

double to_double(const std::string& key, const std::string& v) {
  double x = 0.0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size() || !std::isfinite(x)) {
    throw Error(ErrorCode::ConfigError, key + ": expected a number, got '" + v + "'");
  }
  return x;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::uint64_t x = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw Error(ErrorCode::ConfigError, key + ": expected a non-negative integer, got '" + v + "'");
  }
  return x;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw Error(ErrorCode::ConfigError, key + ": expected true or false, got '" + v + "'");
}

EncoderVariant to_variant(const std::string& key, const std::string& v) {
  if (v == "learned") return EncoderVariant::Learned;
  if (v == "baseline") return EncoderVariant::Baseline;
  if (v == "oracle") return EncoderVariant::Oracle;
  throw Error(ErrorCode::ConfigError, key + ": expected learned, baseline or oracle, got '" + v + "'");
}

struct Entry {
  std::function<std::string(const PipelineConfig&)> get;
  std::function<void(PipelineConfig&, const std::string&, const std::string&)> set;
};

template <class T>
Entry size_entry(T PipelineConfig::*outer, std::size_t T::*field) {
  return {[=](const PipelineConfig& c) { return std::to_string(c.*outer.*field); },
          [=](PipelineConfig& c, const std::string& k, const std::string& v) {
            c.*outer.*field = static_cast<std::size_t>(to_u64(k, v));
          }};
}

template <class T>
Entry double_entry(T PipelineConfig::*outer, double T::*field) {
  return {[=](const PipelineConfig& c) { return fmt(c.*outer.*field); },
          [=](PipelineConfig& c, const std::string& k, const std::string& v) {
            c.*outer.*field = to_double(k, v);
          }};
}

const std::map<std::string, Entry>& registry() {
  static const std::map<std::string, Entry> table = [] {
    using C = PipelineConfig;
    std::map<std::string, Entry> t;
    t["seed"] = {[](const C& c) { return std::to_string(c.seed); },
                 [](C& c, const std::string& k, const std::string& v) { c.seed = to_u64(k, v); }};
    t["mode"] = {[](const C& c) { return std::string(to_string(c.mode)); },
                 [](C& c, const std::string&, const std::string& v) { c.mode = parse_ablation_mode(v); }};
    t["few_shot.n"] = {[](const C& c) { return std::to_string(c.few_shot); },
                       [](C& c, const std::string& k, const std::string& v) { c.few_shot = to_u64(k, v); }};
    t["samples.per_frame"] = {
        [](const C& c) { return std::to_string(c.per_frame); },
        [](C& c, const std::string& k, const std::string& v) { c.per_frame = to_u64(k, v); }};
    t["tree.leaf_cap"] = {
        [](const C& c) { return std::to_string(c.leaf_cap); },
        [](C& c, const std::string& k, const std::string& v) { c.leaf_cap = to_u64(k, v); }};
    t["encoder.variant"] = {
        [](const C& c) { return std::string(to_string(c.encoder)); },
        [](C& c, const std::string& k, const std::string& v) { c.encoder = to_variant(k, v); }};
    t["encoder.oracle_noise"] = {
        [](const C& c) { return fmt(c.oracle_noise); },
        [](C& c, const std::string& k, const std::string& v) { c.oracle_noise = to_double(k, v); }};
    t["eval.outlier_fraction"] = {
        [](const C& c) { return fmt(c.outlier_fraction); },
        [](C& c, const std::string& k, const std::string& v) { c.outlier_fraction = to_double(k, v); }};
    t["eval.bin_width"] = double_entry(&C::bins, &BinConfig::width);
    t["eval.bin_count"] = size_entry(&C::bins, &BinConfig::count);
    t["upper_bound.per_image"] = size_entry(&C::upper_bound, &UpperBoundConfig::per_image);

    t["train.margin"] = double_entry(&C::train, &TripletTrainConfig::margin);
    t["train.kappa"] = size_entry(&C::train, &TripletTrainConfig::kappa);
    t["train.threshold_m"] = double_entry(&C::train, &TripletTrainConfig::correspondence_threshold_m);
    t["train.learning_rate"] = double_entry(&C::train, &TripletTrainConfig::learning_rate);
    t["train.momentum"] = double_entry(&C::train, &TripletTrainConfig::momentum);
    t["train.batch_size"] = size_entry(&C::train, &TripletTrainConfig::batch_size);
    t["train.epochs"] = size_entry(&C::train, &TripletTrainConfig::epochs);
    t["train.holdout_fraction"] = double_entry(&C::train, &TripletTrainConfig::holdout_fraction);
    t["train.negative_attempts"] = size_entry(&C::train, &TripletTrainConfig::negative_attempts);
    t["train.max_triplets"] = size_entry(&C::train, &TripletTrainConfig::max_triplets);

    t["ransac.k_hypo"] = size_entry(&C::ransac, &RansacConfig::k_hypo);
    t["ransac.validation_size"] = size_entry(&C::ransac, &RansacConfig::validation_size);
    t["ransac.inlier_threshold_px"] = double_entry(&C::ransac, &RansacConfig::inlier_threshold_px);
    t["ransac.history_blend"] = double_entry(&C::ransac, &RansacConfig::history_blend);
    t["ransac.score_epsilon"] = double_entry(&C::ransac, &RansacConfig::score_epsilon);
    t["ransac.early_reject_px"] = double_entry(&C::ransac, &RansacConfig::early_reject_px);
    t["ransac.error_clamp_px"] = double_entry(&C::ransac, &RansacConfig::error_clamp_px);
    t["ransac.retry_factor"] = size_entry(&C::ransac, &RansacConfig::retry_factor);
    t["ransac.pool_size"] = size_entry(&C::ransac, &RansacConfig::pool_size);
    t["ransac.final_refinement"] = {
        [](const C& c) { return std::string(c.ransac.final_refinement ? "true" : "false"); },
        [](C& c, const std::string& k, const std::string& v) { c.ransac.final_refinement = to_bool(k, v); }};
    t["ransac.refine_iterations"] = {
        [](const C& c) { return std::to_string(c.ransac.refine_iterations); },
        [](C& c, const std::string& k, const std::string& v) {
          c.ransac.refine_iterations = static_cast<int>(to_u64(k, v));
        }};
    t["ransac.score"] = {
        [](const C& c) {
          return std::string(c.ransac.score_mode == ScoreMode::Ratio ? "ratio" : "inliers");
        },
        [](C& c, const std::string& k, const std::string& v) {
          if (v == "ratio") c.ransac.score_mode = ScoreMode::Ratio;
          else if (v == "inliers") c.ransac.score_mode = ScoreMode::InlierCount;
          else throw Error(ErrorCode::ConfigError, k + ": expected ratio or inliers, got '" + v + "'");
        }};
    return t;
  }();
  return table;
}

constexpr const char* kSynthPrefix = "synth.";

}  // namespace

PipelineConfig::PipelineConfig() = default;

void PipelineConfig::validate() const {
  auto check = [](bool ok, const std::string& msg) {
    if (!ok) throw Error(ErrorCode::ConfigError, msg);
  };
  check(few_shot >= 1, "few_shot.n must be >= 1");
  check(per_frame >= 1, "samples.per_frame must be >= 1");
  check(leaf_cap >= 1, "tree.leaf_cap must be >= 1");
  check(oracle_noise >= 0.0, "encoder.oracle_noise must be >= 0");
  check(outlier_fraction >= 0.0 && outlier_fraction <= 1.0, "eval.outlier_fraction must be in [0, 1]");
  check(bins.width > 0.0 && bins.count >= 1, "eval.bin_width must be > 0 and eval.bin_count >= 1");
  check(upper_bound.per_image >= 4, "upper_bound.per_image must be >= 4");
  try {
    train.validate();
    ransac.validate();
    synth.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigError, e.what());
  }
}

void PipelineConfig::set(const std::string& key, const std::string& value) {
  if (key.rfind(kSynthPrefix, 0) == 0) {
    if (!apply_synthetic_setting(synth, key.substr(6), value)) {
      throw Error(ErrorCode::ConfigError, "unknown config key '" + key + "'");
    }
    return;
  }
  const auto& reg = registry();
  const auto it = reg.find(key);
  if (it == reg.end()) throw Error(ErrorCode::ConfigError, "unknown config key '" + key + "'");
  it->second.set(*this, key, value);
}

std::map<std::string, std::string> PipelineConfig::echo() const {
  std::map<std::string, std::string> out;
  for (const auto& [k, e] : registry()) out[k] = e.get(*this);
  return out;
}

std::uint64_t PipelineConfig::stage(const char* name) const { return stage_seed(seed, name); }

PipelineConfig parse_pipeline_config(const std::string& text) {
  PipelineConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::set<std::string> seen;
  std::size_t lineno = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::ConfigError, "line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw Error(ErrorCode::ConfigError, "line " + std::to_string(lineno) + ": empty key or value");
    }
    if (!seen.insert(key).second) {
      throw Error(ErrorCode::ConfigError, "line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    }
    try {
      cfg.set(key, value);
    } catch (const Error& e) {
      throw Error(ErrorCode::ConfigError, "line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return cfg;
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
  return parse_pipeline_config(read_text(path));
}

}  // namespace fsreloc
