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


#include "fsreloc/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "fsreloc/error.hpp"
#include "fsreloc/kdtree.hpp"
#include "fsreloc/rng.hpp"

namespace fsreloc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double success_rate(std::span<const LocalizationResult> results, SuccessThreshold t) {
  std::size_t ok = 0;
  for (const auto& r : results) ok += succeeded(r, t) ? 1 : 0;
  return static_cast<double>(ok) / static_cast<double>(results.size());
}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

nlohmann::json number_or_null(double x) {
  return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr);
}

}  // namespace

void score_result(LocalizationResult& r) {
  if (!r.estimate) {
    r.trans_err = kInf;
    r.rot_err = kInf;
    return;
  }
  const PoseError e = pose_error(*r.estimate, r.truth);
  r.trans_err = e.translation_m;
  r.rot_err = e.rotation_deg;
}

bool succeeded(const LocalizationResult& r, SuccessThreshold t) {
  return r.trans_err < t.trans_m && r.rot_err < t.rot_deg;
}

double lower_median(std::vector<double> values) {
  require(!values.empty(), "lower_median: empty input");
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>((values.size() - 1) / 2);
  std::nth_element(values.begin(), mid, values.end());
  return *mid;
}

Report compute_report(std::span<const LocalizationResult> results) {
  if (results.empty()) throw Error(ErrorCode::EmptyResults, "compute_report: no results");
  Report rep;
  rep.frames = results.size();
  std::vector<double> t, r;
  for (const auto& x : results) {
    rep.failures += x.failed() ? 1 : 0;
    t.push_back(x.trans_err);
    r.push_back(x.rot_err);
  }
  rep.median_trans_m = lower_median(std::move(t));
  rep.median_rot_deg = lower_median(std::move(r));
  rep.success_fine = success_rate(results, kFineSuccess);
  rep.success_coarse = success_rate(results, kCoarseSuccess);
  return rep;
}

std::pair<double, double> viewpoint_distance(const Pose& pose, std::span<const Pose> few_shot) {
  require(!few_shot.empty(), "viewpoint_distance: empty few-shot set");
  double cm = kInf, deg = kInf;
  for (const auto& p : few_shot) {
    const PoseError e = pose_error(pose, p);
    cm = std::min(cm, e.translation_m * 100.0);
    deg = std::min(deg, e.rotation_deg);
  }
  return {cm, deg};
}

std::size_t viewpoint_bin(double trans_cm, double rot_deg, const BinConfig& cfg) {
  auto index = [&](double x) -> std::size_t {
    const double b = std::ceil(x / cfg.width) - 1.0;
    if (!(b > 0.0)) return 0;
    if (b >= static_cast<double>(cfg.count)) return cfg.count;
    return static_cast<std::size_t>(b);
  };
  return std::min(cfg.count, std::max(index(trans_cm), index(rot_deg)));
}

std::vector<BinRow> bin_by_viewpoint(std::span<const LocalizationResult> results,
                                     std::span<const Pose> few_shot, const BinConfig& cfg) {
  require(cfg.width > 0.0 && cfg.count >= 1, "bin_by_viewpoint: invalid bin configuration");
  std::vector<std::vector<LocalizationResult>> members(cfg.count + 1);
  for (const auto& r : results) {
    const auto [cm, deg] = viewpoint_distance(r.truth, few_shot);
    members[viewpoint_bin(cm, deg, cfg)].push_back(r);
  }
  std::vector<BinRow> rows;
  for (std::size_t b = 0; b <= cfg.count; ++b) {
    BinRow row;
    row.lower = cfg.width * static_cast<double>(b);
    if (b < cfg.count) {
      row.upper = row.lower + cfg.width;
      row.label = "(" + format_double(row.lower) + "," + format_double(row.upper) + "]";
    } else {
      row.upper = kInf;
      row.label = "overflow";
    }
    row.count = members[b].size();
    if (row.count > 0) {
      row.success_fine = success_rate(members[b], kFineSuccess);
      row.success_coarse = success_rate(members[b], kCoarseSuccess);
    }
    rows.push_back(row);
  }
  return rows;
}

std::vector<LocalizationResult> upper_bound(const PointCloud& cloud,
                                            std::span<const Frame> test_frames,
                                            const UpperBoundConfig& cfg) {
  require(!cloud.points.empty(), "upper_bound: empty point cloud");
  require(cfg.per_image >= 4, "upper_bound: per_image must be >= 4");
  cfg.refine.validate();
  const KdTree3 tree(cloud.points);
  const std::uint64_t seed = stage_seed(cfg.seed, "upper-bound");

  std::vector<LocalizationResult> out;
  for (std::size_t fi = 0; fi < test_frames.size(); ++fi) {
    const Frame& f = test_frames[fi];
    require(f.pose.has_value() && f.depth.has_value(), "upper_bound: test frame needs pose and depth");
    LocalizationResult res;
    res.id = f.id;
    res.truth = *f.pose;

    // Same pixels the pipeline can query: patch centres with valid depth.
    std::vector<std::uint32_t> valid;
    for (int v = 0; v < f.depth->height; ++v) {
      for (int u = 0; u < f.depth->width; ++u) {
        if (f.depth->valid(u, v) && patch_fits(u, v, f.depth->width, f.depth->height)) {
          valid.push_back(static_cast<std::uint32_t>(v * f.depth->width + u));
        }
      }
    }
    if (valid.size() < cfg.per_image) {
      res.failure = "too few valid pixels";
      score_result(res);
      out.push_back(std::move(res));
      continue;
    }
    Rng rng(stream_seed(seed, fi));
    const std::size_t n = cfg.per_image;
    for (std::size_t i = 0; i < n; ++i) {
      std::swap(valid[i], valid[i + uniform_index(rng, valid.size() - i)]);
    }
    std::vector<PointMatch> matches(n);
    std::vector<Correspondence> corrs(n);
    for (std::size_t i = 0; i < n; ++i) {
      const int u = static_cast<int>(valid[i] % static_cast<std::uint32_t>(f.depth->width));
      const int v = static_cast<int>(valid[i] / static_cast<std::uint32_t>(f.depth->width));
      const WorldPoint truth_point = backproject(Pixel(u, v), f.depth->at(u, v), *f.pose, f.intrinsics);
      matches[i] = {Pixel(u, v), tree.point(tree.nearest(truth_point))};
      corrs[i] = {matches[i].pixel, {matches[i].point}};
    }

    // Best four-point subset: most inliers, then smallest inlier cost.
    std::optional<Pose> best;
    std::size_t best_inliers = 0;
    double best_cost = kInf;
    std::array<PointMatch, 4> sample;
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = a + 1; b < n; ++b) {
        for (std::size_t c = b + 1; c < n; ++c) {
          for (std::size_t d = c + 1; d < n; ++d) {
            sample = {matches[a], matches[b], matches[c], matches[d]};
            const auto pose = solve_pnp4(std::span<const PointMatch, 4>(sample), f.intrinsics);
            if (!pose) continue;
            std::size_t inliers = 0;
            double cost = 0.0;
            for (const auto& m : matches) {
              const double e = reprojection_error(m.pixel, *pose, m.point, f.intrinsics);
              if (e < cfg.refine.inlier_threshold_px) {
                ++inliers;
                cost += e * e;
              }
            }
            if (inliers > best_inliers || (inliers == best_inliers && cost < best_cost)) {
              best = pose;
              best_inliers = inliers;
              best_cost = cost;
            }
          }
        }
      }
    }
    if (!best) {
      res.failure = "degenerate";
    } else {
      res.estimate = n > 4 ? refine_pose(*best, corrs, f.intrinsics, cfg.refine).pose : *best;
    }
    score_result(res);
    out.push_back(std::move(res));
  }
  return out;
}

std::string report_to_json(const Report& report) {
  nlohmann::ordered_json j;
  j["schema_version"] = kReportSchemaVersion;
  j["frames"] = report.frames;
  j["failures"] = report.failures;
  j["median_translation_m"] = number_or_null(report.median_trans_m);
  j["median_rotation_deg"] = number_or_null(report.median_rot_deg);
  j["success_5cm_5deg"] = report.success_fine;
  j["success_20cm_20deg"] = report.success_coarse;
  auto bins = nlohmann::ordered_json::array();
  for (const auto& b : report.bins) {
    nlohmann::ordered_json row;
    row["bin"] = b.label;
    row["lower"] = b.lower;
    row["upper"] = number_or_null(b.upper);
    row["count"] = b.count;
    row["success_5cm_5deg"] = b.success_fine ? nlohmann::ordered_json(*b.success_fine) : nullptr;
    row["success_20cm_20deg"] = b.success_coarse ? nlohmann::ordered_json(*b.success_coarse) : nullptr;
    bins.push_back(row);
  }
  j["bins"] = bins;
  nlohmann::ordered_json cfg = nlohmann::ordered_json::object();
  for (const auto& [k, v] : report.config) cfg[k] = v;
  j["config"] = cfg;
  j["seed"] = report.seed;
  return j.dump(2) + "\n";
}

std::string report_to_csv(const Report& report) {
  std::ostringstream out;
  out << "bin,metric,value\n";
  out << "all,frames," << report.frames << "\n";
  out << "all,failures," << report.failures << "\n";
  out << "all,median_translation_m," << format_double(report.median_trans_m) << "\n";
  out << "all,median_rotation_deg," << format_double(report.median_rot_deg) << "\n";
  out << "all,success_5cm_5deg," << format_double(report.success_fine) << "\n";
  out << "all,success_20cm_20deg," << format_double(report.success_coarse) << "\n";
  for (const auto& b : report.bins) {
    out << '"' << b.label << "\",count," << b.count << "\n";
    out << '"' << b.label << "\",success_5cm_5deg,"
        << (b.success_fine ? format_double(*b.success_fine) : std::string()) << "\n";
    out << '"' << b.label << "\",success_20cm_20deg,"
        << (b.success_coarse ? format_double(*b.success_coarse) : std::string()) << "\n";
  }
  return out.str();
}

namespace {

void write_pose(std::ostream& out, const Pose& p) {
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) out << ',' << format_double(p.rotation(r, c));
    out << ',' << format_double(p.translation[r]);
  }
}

}  // namespace

std::string results_to_csv(std::span<const LocalizationResult> results) {
  std::ostringstream out;
  out << "scene,sequence,index,status,trans_err_m,rot_err_deg";
  for (const char* prefix : {"est", "gt"}) {
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 4; ++c) out << ',' << prefix << '_' << r << c;
    }
  }
  out << "\n";
  for (const auto& r : results) {
    out << r.id.scene << ',' << r.id.sequence << ',' << r.id.index << ','
        << (r.failed() ? (r.failure.empty() ? std::string("failed") : r.failure) : std::string("ok"))
        << ',' << format_double(r.trans_err) << ',' << format_double(r.rot_err);
    write_pose(out, r.estimate.value_or(Pose::identity()));
    write_pose(out, r.truth);
    out << "\n";
  }
  return out.str();
}

std::string timings_to_csv(std::span<const LocalizationResult> results) {
  std::ostringstream out;
  out << "frame,runtime_ms\n";
  for (const auto& r : results) out << r.id.to_string() << ',' << format_double(r.runtime_ms) << "\n";
  return out.str();
}

std::vector<LocalizationResult> results_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind("scene,sequence,index,status", 0) != 0) {
    throw Error(ErrorCode::BadFormat, "results: missing header");
  }
  std::vector<LocalizationResult> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ls(line);
    std::string tok;
    while (std::getline(ls, tok, ',')) f.push_back(tok);
    if (f.size() != 30) {
      throw Error(ErrorCode::BadFormat, "results: line " + std::to_string(lineno) + " has " +
                                            std::to_string(f.size()) + " fields, expected 30");
    }
    try {
      LocalizationResult r;
      r.id = FrameId{f[0], f[1], std::stoi(f[2])};
      auto pose_at = [&](std::size_t base) {
        Pose p;
        for (int row = 0; row < 3; ++row) {
          for (int c = 0; c < 3; ++c) p.rotation(row, c) = std::stod(f[base + 4 * row + c]);
          p.translation[row] = std::stod(f[base + 4 * row + 3]);
        }
        return p;
      };
      if (f[3] == "ok") {
        r.estimate = pose_at(6);
      } else {
        r.failure = f[3];
      }
      r.truth = pose_at(18);
      score_result(r);
      out.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::BadFormat, "results: line " + std::to_string(lineno) + " is malformed");
    }
  }
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write " + path.string());
  out << text;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingFile, "cannot read " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace fsreloc
