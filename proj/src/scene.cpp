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


#include "fsreloc/scene.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <regex>
#include <sstream>

#include "fsreloc/error.hpp"

namespace fsreloc {

namespace fs = std::filesystem;

std::string FrameId::to_string() const {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame-%06d", index);
  std::string s = scene.empty() ? std::string() : scene + "/";
  if (!sequence.empty()) s += sequence + "/";
  return s + buf;
}

void Frame::validate() const {
  require(intrinsics.is_valid(), "frame " + id.to_string() + ": invalid intrinsics");
  require(rgb.width == intrinsics.width && rgb.height == intrinsics.height,
          "frame " + id.to_string() + ": rgb size does not match intrinsics",
          ErrorCode::DimensionMismatch);
  if (depth) {
    require(depth->width == rgb.width && depth->height == rgb.height,
            "frame " + id.to_string() + ": depth size does not match rgb",
            ErrorCode::DimensionMismatch);
  }
}

const Sequence* Scene::find(const std::string& sequence) const {
  for (const auto& s : sequences) {
    if (s.name == sequence) return &s;
  }
  return nullptr;
}

std::vector<Frame> Scene::frames_of(const std::vector<std::string>& names) const {
  std::vector<Frame> out;
  for (const auto& n : names) {
    const Sequence* s = find(n);
    require(s != nullptr, "scene " + name + " has no sequence " + n, ErrorCode::MissingFile);
    out.insert(out.end(), s->frames.begin(), s->frames.end());
  }
  return out;
}

std::vector<Frame> Scene::all_frames() const {
  std::vector<Frame> out;
  for (const auto& s : sequences) out.insert(out.end(), s.frames.begin(), s.frames.end());
  return out;
}

namespace {

std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingFile, "cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write " + path.string());
  out << text;
}

std::vector<double> parse_numbers(const std::string& line) {
  std::vector<double> values;
  std::istringstream ss(line);
  std::string token;
  while (ss >> token) {
    double v = 0.0;
    const auto res = std::from_chars(token.data(), token.data() + token.size(), v);
    if (res.ec != std::errc() || res.ptr != token.data() + token.size()) {
      throw Error(ErrorCode::MalformedPose, "not a number: '" + token + "'");
    }
    values.push_back(v);
  }
  return values;
}

// "sequence1" or "Sequence 1" -> "seq-01".
std::string split_entry_to_sequence(const std::string& entry) {
  std::string digits;
  for (char c : entry) {
    if (std::isdigit(static_cast<unsigned char>(c))) digits += c;
  }
  if (digits.empty()) return entry;
  char buf[32];
  std::snprintf(buf, sizeof buf, "seq-%02d", std::stoi(digits));
  return buf;
}

std::vector<std::string> read_split(const fs::path& path) {
  std::vector<std::string> out;
  std::istringstream ss(read_text(path));
  std::string line;
  while (std::getline(ss, line)) {
    line.erase(std::remove_if(line.begin(), line.end(),
                              [](unsigned char c) { return std::isspace(c); }),
               line.end());
    if (!line.empty()) out.push_back(split_entry_to_sequence(line));
  }
  return out;
}

std::string sequence_to_split_entry(const std::string& sequence) {
  std::string digits;
  for (char c : sequence) {
    if (std::isdigit(static_cast<unsigned char>(c))) digits += c;
  }
  return digits.empty() ? sequence : "sequence" + std::to_string(std::stoi(digits));
}

}  // namespace

Pose parse_pose_text(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::istringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    auto values = parse_numbers(line);
    if (!values.empty()) rows.push_back(std::move(values));
  }
  if (rows.size() != 4) {
    throw Error(ErrorCode::MalformedPose, "expected 4 rows, got " + std::to_string(rows.size()));
  }
  Eigen::Matrix4d m;
  for (int r = 0; r < 4; ++r) {
    if (rows[r].size() != 4) {
      throw Error(ErrorCode::MalformedPose, "expected 4 columns in row " + std::to_string(r));
    }
    for (int c = 0; c < 4; ++c) m(r, c) = rows[r][c];
  }
  if (!m.allFinite()) throw Error(ErrorCode::MalformedPose, "non-finite entries");
  constexpr double kTol = 1e-3;
  const Eigen::RowVector4d bottom(0.0, 0.0, 0.0, 1.0);
  if ((m.row(3) - bottom).cwiseAbs().maxCoeff() > kTol) {
    throw Error(ErrorCode::MalformedPose, "last row must be 0 0 0 1");
  }
  Pose p;
  p.rotation = m.topLeftCorner<3, 3>();
  p.translation = m.topRightCorner<3, 1>();
  if (!p.is_valid(kTol)) throw Error(ErrorCode::MalformedPose, "rotation is not orthonormal");
  // Dataset poses carry ~7 digits; re-project those, keep exact ones bitwise.
  if (!p.is_valid(1e-12)) p.rotation = nearest_rotation(p.rotation);
  return p;
}

std::string format_pose_text(const Pose& pose) {
  std::string out;
  char buf[64];
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) {
      double v;
      if (r == 3) {
        v = c == 3 ? 1.0 : 0.0;
      } else {
        v = c == 3 ? pose.translation[r] : pose.rotation(r, c);
      }
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out += buf;
      out += c == 3 ? '\n' : '\t';
    }
  }
  return out;
}

Intrinsics parse_intrinsics_text(const std::string& text) {
  std::vector<double> v;
  try {
    v = parse_numbers(text);
  } catch (const Error&) {
    throw Error(ErrorCode::BadFormat, "intrinsics: malformed numbers");
  }
  if (v.size() != 6) throw Error(ErrorCode::BadFormat, "intrinsics: expected 6 numbers");
  Intrinsics k{v[0], v[1], v[2], v[3], static_cast<int>(v[4]), static_cast<int>(v[5])};
  require(k.is_valid(), "intrinsics: invalid values", ErrorCode::BadFormat);
  return k;
}

std::string format_intrinsics_text(const Intrinsics& k) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g %.17g %d %d\n", k.fx, k.fy, k.cx, k.cy,
                k.width, k.height);
  return buf;
}

Scene load_seven_scenes(const fs::path& root) {
  if (!fs::is_directory(root)) {
    throw Error(ErrorCode::MissingFile, "not a directory: " + root.string());
  }
  Scene scene;
  scene.name = root.filename().string();
  if (scene.name.empty()) scene.name = root.parent_path().filename().string();

  Intrinsics k = Intrinsics::seven_scenes();
  if (fs::exists(root / "intrinsics.txt")) k = parse_intrinsics_text(read_text(root / "intrinsics.txt"));
  if (fs::exists(root / "TrainSplit.txt")) scene.train_split = read_split(root / "TrainSplit.txt");
  if (fs::exists(root / "TestSplit.txt")) scene.test_split = read_split(root / "TestSplit.txt");

  std::vector<fs::path> seq_dirs;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory() && entry.path().filename().string().starts_with("seq-")) {
      seq_dirs.push_back(entry.path());
    }
  }
  std::sort(seq_dirs.begin(), seq_dirs.end());

  static const std::regex color_re(R"(frame-(\d+)\.color\.png)");
  for (const auto& dir : seq_dirs) {
    Sequence seq;
    seq.name = dir.filename().string();
    std::vector<std::pair<int, fs::path>> stems;
    for (const auto& entry : fs::directory_iterator(dir)) {
      std::smatch match;
      const std::string name = entry.path().filename().string();
      if (std::regex_match(name, match, color_re)) {
        stems.emplace_back(std::stoi(match[1].str()), dir / name.substr(0, name.size() - 10));
      }
    }
    std::sort(stems.begin(), stems.end());
    for (const auto& [index, stem] : stems) {
      Frame f;
      f.id = {scene.name, seq.name, index};
      f.intrinsics = k;
      f.rgb = read_rgb_png(stem.string() + ".color.png");
      const fs::path depth_path = stem.string() + ".depth.png";
      if (fs::exists(depth_path)) f.depth = read_depth_png(depth_path);
      const fs::path pose_path = stem.string() + ".pose.txt";
      if (fs::exists(pose_path)) {
        try {
          f.pose = parse_pose_text(read_text(pose_path));
        } catch (const Error& e) {
          throw Error(ErrorCode::MalformedPose, pose_path.string() + ": " + e.what());
        }
      }
      f.validate();
      seq.frames.push_back(std::move(f));
    }
    scene.sequences.push_back(std::move(seq));
  }
  return scene;
}

void write_seven_scenes(const Scene& scene, const fs::path& root) {
  fs::create_directories(root);
  std::optional<Intrinsics> k;
  for (const auto& seq : scene.sequences) {
    const fs::path dir = root / seq.name;
    fs::create_directories(dir);
    for (const auto& f : seq.frames) {
      if (!k) k = f.intrinsics;
      char stem[64];
      std::snprintf(stem, sizeof stem, "frame-%06d", f.id.index);
      write_rgb_png(dir / (std::string(stem) + ".color.png"), f.rgb);
      if (f.depth) write_depth_png(dir / (std::string(stem) + ".depth.png"), *f.depth);
      if (f.pose) write_text(dir / (std::string(stem) + ".pose.txt"), format_pose_text(*f.pose));
    }
  }
  if (k) write_text(root / "intrinsics.txt", format_intrinsics_text(*k));
  auto write_split = [&](const char* file, const std::vector<std::string>& names) {
    if (names.empty()) return;
    std::string text;
    for (const auto& n : names) text += sequence_to_split_entry(n) + "\n";
    write_text(root / file, text);
  };
  write_split("TrainSplit.txt", scene.train_split);
  write_split("TestSplit.txt", scene.test_split);
}

}  // namespace fsreloc
