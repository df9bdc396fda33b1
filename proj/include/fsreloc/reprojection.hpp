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
#include <span>
#include <vector>

#include "fsreloc/geometry.hpp"

namespace fsreloc {

/// A query pixel and its putative scene coordinates (one-to-many).
struct Correspondence {
  Pixel pixel = Pixel::Zero();
  std::vector<WorldPoint> candidates;
};

/// Pixel distance between `pix` and the projection of `m` under `pose`;
/// +infinity when `m` is behind the camera.
double reprojection_error(const Pixel& pix, const Pose& pose, const WorldPoint& m,
                          const Intrinsics& k);

struct CandidateChoice {
  std::size_t index = 0;
  double error = 0.0;
};

/// Candidate with the smallest reprojection error; ties resolve to the
/// earliest candidate, so an all-behind-camera set yields index 0 with +inf.
CandidateChoice optimal_candidate(const Pixel& pix, const Pose& pose,
                                  std::span<const WorldPoint> candidates, const Intrinsics& k);

}  // namespace fsreloc
