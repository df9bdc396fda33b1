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


#include "fsreloc/reprojection.hpp"

#include <limits>

#include "fsreloc/error.hpp"

namespace fsreloc {

double reprojection_error(const Pixel& pix, const Pose& pose, const WorldPoint& m,
                          const Intrinsics& k) {
  const auto projected = project(m, pose, k);
  if (!projected) return std::numeric_limits<double>::infinity();
  return (*projected - pix).norm();
}

CandidateChoice optimal_candidate(const Pixel& pix, const Pose& pose,
                                  std::span<const WorldPoint> candidates, const Intrinsics& k) {
  require(!candidates.empty(), "optimal_candidate: empty candidate set");
  CandidateChoice best{0, reprojection_error(pix, pose, candidates[0], k)};
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    const double e = reprojection_error(pix, pose, candidates[i], k);
    if (e < best.error) best = {i, e};
  }
  return best;
}

}  // namespace fsreloc
