/**************************************************************************
* m2e
*
* Copyright m2e Authors. All Rights Reserved.
*
* Licensed under the Apache License, Version 2.0 (the "License");
* you may not use this file except in compliance with the License.
* You may obtain a copy of the License at
*
*     http://www.apache.org/licenses/LICENSE-2.0
*
* Unless required by applicable law or agreed to in writing, software
* distributed under the License is distributed on an "AS IS" BASIS,
* WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
* See the License for the specific language governing permissions and
* limitations under the License.
**************************************************************************/

#pragma once

#include <string>
#include <vector>

#include "m2e/geometry.hpp"

namespace m2e {

// One 3D-2D point match: an image observation and its map point.
struct PointMatch {
  Vec2 pixel = Vec2::Zero();
  Vec3 world = Vec3::Zero();
};

// One 3D-2D line match: an observed image segment and its map segment.
// Endpoint order carries no meaning; the constraint is line-to-plane.
struct LineMatch {
  std::array<Vec2, 2> pixel_endpoints{Vec2::Zero(), Vec2::Zero()};
  std::array<Vec3, 2> world_endpoints{Vec3::Zero(), Vec3::Zero()};
};

// Returns a diagnostic string when the match violates its invariants
// (finiteness; for lines, distinct endpoints: > 1 px, > 1e-6 map units).
// Empty string means valid.
std::string validate_match(const PointMatch& match);
std::string validate_match(const LineMatch& match);

// All candidate matches for one query frame plus the measured attitude.
struct MatchSet {
  std::vector<PointMatch> points;
  std::vector<LineMatch> lines;
  Attitude attitude;
  Intrinsics intrinsics{500.0, 500.0, 320.0, 240.0};
};

}  // namespace m2e
