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

#include "m2e/matches.hpp"

#include <cmath>

namespace m2e {

namespace {

bool all_finite(const Vec2& v) { return std::isfinite(v.x()) && std::isfinite(v.y()); }
bool all_finite(const Vec3& v) {
  return std::isfinite(v.x()) && std::isfinite(v.y()) && std::isfinite(v.z());
}

}  // namespace

std::string validate_match(const PointMatch& match) {
  if (!all_finite(match.pixel) || !all_finite(match.world)) {
    return "point match has non-finite coordinates";
  }
  return {};
}

std::string validate_match(const LineMatch& match) {
  for (const Vec2& p : match.pixel_endpoints) {
    if (!all_finite(p)) return "line match has non-finite pixel coordinates";
  }
  for (const Vec3& w : match.world_endpoints) {
    if (!all_finite(w)) return "line match has non-finite world coordinates";
  }
  if ((match.pixel_endpoints[1] - match.pixel_endpoints[0]).norm() <= 1.0) {
    return "line match pixel endpoints closer than 1 px";
  }
  if ((match.world_endpoints[1] - match.world_endpoints[0]).norm() <= 1e-6) {
    return "line match world endpoints closer than 1e-6";
  }
  return {};
}

}  // namespace m2e
