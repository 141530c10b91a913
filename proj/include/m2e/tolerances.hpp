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

namespace m2e {

// Central numeric tolerance record. Rotation validity is checked to
// `orthonormality`; geometric constructions (frame fitting, congruence,
// collinearity) use `geometric`; solvers validate their constraint equations
// to `solver_residual` and reject eliminations whose pivot magnitude falls
// below `pivot`.
struct Tolerances {
  double orthonormality = 1e-12;
  double geometric = 1e-9;
  double solver_residual = 1e-8;
  double pivot = 1e-10;
  double point_on_line_world = 1e-6;  // 3D point-on-line distance (map units)
  double point_on_line_px = 0.5;      // 2D point-on-line distance (pixels)
  double rank_svd = 1e-9;             // singular value cutoff, relative
  double min_depth = 1e-9;            // cheirality guard for projections
};

inline const Tolerances& tol() {
  static const Tolerances t;
  return t;
}

}  // namespace m2e
