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

#include <Eigen/Core>
#include <vector>

#include "m2e/matches.hpp"

namespace m2e {

enum class SolverStatus {
  Ok,
  Degenerate,           // point lies on the line
  DuplicateMatch,       // the two matches coincide in image or in world
  NoRealSolution,       // negative discriminant of the yaw equation
  IllConditioned,       // elimination pivot below threshold
  ParallelRays,         // line endpoint rays (anti)parallel
  CollinearPoints,      // P3P world points collinear
  NumericalDegeneracy,  // intermediate frame construction failed
  ParallelPlanes,       // 2L interpretation planes (anti)parallel
};

const char* to_string(SolverStatus status);

// Result of one minimal solve. On success `candidates` holds up to two poses
// (up to four for P3P); every returned pose satisfies the solver's defining
// constraint equations with residual below tol().solver_residual.
// `conditioning` reports the smallest elimination pivot magnitude.
struct SolverOutput {
  SolverStatus status = SolverStatus::Ok;
  std::vector<Pose> candidates;
  double conditioning = 0.0;

  bool ok() const { return status == SolverStatus::Ok; }
};

// Intermediate camera frame for the point+line case. Under `cam_from_query`
// the camera center moves to (0,0,-1), the first line-endpoint ray passes
// through the origin along +z, the second pierces the x axis at x = d3_x,
// and the point-feature ray pierces the z=0 plane at (a1, b1, 0).
struct IntermediateFrame1P1L {
  SolverStatus status = SolverStatus::Ok;
  RigidTransform cam_from_query;  // T_{C1 Cq}
  double a1 = 0.0;
  double b1 = 0.0;
  double d3_x = 0.0;
};

IntermediateFrame1P1L intermediate_frame_1p1l(const ProjectionRay& point_ray,
                                              const ProjectionRay& line_ray_a,
                                              const ProjectionRay& line_ray_b);

// True when the point match degenerates the 1P1L problem: the 3D point lies
// on the infinite 3D line through the endpoints (within world_tol map units)
// or the 2D point lies on the segment's image line (within px_tol pixels).
bool check_degeneracy_1p1l(const PointMatch& point, const LineMatch& line,
                           double world_tol = tol().point_on_line_world,
                           double px_tol = tol().point_on_line_px);

// Closed-form pose from one point match and one line match given the
// measured attitude. Up to two candidates, attitude copied verbatim.
SolverOutput solve_1p1l(const PointMatch& point, const LineMatch& line,
                        const Attitude& attitude, const Intrinsics& intrinsics);

// Closed-form pose from two point matches given the measured attitude.
SolverOutput solve_2p(const PointMatch& first, const PointMatch& second,
                      const Attitude& attitude, const Intrinsics& intrinsics);

// Linear system of the two-line case in the unknowns
// (cos yaw, sin yaw, T1, T2, T3). The translation component T3 never enters
// the equations, so the nullspace dimension is at least one: two line
// matches cannot determine the gravity-aligned pose. Kept as an executable
// regression of that fact.
struct TwoLinesRank {
  SolverStatus status = SolverStatus::Ok;
  Eigen::Matrix<double, 4, 5> coefficients = Eigen::Matrix<double, 4, 5>::Zero();
  Eigen::Matrix<double, 4, 1> constants = Eigen::Matrix<double, 4, 1>::Zero();
  int rank = 0;
  int nullspace_dim = 0;
};

TwoLinesRank two_lines_constraint_rank(const LineMatch& first, const LineMatch& second,
                                       const Attitude& attitude, const Intrinsics& intrinsics);

// Classic three-point resection baseline; full 6DoF, ignores the attitude.
// Up to four candidates, each reprojecting the three inputs exactly.
SolverOutput solve_p3p(const PointMatch& first, const PointMatch& second,
                       const PointMatch& third, const Intrinsics& intrinsics);

// Real roots of A*cos(x) + B*sin(x) + C = 0 in (-pi, pi], via the half-angle
// substitution with the t->infinity root (x = pi) handled explicitly.
// Returns the number of roots (0, 1, or 2).
int solve_trig_equation(double a, double b, double c, std::array<double, 2>& roots);

}  // namespace m2e
