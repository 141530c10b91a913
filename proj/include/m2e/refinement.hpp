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

#include "m2e/matches.hpp"

namespace m2e {

struct SingularNormalEquationsError : std::runtime_error {
  SingularNormalEquationsError()
      : std::runtime_error("refine: normal equations singular with damping exhausted") {}
};

enum class RefinementMode { FourDoF, SixDoF };

// Least-squares pose polish over a RANSAC inlier set. FourDoF keeps the
// measured pitch/roll fixed and optimizes (yaw, T1, T2, T3); SixDoF also
// optimizes pitch and roll.
struct RefinementProblem {
  Pose initial;
  std::vector<PointMatch> points;
  std::vector<LineMatch> lines;
  RefinementMode mode = RefinementMode::FourDoF;
  Intrinsics intrinsics{500.0, 500.0, 320.0, 240.0};
};

struct RefinementReport {
  Pose pose;
  double initial_cost = 0.0;
  double final_cost = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Stacked pixel residuals at `pose`: two reprojection components per point,
// then two perpendicular endpoint distances per line, in input order.
// Entities behind the camera contribute a constant sentinel of 1e6 px.
Eigen::VectorXd residual_vector(const Pose& pose, const RefinementProblem& problem);

// Analytic Jacobian of residual_vector w.r.t. the active parameters:
// (yaw, T1, T2, T3) in FourDoF mode, (yaw, pitch, roll, T1, T2, T3) in
// SixDoF. Sentinel rows are zero.
Eigen::MatrixXd residual_jacobian(const Pose& pose, const RefinementProblem& problem);

// Levenberg-damped Gauss-Newton on the squared residual norm. Terminates on
// relative cost decrease < 1e-10, gradient norm < 1e-10, or 100 iterations.
// Steps that push an entity behind the camera are rejected rather than
// evaluated through the sentinel. Throws SingularNormalEquationsError.
RefinementReport refine(const RefinementProblem& problem);

}  // namespace m2e
