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

#include "m2e/refinement.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <numbers>

namespace m2e {

namespace {

constexpr double kSentinelPx = 1e6;
constexpr double kCostEps = 1e-10;
constexpr double kGradEps = 1e-10;
constexpr int kMaxIterations = 100;
constexpr double kInitialDamping = 1e-4;
constexpr double kMaxDamping = 1e15;

int parameter_count(RefinementMode mode) { return mode == RefinementMode::FourDoF ? 4 : 6; }

struct Params {
  double yaw, pitch, roll;
  Vec3 t;

  static Params from_pose(const Pose& p) {
    return {p.yaw, p.attitude.pitch(), p.attitude.roll(), p.translation};
  }
  // `fixed` keeps the caller's attitude object bit-for-bit (FourDoF contract).
  Pose to_pose(const Attitude* fixed) const {
    return Pose{wrap_angle(yaw), fixed ? *fixed : Attitude(pitch, roll), t};
  }
};

// Derivatives of R = Rz(yaw)Ry(pitch)Rx(roll) via the generator matrices:
// dR/dyaw = Rz' Ry Rx and so on.
struct RotationBlocks {
  Mat3 r;
  Mat3 d_yaw;
  Mat3 d_pitch;
  Mat3 d_roll;
};

RotationBlocks rotation_blocks(const Params& p) {
  Mat3 rz = rot_z(p.yaw), ry = rot_y(p.pitch), rx = rot_x(p.roll);
  Mat3 sz = Mat3::Zero(), sy = Mat3::Zero(), sx = Mat3::Zero();
  sz(0, 1) = -1.0;
  sz(1, 0) = 1.0;
  sy(0, 2) = 1.0;
  sy(2, 0) = -1.0;
  sx(1, 2) = -1.0;
  sx(2, 1) = 1.0;
  RotationBlocks b;
  b.r = rz * ry * rx;
  b.d_yaw = rz * sz * ry * rx;
  b.d_pitch = rz * ry * sy * rx;
  b.d_roll = rz * ry * rx * sx;
  return b;
}

int residual_count(const RefinementProblem& problem) {
  return 2 * static_cast<int>(problem.points.size()) +
         2 * static_cast<int>(problem.lines.size());
}

// Shared residual/Jacobian evaluation; jac may be null.
void evaluate(const Params& p, const RefinementProblem& problem, Eigen::VectorXd& res,
              Eigen::MatrixXd* jac) {
  const Intrinsics& k = problem.intrinsics;
  const int n_params = parameter_count(problem.mode);
  res.setZero(residual_count(problem));
  if (jac) jac->setZero(residual_count(problem), n_params);

  RotationBlocks blocks = rotation_blocks(p);

  // d(pixel)/d(params) for one world point; returns false behind the camera.
  auto project = [&](const Vec3& world, Vec2& pixel,
                     Eigen::Matrix<double, 2, Eigen::Dynamic>* dpix) {
    Vec3 cam = blocks.r * world + p.t;
    if (!(cam.z() > tol().min_depth)) return false;
    double iz = 1.0 / cam.z();
    pixel = Vec2(k.fx() * cam.x() * iz + k.cx(), k.fy() * cam.y() * iz + k.cy());
    if (dpix) {
      Eigen::Matrix<double, 2, 3> dp_dcam;
      dp_dcam << k.fx() * iz, 0.0, -k.fx() * cam.x() * iz * iz,
                 0.0, k.fy() * iz, -k.fy() * cam.y() * iz * iz;
      Eigen::Matrix<double, 3, Eigen::Dynamic> dcam(3, n_params);
      if (problem.mode == RefinementMode::FourDoF) {
        dcam.col(0) = blocks.d_yaw * world;
        dcam.block<3, 3>(0, 1) = Mat3::Identity();
      } else {
        dcam.col(0) = blocks.d_yaw * world;
        dcam.col(1) = blocks.d_pitch * world;
        dcam.col(2) = blocks.d_roll * world;
        dcam.block<3, 3>(0, 3) = Mat3::Identity();
      }
      *dpix = dp_dcam * dcam;
    }
    return true;
  };

  int row = 0;
  Eigen::Matrix<double, 2, Eigen::Dynamic> dpix(2, n_params);
  for (const PointMatch& match : problem.points) {
    Vec2 pixel;
    if (project(match.world, pixel, jac ? &dpix : nullptr)) {
      res.segment<2>(row) = pixel - match.pixel;
      if (jac) jac->block(row, 0, 2, n_params) = dpix;
    } else {
      res.segment<2>(row).setConstant(kSentinelPx);
    }
    row += 2;
  }
  for (const LineMatch& match : problem.lines) {
    Vec2 g = match.pixel_endpoints[1] - match.pixel_endpoints[0];
    double len = g.norm();
    Vec2 normal = len > 1e-12 ? Vec2(-g.y() / len, g.x() / len) : Vec2(0, 0);
    for (int e = 0; e < 2; ++e) {
      Vec2 pixel;
      if (len > 1e-12 &&
          project(match.world_endpoints[e], pixel, jac ? &dpix : nullptr)) {
        res(row) = normal.dot(pixel - match.pixel_endpoints[0]);
        if (jac) jac->row(row).head(n_params) = normal.transpose() * dpix;
      } else {
        res(row) = kSentinelPx;
      }
      ++row;
    }
  }
}

bool cheirality_ok(const Params& p, const RefinementProblem& problem) {
  Mat3 r = rot_z(p.yaw) * rot_y(p.pitch) * rot_x(p.roll);
  auto in_front = [&](const Vec3& w) { return (r * w + p.t).z() > tol().min_depth; };
  for (const PointMatch& m : problem.points) {
    if (!in_front(m.world)) return false;
  }
  for (const LineMatch& m : problem.lines) {
    if (!in_front(m.world_endpoints[0]) || !in_front(m.world_endpoints[1])) return false;
  }
  return true;
}

}  // namespace

Eigen::VectorXd residual_vector(const Pose& pose, const RefinementProblem& problem) {
  Eigen::VectorXd res;
  evaluate(Params::from_pose(pose), problem, res, nullptr);
  return res;
}

Eigen::MatrixXd residual_jacobian(const Pose& pose, const RefinementProblem& problem) {
  Eigen::VectorXd res;
  Eigen::MatrixXd jac;
  evaluate(Params::from_pose(pose), problem, res, &jac);
  return jac;
}

RefinementReport refine(const RefinementProblem& problem) {
  if (problem.points.size() + problem.lines.size() < 2) {
    throw std::invalid_argument("refine: need at least two entities");
  }
  const bool six_dof = problem.mode == RefinementMode::SixDoF;

  Params params = Params::from_pose(problem.initial);
  Eigen::VectorXd res;
  Eigen::MatrixXd jac;
  evaluate(params, problem, res, &jac);
  double cost = res.squaredNorm();

  RefinementReport report;
  report.initial_cost = cost;
  report.pose = problem.initial;

  double damping = kInitialDamping;
  bool converged = false;
  int iterations = 0;

  while (iterations < kMaxIterations) {
    Eigen::VectorXd gradient = jac.transpose() * res;
    if (gradient.norm() < kGradEps) {
      converged = true;
      break;
    }
    ++iterations;

    Eigen::MatrixXd normal = jac.transpose() * jac;
    normal.diagonal().array() += damping;
    Eigen::VectorXd step = normal.ldlt().solve(-gradient);
    if (!step.allFinite()) {
      if (damping >= kMaxDamping) throw SingularNormalEquationsError();
      damping *= 10.0;
      continue;
    }

    Params trial = params;
    trial.yaw += step(0);
    if (six_dof) {
      trial.pitch += step(1);
      trial.roll += step(2);
      trial.t += step.segment<3>(3);
    } else {
      trial.t += step.segment<3>(1);
    }

    bool acceptable = (!six_dof || std::abs(wrap_angle(trial.pitch)) < std::numbers::pi / 2.0 - 1e-9) &&
                      cheirality_ok(trial, problem);
    double trial_cost = std::numeric_limits<double>::infinity();
    Eigen::VectorXd trial_res;
    Eigen::MatrixXd trial_jac;
    if (acceptable) {
      evaluate(trial, problem, trial_res, &trial_jac);
      trial_cost = trial_res.squaredNorm();
    }

    if (trial_cost < cost) {
      double decrease = cost - trial_cost;
      params = trial;
      res = std::move(trial_res);
      jac = std::move(trial_jac);
      cost = trial_cost;
      damping = std::max(damping * 0.1, 1e-12);
      if (decrease < kCostEps * std::max(cost, 1e-300)) {
        converged = true;
        break;
      }
    } else {
      if (damping >= kMaxDamping) {
        // Damping exhausted: fail loudly when the Jacobian is actually rank
        // deficient, otherwise stop at the best point found so far.
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(jac);
        double smallest = svd.singularValues()(svd.singularValues().size() - 1);
        if (smallest < 1e-12 * std::max(1.0, svd.singularValues()(0))) {
          throw SingularNormalEquationsError();
        }
        break;
      }
      damping *= 10.0;
    }
  }

  const Attitude* fixed_attitude = six_dof ? nullptr : &problem.initial.attitude;
  report.pose = params.to_pose(fixed_attitude);
  report.final_cost = cost;
  report.iterations = iterations;
  report.converged = converged;
  return report;
}

}  // namespace m2e
