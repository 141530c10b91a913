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
#include <array>
#include <stdexcept>

#include "m2e/tolerances.hpp"

namespace m2e {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

struct GimbalLockError : std::runtime_error {
  GimbalLockError() : std::runtime_error("ypr_from_rotation: pitch at +/-90 degrees") {}
};
struct DegenerateTripleError : std::runtime_error {
  explicit DegenerateTripleError(const char* what) : std::runtime_error(what) {}
};
struct NotCongruentError : std::runtime_error {
  NotCongruentError() : std::runtime_error("frame_from_three_points: triples are not congruent") {}
};

// Wraps an angle to (-pi, pi].
double wrap_angle(double radians);

// Measured pitch/roll pair (radians). Roll is wrapped to (-pi, pi]; pitch
// must land in (-pi/2, pi/2) after wrapping.
class Attitude {
 public:
  Attitude() : pitch_(0.0), roll_(0.0) {}
  Attitude(double pitch, double roll);

  double pitch() const { return pitch_; }
  double roll() const { return roll_; }

  bool operator==(const Attitude& o) const = default;

 private:
  double pitch_;
  double roll_;
};

// Elementary rotations about the coordinate axes.
Mat3 rot_x(double a);
Mat3 rot_y(double a);
Mat3 rot_z(double a);

// Intrinsic Z-Y-X product Rz(yaw)*Ry(pitch)*Rx(roll). This is the one angle
// convention used everywhere in this library.
Mat3 rotation_from_ypr(double yaw, const Attitude& attitude);

// Attitude part Ry(pitch)*Rx(roll); the yaw factor multiplies on the left.
Mat3 attitude_rotation(const Attitude& attitude);

struct YawPitchRoll {
  double yaw;
  double pitch;
  double roll;
};

// Inverse of rotation_from_ypr. Throws GimbalLockError when |R(2,0)| is
// within 1e-9 of 1. R must be a proper rotation.
YawPitchRoll ypr_from_rotation(const Mat3& rotation);

// Proper rigid transform x_dst = R * x_src + t. The rotation is validated to
// tol().orthonormality on construction.
class RigidTransform {
 public:
  RigidTransform() : rotation_(Mat3::Identity()), translation_(Vec3::Zero()) {}
  RigidTransform(const Mat3& rotation, const Vec3& translation);

  const Mat3& rotation() const { return rotation_; }
  const Vec3& translation() const { return translation_; }

  Vec3 apply(const Vec3& x) const { return rotation_ * x + translation_; }

  static RigidTransform identity() { return RigidTransform(); }

 private:
  Mat3 rotation_;
  Vec3 translation_;
};

RigidTransform compose(const RigidTransform& a, const RigidTransform& b);
RigidTransform invert(const RigidTransform& a);

// Gravity-aligned pose, the estimation target: x_camera = R * x_world + t
// with R = Rz(yaw)*Ry(pitch)*Rx(roll). Pitch/roll come from the inertial
// measurement; yaw and translation are what the solvers estimate.
struct Pose {
  double yaw = 0.0;
  Attitude attitude;
  Vec3 translation = Vec3::Zero();

  Mat3 rotation() const { return rotation_from_ypr(yaw, attitude); }
  RigidTransform transform() const { return RigidTransform(rotation(), translation); }
  Vec3 apply(const Vec3& world) const { return rotation() * world + translation; }
};

// Pinhole intrinsics in pixels; fx, fy must be positive.
class Intrinsics {
 public:
  Intrinsics(double fx, double fy, double cx, double cy);

  double fx() const { return fx_; }
  double fy() const { return fy_; }
  double cx() const { return cx_; }
  double cy() const { return cy_; }

 private:
  double fx_, fy_, cx_, cy_;
};

// Unit view ray in the camera frame; +z forward (in front of the camera),
// +u right, +v down in the image.
class ProjectionRay {
 public:
  explicit ProjectionRay(const Vec3& direction);

  const Vec3& direction() const { return direction_; }

 private:
  Vec3 direction_;
};

// Back-projects a pixel: direction proportional to ((u-cx)/fx, (v-cy)/fy, 1).
ProjectionRay pixel_to_ray(const Intrinsics& intrinsics, const Vec2& pixel);

// Projects a camera-frame point; requires depth > tol().min_depth.
Vec2 project_camera_point(const Intrinsics& intrinsics, const Vec3& camera_point);

// The unique rigid transform mapping src[i] -> dst[i]. Both triples must be
// non-collinear and congruent (pairwise distances equal to tol().geometric,
// relative). Throws DegenerateTripleError / NotCongruentError.
RigidTransform frame_from_three_points(const std::array<Vec3, 3>& src,
                                       const std::array<Vec3, 3>& dst);

}  // namespace m2e
