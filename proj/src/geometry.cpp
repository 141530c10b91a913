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

#include "m2e/geometry.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <cmath>
#include <numbers>

namespace m2e {

namespace {

constexpr double kPi = std::numbers::pi;

bool is_rotation(const Mat3& r, double eps) {
  return (r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff() <= eps &&
         r.determinant() > 0.0;
}

}  // namespace

double wrap_angle(double radians) {
  double r = std::fmod(radians + kPi, 2.0 * kPi);
  if (r <= 0.0) r += 2.0 * kPi;
  return r - kPi;
}

Attitude::Attitude(double pitch, double roll) {
  pitch_ = wrap_angle(pitch);
  roll_ = wrap_angle(roll);
  if (!(std::abs(pitch_) < kPi / 2.0)) {
    throw std::invalid_argument("Attitude: pitch must lie in (-pi/2, pi/2)");
  }
}

Mat3 rot_x(double a) {
  double c = std::cos(a), s = std::sin(a);
  Mat3 r;
  r << 1, 0, 0,
       0, c, -s,
       0, s, c;
  return r;
}

Mat3 rot_y(double a) {
  double c = std::cos(a), s = std::sin(a);
  Mat3 r;
  r << c, 0, s,
       0, 1, 0,
       -s, 0, c;
  return r;
}

Mat3 rot_z(double a) {
  double c = std::cos(a), s = std::sin(a);
  Mat3 r;
  r << c, -s, 0,
       s, c, 0,
       0, 0, 1;
  return r;
}

Mat3 rotation_from_ypr(double yaw, const Attitude& attitude) {
  return rot_z(yaw) * rot_y(attitude.pitch()) * rot_x(attitude.roll());
}

Mat3 attitude_rotation(const Attitude& attitude) {
  return rot_y(attitude.pitch()) * rot_x(attitude.roll());
}

YawPitchRoll ypr_from_rotation(const Mat3& rotation) {
  if (!is_rotation(rotation, 1e-9)) {
    throw std::invalid_argument("ypr_from_rotation: input is not a rotation");
  }
  if (std::abs(rotation(2, 0)) > 1.0 - 1e-9) {
    throw GimbalLockError();
  }
  YawPitchRoll ypr;
  ypr.pitch = std::asin(-rotation(2, 0));
  ypr.roll = std::atan2(rotation(2, 1), rotation(2, 2));
  ypr.yaw = std::atan2(rotation(1, 0), rotation(0, 0));
  return ypr;
}

RigidTransform::RigidTransform(const Mat3& rotation, const Vec3& translation)
    : rotation_(rotation), translation_(translation) {
  // Allow a little slack over the strict tolerance so that long composition
  // chains of valid transforms do not spuriously throw.
  if (!is_rotation(rotation_, 64.0 * tol().orthonormality)) {
    throw std::invalid_argument("RigidTransform: rotation is not orthonormal with det +1");
  }
}

RigidTransform compose(const RigidTransform& a, const RigidTransform& b) {
  return RigidTransform(a.rotation() * b.rotation(),
                        a.rotation() * b.translation() + a.translation());
}

RigidTransform invert(const RigidTransform& a) {
  Mat3 rt = a.rotation().transpose();
  return RigidTransform(rt, -(rt * a.translation()));
}

Intrinsics::Intrinsics(double fx, double fy, double cx, double cy)
    : fx_(fx), fy_(fy), cx_(cx), cy_(cy) {
  if (!(fx > 0.0) || !(fy > 0.0)) {
    throw std::invalid_argument("Intrinsics: focal lengths must be positive");
  }
}

ProjectionRay::ProjectionRay(const Vec3& direction) {
  double n = direction.norm();
  if (!(n > 0.0) || !std::isfinite(n)) {
    throw std::invalid_argument("ProjectionRay: zero or non-finite direction");
  }
  direction_ = direction / n;
  if (!(direction_.z() > 0.0)) {
    throw std::invalid_argument("ProjectionRay: direction must point in front of the camera");
  }
}

ProjectionRay pixel_to_ray(const Intrinsics& intrinsics, const Vec2& pixel) {
  Vec3 d((pixel.x() - intrinsics.cx()) / intrinsics.fx(),
         (pixel.y() - intrinsics.cy()) / intrinsics.fy(), 1.0);
  return ProjectionRay(d);
}

Vec2 project_camera_point(const Intrinsics& intrinsics, const Vec3& camera_point) {
  if (!(camera_point.z() > tol().min_depth)) {
    throw std::invalid_argument("project_camera_point: point behind the camera");
  }
  return Vec2(intrinsics.fx() * camera_point.x() / camera_point.z() + intrinsics.cx(),
              intrinsics.fy() * camera_point.y() / camera_point.z() + intrinsics.cy());
}

RigidTransform frame_from_three_points(const std::array<Vec3, 3>& src,
                                       const std::array<Vec3, 3>& dst) {
  auto scale_of = [](const std::array<Vec3, 3>& p) {
    return std::max({(p[1] - p[0]).norm(), (p[2] - p[0]).norm(), (p[2] - p[1]).norm(), 1.0});
  };
  const double scale = std::max(scale_of(src), scale_of(dst));

  auto collinear = [&](const std::array<Vec3, 3>& p) {
    return (p[1] - p[0]).cross(p[2] - p[0]).norm() <= tol().geometric * scale * scale;
  };
  if (collinear(src)) throw DegenerateTripleError("frame_from_three_points: src triple is collinear");
  if (collinear(dst)) throw DegenerateTripleError("frame_from_three_points: dst triple is collinear");

  for (int i = 0; i < 3; ++i) {
    for (int j = i + 1; j < 3; ++j) {
      double ds = (src[i] - src[j]).norm();
      double dd = (dst[i] - dst[j]).norm();
      if (std::abs(ds - dd) > tol().geometric * scale) throw NotCongruentError();
    }
  }

  Vec3 cs = (src[0] + src[1] + src[2]) / 3.0;
  Vec3 cd = (dst[0] + dst[1] + dst[2]) / 3.0;
  Mat3 h = Mat3::Zero();
  for (int i = 0; i < 3; ++i) h += (src[i] - cs) * (dst[i] - cd).transpose();

  Eigen::JacobiSVD<Mat3> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 d = Mat3::Identity();
  d(2, 2) = (svd.matrixV() * svd.matrixU().transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  Mat3 r = svd.matrixV() * d * svd.matrixU().transpose();
  return RigidTransform(r, cd - r * cs);
}

}  // namespace m2e
