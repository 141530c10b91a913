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

#include "m2e/solvers.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <numbers>

namespace m2e {

namespace {

constexpr double kPi = std::numbers::pi;

// Rotation R(yaw) = pre * Rz(yaw) * attitude_rotation, split into its affine
// dependence on (cos yaw, sin yaw). Row entries of R are then linear in the
// two trig unknowns, which is what every elimination below relies on.
struct YawAffineRotation {
  Mat3 n_cos;
  Mat3 n_sin;
  Mat3 n_const;

  Mat3 at(double yaw) const {
    return std::cos(yaw) * n_cos + std::sin(yaw) * n_sin + n_const;
  }
};

YawAffineRotation yaw_affine(const Mat3& pre, const Attitude& attitude) {
  Mat3 m = attitude_rotation(attitude);
  Mat3 e_cos = Mat3::Zero();
  e_cos(0, 0) = 1.0;
  e_cos(1, 1) = 1.0;
  Mat3 e_sin = Mat3::Zero();
  e_sin(0, 1) = -1.0;
  e_sin(1, 0) = 1.0;
  Mat3 e_const = Mat3::Zero();
  e_const(2, 2) = 1.0;
  return {pre * e_cos * m, pre * e_sin * m, pre * e_const * m};
}

std::string_view status_name(SolverStatus s) {
  switch (s) {
    case SolverStatus::Ok: return "Ok";
    case SolverStatus::Degenerate: return "Degenerate";
    case SolverStatus::DuplicateMatch: return "DuplicateMatch";
    case SolverStatus::NoRealSolution: return "NoRealSolution";
    case SolverStatus::IllConditioned: return "IllConditioned";
    case SolverStatus::ParallelRays: return "ParallelRays";
    case SolverStatus::CollinearPoints: return "CollinearPoints";
    case SolverStatus::NumericalDegeneracy: return "NumericalDegeneracy";
    case SolverStatus::ParallelPlanes: return "ParallelPlanes";
  }
  return "Unknown";
}

// Least-squares rigid alignment of two 3-point sets (no congruence checks;
// the validated entry point is geometry's frame_from_three_points).
RigidTransform kabsch_three(const std::array<Vec3, 3>& src, const std::array<Vec3, 3>& dst) {
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

double normalized_u(const Intrinsics& k, const Vec2& px) { return (px.x() - k.cx()) / k.fx(); }
double normalized_v(const Intrinsics& k, const Vec2& px) { return (px.y() - k.cy()) / k.fy(); }

}  // namespace

const char* to_string(SolverStatus status) { return status_name(status).data(); }

int solve_trig_equation(double a, double b, double c, std::array<double, 2>& roots) {
  double norm = std::max({std::abs(a), std::abs(b), std::abs(c)});
  if (!(norm > 0.0) || !std::isfinite(norm)) return 0;
  a /= norm;
  b /= norm;
  c /= norm;

  const double eps = 1e-14;
  int n = 0;
  // Half-angle substitution t = tan(x/2): (c-a) t^2 + 2 b t + (a+c) = 0.
  if (std::abs(c - a) < eps) {
    // Degree drops; x = pi (t -> infinity) is always a root here.
    roots[n++] = kPi;
    if (std::abs(b) >= eps) {
      roots[n++] = 2.0 * std::atan(-(a + c) / (2.0 * b));
    }
  } else {
    double disc = a * a + b * b - c * c;
    if (disc < 0.0) return 0;
    double sq = std::sqrt(disc);
    double q = -(b + (b >= 0.0 ? sq : -sq));
    if (std::abs(q) < eps) {
      roots[n++] = 0.0;  // double root t = 0 (b ~ 0, a ~ -c)
    } else {
      roots[n++] = 2.0 * std::atan(q / (c - a));
      roots[n++] = 2.0 * std::atan((a + c) / q);
    }
  }
  std::sort(roots.begin(), roots.begin() + n);
  if (n == 2 && std::abs(roots[1] - roots[0]) < 1e-12) n = 1;
  return n;
}

IntermediateFrame1P1L intermediate_frame_1p1l(const ProjectionRay& point_ray,
                                              const ProjectionRay& line_ray_a,
                                              const ProjectionRay& line_ray_b) {
  IntermediateFrame1P1L out;
  const Vec3& d1 = point_ray.direction();
  const Vec3& d2 = line_ray_a.direction();
  const Vec3& d3 = line_ray_b.direction();

  double c = d2.dot(d3);
  if (std::abs(c) > 1.0 - 1e-9) {
    out.status = SolverStatus::ParallelRays;
    return out;
  }
  if (std::abs(c) < 1e-9) {
    // D3 runs off to infinity along the ray.
    out.status = SolverStatus::NumericalDegeneracy;
    return out;
  }

  out.d3_x = std::sqrt(std::max(0.0, 1.0 - c * c)) / c;
  std::array<Vec3, 3> src{Vec3::Zero(), d2, d3 / c};
  std::array<Vec3, 3> dst{Vec3(0, 0, -1), Vec3::Zero(), Vec3(out.d3_x, 0, 0)};
  try {
    out.cam_from_query = frame_from_three_points(src, dst);
  } catch (const std::runtime_error&) {
    out.status = SolverStatus::NumericalDegeneracy;
    return out;
  }

  Vec3 e = out.cam_from_query.rotation() * d1;
  if (std::abs(e.z()) < 1e-9) {
    out.status = SolverStatus::NumericalDegeneracy;
    return out;
  }
  out.a1 = e.x() / e.z();
  out.b1 = e.y() / e.z();
  return out;
}

bool check_degeneracy_1p1l(const PointMatch& point, const LineMatch& line,
                           double world_tol, double px_tol) {
  Vec3 w = line.world_endpoints[1] - line.world_endpoints[0];
  double len3 = w.norm();
  if (len3 < 1e-12) return true;
  double dist3 = (point.world - line.world_endpoints[0]).cross(w / len3).norm();

  Vec2 g = line.pixel_endpoints[1] - line.pixel_endpoints[0];
  double len2 = g.norm();
  if (len2 < 1e-12) return true;
  Vec2 n(-g.y() / len2, g.x() / len2);
  double dist2 = std::abs(n.dot(point.pixel - line.pixel_endpoints[0]));

  return dist3 < world_tol || dist2 < px_tol;
}

SolverOutput solve_1p1l(const PointMatch& point, const LineMatch& line,
                        const Attitude& attitude, const Intrinsics& intrinsics) {
  SolverOutput out;
  if (check_degeneracy_1p1l(point, line)) {
    out.status = SolverStatus::Degenerate;
    return out;
  }

  ProjectionRay d1 = pixel_to_ray(intrinsics, point.pixel);
  ProjectionRay d2 = pixel_to_ray(intrinsics, line.pixel_endpoints[0]);
  ProjectionRay d3 = pixel_to_ray(intrinsics, line.pixel_endpoints[1]);

  IntermediateFrame1P1L frame = intermediate_frame_1p1l(d1, d2, d3);
  if (frame.status != SolverStatus::Ok) {
    out.status = frame.status;
    return out;
  }

  // World points in the intermediate world frame (map point at the origin).
  const Vec3& p0 = point.world;
  Vec3 l2 = line.world_endpoints[0] - p0;
  Vec3 l3 = line.world_endpoints[1] - p0;

  YawAffineRotation basis = yaw_affine(frame.cam_from_query.rotation(), attitude);

  // Subtracting the two coplanarity equations eliminates T2 and leaves
  // A cos(yaw) + B sin(yaw) + C = 0 over the endpoint difference.
  Vec3 delta = l2 - l3;
  double ac = basis.n_cos.row(1).dot(delta);
  double bc = basis.n_sin.row(1).dot(delta);
  double cc = basis.n_const.row(1).dot(delta);

  double scale = std::max(1.0, delta.norm());
  double trig_pivot = std::hypot(ac, bc) / scale;
  out.conditioning = std::min(std::abs(frame.b1), trig_pivot);
  if (std::abs(frame.b1) < tol().pivot || trig_pivot < tol().pivot) {
    out.status = SolverStatus::IllConditioned;
    return out;
  }

  std::array<double, 2> yaws{};
  int n_roots = solve_trig_equation(ac, bc, cc, yaws);
  if (n_roots == 0) {
    out.status = SolverStatus::NoRealSolution;
    return out;
  }

  RigidTransform query_from_cam = invert(frame.cam_from_query);
  for (int i = 0; i < n_roots; ++i) {
    double yaw = yaws[i];
    Mat3 r = basis.at(yaw);
    double t2 = -r.row(1).dot(l2);
    double t3 = t2 / frame.b1 - 1.0;
    double t1 = frame.a1 * t2 / frame.b1;
    Vec3 t_c1w1(t1, t2, t3);

    double denom = std::max({1.0, l2.norm(), l3.norm(), t_c1w1.lpNorm<Eigen::Infinity>()});
    double r1 = frame.a1 * t2 - frame.b1 * t1;
    double r2 = frame.b1 * t3 - t2 + frame.b1;
    double r3 = r.row(1).dot(l2) + t2;
    double r4 = r.row(1).dot(l3) + t2;
    double residual = std::max({std::abs(r1), std::abs(r2), std::abs(r3), std::abs(r4)}) / denom;
    if (residual > tol().solver_residual) continue;

    RigidTransform cam_from_world =
        compose(query_from_cam,
                compose(RigidTransform(r, t_c1w1), RigidTransform(Mat3::Identity(), -p0)));
    Pose pose;
    pose.yaw = wrap_angle(yaw);
    pose.attitude = attitude;
    pose.translation = cam_from_world.translation();
    out.candidates.push_back(pose);
  }

  if (out.candidates.empty()) out.status = SolverStatus::IllConditioned;
  return out;
}

SolverOutput solve_2p(const PointMatch& first, const PointMatch& second,
                      const Attitude& attitude, const Intrinsics& intrinsics) {
  SolverOutput out;
  if ((first.pixel - second.pixel).norm() < 1e-6 ||
      (first.world - second.world).norm() < 1e-6) {
    out.status = SolverStatus::DuplicateMatch;
    return out;
  }

  double a1 = normalized_u(intrinsics, first.pixel);
  double b1 = normalized_v(intrinsics, first.pixel);
  double a2 = normalized_u(intrinsics, second.pixel);
  double b2 = normalized_v(intrinsics, second.pixel);

  Vec3 q = second.world - first.world;
  Mat3 m = attitude_rotation(attitude);
  double u = m.row(0).dot(q);
  double v = m.row(1).dot(q);
  double w = m.row(2).dot(q);

  // Collinearity of the first match pins t = T3 * (a1, b1, 1). The second
  // match then gives two equations linear in (cos yaw, sin yaw, T3);
  // eliminating T3 leaves the single trig equation.
  double pivot_a = a1 - a2;
  double pivot_b = b1 - b2;
  double pivot = std::max(std::abs(pivot_a), std::abs(pivot_b));

  double ac = u * pivot_b - v * pivot_a;
  double bc = -(v * pivot_b + u * pivot_a);
  double cc = w * (a1 * b2 - a2 * b1);

  double scale = std::max(1.0, q.norm());
  double trig_pivot = std::hypot(ac, bc) / scale;
  out.conditioning = std::min(pivot, trig_pivot);
  if (pivot < tol().pivot || trig_pivot < tol().pivot) {
    out.status = SolverStatus::IllConditioned;
    return out;
  }

  std::array<double, 2> yaws{};
  int n_roots = solve_trig_equation(ac, bc, cc, yaws);
  if (n_roots == 0) {
    out.status = SolverStatus::NoRealSolution;
    return out;
  }

  for (int i = 0; i < n_roots; ++i) {
    double yaw = yaws[i];
    double cy = std::cos(yaw), sy = std::sin(yaw);
    double t3;
    if (std::abs(pivot_a) >= std::abs(pivot_b)) {
      t3 = (a2 * w - u * cy + v * sy) / pivot_a;
    } else {
      t3 = (b2 * w - v * cy - u * sy) / pivot_b;
    }
    double t1 = a1 * t3;
    double t2 = b1 * t3;
    Vec3 t_c1w1(t1, t2, t3);

    Mat3 r = rot_z(yaw) * m;
    Vec3 p2_cam = r * q + t_c1w1;
    double denom = std::max({1.0, q.norm(), t_c1w1.lpNorm<Eigen::Infinity>()});
    double r5 = a1 * t2 - b1 * t1;
    double r6 = a1 * t3 - t1;
    double r7 = a2 * p2_cam.y() - b2 * p2_cam.x();
    double r8 = a2 * p2_cam.z() - p2_cam.x();
    double residual = std::max({std::abs(r5), std::abs(r6), std::abs(r7), std::abs(r8)}) / denom;
    if (residual > tol().solver_residual) continue;

    Pose pose;
    pose.yaw = wrap_angle(yaw);
    pose.attitude = attitude;
    pose.translation = r * (-first.world) + t_c1w1;
    out.candidates.push_back(pose);
  }

  if (out.candidates.empty()) out.status = SolverStatus::IllConditioned;
  return out;
}

TwoLinesRank two_lines_constraint_rank(const LineMatch& first, const LineMatch& second,
                                       const Attitude& attitude, const Intrinsics& intrinsics) {
  TwoLinesRank out;
  Vec3 d1 = pixel_to_ray(intrinsics, first.pixel_endpoints[0]).direction();
  Vec3 d2 = pixel_to_ray(intrinsics, first.pixel_endpoints[1]).direction();
  Vec3 d3 = pixel_to_ray(intrinsics, second.pixel_endpoints[0]).direction();
  Vec3 d4 = pixel_to_ray(intrinsics, second.pixel_endpoints[1]).direction();

  Vec3 n1 = d1.cross(d2);
  Vec3 n2 = d3.cross(d4);
  if (n1.norm() < 1e-12 || n2.norm() < 1e-12) {
    out.status = SolverStatus::ParallelRays;
    return out;
  }
  n1.normalize();
  n2.normalize();
  Vec3 cross = n1.cross(n2);
  if (cross.norm() < 1e-9) {
    out.status = SolverStatus::ParallelPlanes;
    return out;
  }
  Vec3 d12 = cross.normalized();
  if (d1.dot(d12) < 0.0) d12 = -d12;
  double c1 = d1.dot(d12);
  if (std::abs(c1) < 1e-9) {
    out.status = SolverStatus::NumericalDegeneracy;
    return out;
  }

  double d1_x = std::sqrt(std::max(0.0, 1.0 - c1 * c1)) / c1;
  std::array<Vec3, 3> src{Vec3::Zero(), d1 / c1, d12};
  std::array<Vec3, 3> dst{Vec3(0, 0, -1), Vec3(d1_x, 0, 0), Vec3::Zero()};
  RigidTransform cam_from_query;
  try {
    cam_from_query = frame_from_three_points(src, dst);
  } catch (const std::runtime_error&) {
    out.status = SolverStatus::NumericalDegeneracy;
    return out;
  }

  Vec3 e = cam_from_query.rotation() * d3;
  if (std::abs(e.z()) < 1e-9) {
    out.status = SolverStatus::NumericalDegeneracy;
    return out;
  }
  double a = e.x() / e.z();
  double b = e.y() / e.z();

  const Vec3& origin = first.world_endpoints[0];
  Vec3 l2 = first.world_endpoints[1] - origin;
  Vec3 l3 = second.world_endpoints[0] - origin;
  Vec3 l4 = second.world_endpoints[1] - origin;

  YawAffineRotation basis = yaw_affine(cam_from_query.rotation(), attitude);

  // Unknown ordering: (cos yaw, sin yaw, T1, T2, T3). The first interpretation
  // plane is y = 0, the second is a*y - b*x = 0; T3 never appears.
  auto plane1_row = [&](const Vec3& l, int row) {
    out.coefficients(row, 0) = basis.n_cos.row(1).dot(l);
    out.coefficients(row, 1) = basis.n_sin.row(1).dot(l);
    out.coefficients(row, 3) = 1.0;
    out.constants(row) = basis.n_const.row(1).dot(l);
  };
  auto plane2_row = [&](const Vec3& l, int row) {
    out.coefficients(row, 0) = a * basis.n_cos.row(1).dot(l) - b * basis.n_cos.row(0).dot(l);
    out.coefficients(row, 1) = a * basis.n_sin.row(1).dot(l) - b * basis.n_sin.row(0).dot(l);
    out.coefficients(row, 2) = -b;
    out.coefficients(row, 3) = a;
    out.constants(row) = a * basis.n_const.row(1).dot(l) - b * basis.n_const.row(0).dot(l);
  };

  // L1 sits at the world origin, so its plane-1 equation collapses to T2 = 0.
  out.coefficients(0, 3) = 1.0;
  plane1_row(l2, 1);
  plane2_row(l3, 2);
  plane2_row(l4, 3);

  Eigen::JacobiSVD<Eigen::Matrix<double, 4, 5>> svd(out.coefficients);
  double cut = tol().rank_svd * std::max(1.0, svd.singularValues()(0));
  out.rank = 0;
  for (int i = 0; i < svd.singularValues().size(); ++i) {
    if (svd.singularValues()(i) > cut) ++out.rank;
  }
  out.nullspace_dim = 5 - out.rank;
  return out;
}

namespace {

std::vector<double> companion_real_parts(const std::vector<double>& coeffs, double imag_tol) {
  int degree = static_cast<int>(coeffs.size()) - 1;
  std::vector<double> parts;
  if (degree == 1) {
    parts.push_back(-coeffs[0] / coeffs[1]);
    return parts;
  }
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(degree, degree);
  for (int i = 1; i < degree; ++i) companion(i, i - 1) = 1.0;
  for (int i = 0; i < degree; ++i) companion(i, degree - 1) = -coeffs[i] / coeffs[degree];
  Eigen::EigenSolver<Eigen::MatrixXd> eig(companion, false);
  for (int i = 0; i < degree; ++i) {
    std::complex<double> z = eig.eigenvalues()(i);
    if (std::abs(z.imag()) <= imag_tol * (1.0 + std::abs(z.real()))) parts.push_back(z.real());
  }
  return parts;
}

// Real roots of a quartic (or lower degree) by companion-matrix eigenvalues
// plus Newton polish. Multiple roots show up as near-real conjugate pairs, so
// the eigenvalue filter is loose and the critical points of the polynomial
// are added as extra polish seeds; a residual filter keeps only actual roots.
// Coefficients ordered from constant term upward.
std::vector<double> real_poly_roots(std::array<double, 5> coeffs) {
  int degree = 4;
  double lead_scale = 0.0;
  for (double c : coeffs) lead_scale = std::max(lead_scale, std::abs(c));
  if (!(lead_scale > 0.0)) return {};
  while (degree > 0 && std::abs(coeffs[degree]) < 1e-13 * lead_scale) --degree;
  if (degree == 0) return {};

  std::vector<double> trimmed(coeffs.begin(), coeffs.begin() + degree + 1);
  std::vector<double> seeds = companion_real_parts(trimmed, 1e-4);
  if (degree >= 2) {
    std::vector<double> derivative(degree);
    for (int i = 1; i <= degree; ++i) derivative[i - 1] = i * coeffs[i];
    for (double s : companion_real_parts(derivative, 1e-6)) seeds.push_back(s);
  }

  auto eval = [&](double x, double& value, double& slope) {
    value = 0.0;
    slope = 0.0;
    for (int i = degree; i >= 0; --i) {
      slope = slope * x + value;
      value = value * x + coeffs[i];
    }
  };

  std::vector<double> roots;
  for (double r : seeds) {
    for (int it = 0; it < 60; ++it) {
      double value, slope;
      eval(r, value, slope);
      if (std::abs(slope) < 1e-300) break;
      double step = value / slope;
      r -= step;
      if (std::abs(step) < 1e-16 * (1.0 + std::abs(r))) break;
    }
    double value, slope;
    eval(r, value, slope);
    double scale = lead_scale * std::pow(1.0 + std::abs(r), degree);
    if (std::abs(value) > 1e-9 * scale) continue;
    bool dup = false;
    for (double known : roots) {
      if (std::abs(known - r) <= 1e-8 * (1.0 + std::abs(r))) {
        dup = true;
        break;
      }
    }
    if (!dup) roots.push_back(r);
  }
  std::sort(roots.begin(), roots.end());
  return roots;
}

template <std::size_t N, std::size_t M>
std::array<double, N + M - 1> poly_mul(const std::array<double, N>& p,
                                       const std::array<double, M>& q) {
  std::array<double, N + M - 1> r{};
  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t j = 0; j < M; ++j) r[i + j] += p[i] * q[j];
  }
  return r;
}

}  // namespace

SolverOutput solve_p3p(const PointMatch& first, const PointMatch& second,
                       const PointMatch& third, const Intrinsics& intrinsics) {
  SolverOutput out;
  const PointMatch* pm[3] = {&first, &second, &third};
  for (int i = 0; i < 3; ++i) {
    for (int j = i + 1; j < 3; ++j) {
      if ((pm[i]->pixel - pm[j]->pixel).norm() < 1e-6) {
        out.status = SolverStatus::DuplicateMatch;
        return out;
      }
    }
  }

  const Vec3& x1 = first.world;
  const Vec3& x2 = second.world;
  const Vec3& x3 = third.world;
  double world_scale = std::max({1.0, (x2 - x1).norm(), (x3 - x1).norm()});
  double area = (x2 - x1).cross(x3 - x1).norm();
  out.conditioning = area / (world_scale * world_scale);
  if (out.conditioning <= tol().geometric) {
    out.status = SolverStatus::CollinearPoints;
    return out;
  }

  Vec3 f1 = pixel_to_ray(intrinsics, first.pixel).direction();
  Vec3 f2 = pixel_to_ray(intrinsics, second.pixel).direction();
  Vec3 f3 = pixel_to_ray(intrinsics, third.pixel).direction();

  // Law-of-cosines depth system with s2 = u*s1, s3 = v*s1:
  //   [A] b^2 u^2 - 2 b^2 cos_a u v + (b^2 - a^2) v^2 + 2 a^2 cos_b v - a^2 = 0
  //   [B] b^2 u^2 - 2 b^2 cos_g u + (b^2 - c^2) - c^2 v^2 + 2 c^2 cos_b v = 0
  // Solving [A]-[B] for u = N(v)/D(v) and substituting into [B] yields a
  // quartic in v.
  double cos_a = f2.dot(f3);
  double cos_b = f1.dot(f3);
  double cos_g = f1.dot(f2);
  double aa = (x2 - x3).squaredNorm();
  double bb = (x1 - x3).squaredNorm();
  double cc = (x1 - x2).squaredNorm();

  std::array<double, 3> num{aa + bb - cc, 2.0 * (cc - aa) * cos_b, aa - bb - cc};
  std::array<double, 2> den{2.0 * bb * cos_g, -2.0 * bb * cos_a};
  std::array<double, 3> g{bb - cc, 2.0 * cc * cos_b, -cc};

  // b^2 N^2 - 2 b^2 cos_g N D + G D^2 = 0
  auto nn = poly_mul(num, num);
  auto nd = poly_mul(num, den);
  auto dd = poly_mul(den, den);
  auto gdd = poly_mul(g, dd);
  std::array<double, 5> quartic{};
  for (int i = 0; i < 5; ++i) quartic[i] = bb * nn[i] + gdd[i];
  for (int i = 0; i < 4; ++i) quartic[i] -= 2.0 * bb * cos_g * nd[i];

  auto eval_poly = [](const auto& p, double x) {
    double v = 0.0;
    for (int i = static_cast<int>(p.size()) - 1; i >= 0; --i) v = v * x + p[i];
    return v;
  };

  std::vector<Pose> candidates;
  for (double v : real_poly_roots(quartic)) {
    if (!(v > 0.0)) continue;
    double s1_sq = bb / (1.0 + v * v - 2.0 * v * cos_b);
    if (!(s1_sq > 0.0) || !std::isfinite(s1_sq)) continue;
    double s1 = std::sqrt(s1_sq);

    // Recover u from the linear elimination when it is well conditioned, and
    // always try the quadratic [B] route as well; the residual checks keep
    // only consistent (u, v) pairs.
    std::vector<double> us;
    double d_val = eval_poly(den, v);
    if (std::abs(d_val) > 1e-6 * std::max(1.0, bb)) {
      us.push_back(eval_poly(num, v) / d_val);
    }
    double g_val = eval_poly(g, v);
    double disc = cos_g * cos_g - g_val / bb;
    if (disc >= 0.0) {
      us.push_back(cos_g + std::sqrt(disc));
      us.push_back(cos_g - std::sqrt(disc));
    }

    for (double u : us) {
      if (!(u > 0.0)) continue;
      double eq_scale = std::max({1.0, aa, bb, cc});
      double res_a = bb * u * u - 2.0 * bb * cos_a * u * v + (bb - aa) * v * v +
                     2.0 * aa * cos_b * v - aa;
      double res_b = bb * u * u - 2.0 * bb * cos_g * u + (bb - cc) - cc * v * v +
                     2.0 * cc * cos_b * v;
      if (std::max(std::abs(res_a), std::abs(res_b)) > 1e-6 * eq_scale) continue;

      std::array<Vec3, 3> cam{s1 * f1, u * s1 * f2, v * s1 * f3};
      std::array<Vec3, 3> world{x1, x2, x3};
      RigidTransform cam_from_world = kabsch_three(world, cam);

      bool good = true;
      for (int i = 0; i < 3 && good; ++i) {
        Vec3 p = cam_from_world.apply(world[i]);
        if (!(p.z() > tol().min_depth)) {
          good = false;
          break;
        }
        Vec2 reproj = project_camera_point(intrinsics, p);
        if ((reproj - pm[i]->pixel).norm() > 1e-6) good = false;
      }
      if (!good) continue;

      try {
        YawPitchRoll ypr = ypr_from_rotation(cam_from_world.rotation());
        Pose pose;
        pose.yaw = ypr.yaw;
        pose.attitude = Attitude(ypr.pitch, ypr.roll);
        pose.translation = cam_from_world.translation();
        candidates.push_back(pose);
      } catch (const std::runtime_error&) {
        continue;  // gimbal lock or out-of-range pitch; drop the candidate
      }
    }
  }

  // Duplicate (u, v) routes can reproduce one solution twice at slightly
  // different accuracy; merge anything closer than the dedup radius.
  auto pose_key = [](const Pose& p) {
    return std::array<double, 6>{p.yaw, p.attitude.pitch(), p.attitude.roll(),
                                 p.translation.x(), p.translation.y(), p.translation.z()};
  };
  std::sort(candidates.begin(), candidates.end(),
            [&](const Pose& a, const Pose& b) { return pose_key(a) < pose_key(b); });
  for (const Pose& p : candidates) {
    bool dup = false;
    for (const Pose& q : out.candidates) {
      if (std::abs(p.yaw - q.yaw) < 1e-6 &&
          std::abs(p.attitude.pitch() - q.attitude.pitch()) < 1e-6 &&
          std::abs(p.attitude.roll() - q.attitude.roll()) < 1e-6 &&
          (p.translation - q.translation).norm() < 1e-6) {
        dup = true;
        break;
      }
    }
    if (!dup && out.candidates.size() < 4) out.candidates.push_back(p);
  }

  if (out.candidates.empty()) out.status = SolverStatus::NoRealSolution;
  return out;
}

}  // namespace m2e
