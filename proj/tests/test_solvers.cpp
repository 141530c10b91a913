#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "m2e/rng.hpp"
#include "m2e/solvers.hpp"
#include "oracles.hpp"

using namespace m2e;

namespace {

constexpr double kPi = std::numbers::pi;
const Intrinsics kCam(500, 500, 320, 240);
const oracle::Camera kOracleCam{500, 500, 320, 240};

struct GroundTruth {
  double yaw;
  Attitude attitude;
  Vec3 t;

  Pose pose() const { return Pose{yaw, attitude, t}; }
};

// Noise-free forward projection through the oracle, not the library.
PointMatch make_point(const GroundTruth& gt, const Vec3& world) {
  Vec2 px;
  REQUIRE(oracle::project(kOracleCam, gt.yaw, gt.attitude.pitch(), gt.attitude.roll(), gt.t,
                          world, px));
  return PointMatch{px, world};
}

LineMatch make_line(const GroundTruth& gt, const Vec3& w0, const Vec3& w1) {
  Vec2 p0, p1;
  REQUIRE(oracle::project(kOracleCam, gt.yaw, gt.attitude.pitch(), gt.attitude.roll(), gt.t, w0, p0));
  REQUIRE(oracle::project(kOracleCam, gt.yaw, gt.attitude.pitch(), gt.attitude.roll(), gt.t, w1, p1));
  return LineMatch{{p0, p1}, {w0, w1}};
}

// Random benchmark-style ground truth: camera on a shell looking at the cube.
GroundTruth random_ground_truth(Rng& rng) {
  GroundTruth gt{rng.uniform(-kPi, kPi),
                 Attitude(rng.uniform(-kPi / 6, kPi / 6), rng.uniform(-kPi / 6, kPi / 6)),
                 Vec3::Zero()};
  Mat3 r = rotation_from_ypr(gt.yaw, gt.attitude);
  Vec3 view = r.transpose() * Vec3(0, 0, 1);
  Vec3 center = -rng.uniform(2.5, 3.5) * view;
  gt.t = -(r * center);
  return gt;
}

bool visible(const GroundTruth& gt, const Vec3& world) {
  Vec2 px;
  if (!oracle::project(kOracleCam, gt.yaw, gt.attitude.pitch(), gt.attitude.roll(), gt.t, world,
                       px)) {
    return false;
  }
  return px.x() >= 0 && px.x() < 640 && px.y() >= 0 && px.y() < 480;
}

Vec3 random_visible_point(const GroundTruth& gt, Rng& rng) {
  for (int i = 0; i < 10000; ++i) {
    Vec3 w(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    if (visible(gt, w)) return w;
  }
  REQUIRE(false);
  return Vec3::Zero();
}

// Distance of the closest candidate to the ground truth (yaw in radians,
// translation relative).
std::pair<double, double> best_candidate_error(const SolverOutput& out, const GroundTruth& gt) {
  double best_yaw = 1e300, best_t = 1e300;
  for (const Pose& p : out.candidates) {
    double dy = std::abs(wrap_angle(p.yaw - gt.yaw));
    double dt = (p.translation - gt.t).norm() / gt.t.norm();
    if (dy + dt < best_yaw + best_t) {
      best_yaw = dy;
      best_t = dt;
    }
  }
  return {best_yaw, best_t};
}

}  // namespace

TEST_CASE("trig equation matches grid search") {
  Rng rng(101);
  for (int i = 0; i < 400; ++i) {
    double a = rng.uniform(-2, 2), b = rng.uniform(-2, 2), c = rng.uniform(-2, 2);
    if (std::hypot(a, b) < 0.1) continue;
    std::array<double, 2> roots{};
    int n = solve_trig_equation(a, b, c, roots);

    auto f = [&](double x) { return a * std::cos(x) + b * std::sin(x) + c; };
    for (int j = 0; j < n; ++j) CHECK(std::abs(f(roots[j])) < 1e-10);

    std::vector<double> expected = oracle::grid_roots(f);
    CHECK(n == static_cast<int>(expected.size()));
    for (int j = 0; j < n && j < static_cast<int>(expected.size()); ++j) {
      CHECK(std::abs(wrap_angle(roots[j] - expected[j])) < 1e-8);
    }
  }

  // the t -> infinity root: A = C forces x = pi
  std::array<double, 2> roots{};
  int n = solve_trig_equation(1.0, 0.5, 1.0, roots);
  REQUIRE(n >= 1);
  bool has_pi = false;
  for (int j = 0; j < n; ++j) has_pi |= std::abs(roots[j] - kPi) < 1e-12;
  CHECK(has_pi);
}

TEST_CASE("intermediate frame for 1p1l") {
  double theta = 0.3, phi = 0.3;
  ProjectionRay d2(Vec3(0, 0, 1));
  ProjectionRay d3(Vec3(std::sin(theta), 0, std::cos(theta)));
  ProjectionRay d1(Vec3(0, std::sin(phi), std::cos(phi)));

  IntermediateFrame1P1L frame = intermediate_frame_1p1l(d1, d2, d3);
  REQUIRE(frame.status == SolverStatus::Ok);
  CHECK(frame.d3_x == doctest::Approx(std::tan(theta)).epsilon(1e-12));
  CHECK(frame.d3_x == doctest::Approx(0.309336).epsilon(1e-5));

  // conditions on the transformed construction points
  double c = d2.direction().dot(d3.direction());
  Vec3 cam_center = frame.cam_from_query.apply(Vec3::Zero());
  CHECK((cam_center - Vec3(0, 0, -1)).norm() < 1e-12);
  Vec3 dd2 = frame.cam_from_query.apply(d2.direction());
  CHECK(dd2.norm() < 1e-12);
  Vec3 dd3 = frame.cam_from_query.apply(d3.direction() / c);
  CHECK((dd3 - Vec3(frame.d3_x, 0, 0)).norm() < 1e-10);

  // the point ray pierces the z = 0 plane at (a1, b1, 0)
  Vec3 e = frame.cam_from_query.rotation() * d1.direction();
  Vec3 pierce = cam_center + e / e.z();
  CHECK(std::abs(pierce.z()) < 1e-10);
  CHECK(frame.a1 == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(frame.b1 == doctest::Approx(std::tan(phi)).epsilon(1e-10));

  ProjectionRay almost_d2(Vec3(1e-7, 0, 1));
  CHECK(intermediate_frame_1p1l(d1, d2, almost_d2).status == SolverStatus::ParallelRays);
}

TEST_CASE("solve_1p1l recovers the documented scene") {
  GroundTruth gt{0.4, Attitude(0.05, -0.1), Vec3(0.1, 0.2, 2.0)};
  PointMatch pm = make_point(gt, Vec3(0.2, -0.1, 0.4));
  LineMatch lm = make_line(gt, Vec3(-0.3, 0.2, 0.1), Vec3(0.5, 0.4, -0.2));

  SolverOutput out = solve_1p1l(pm, lm, gt.attitude, kCam);
  REQUIRE(out.ok());
  REQUIRE(!out.candidates.empty());
  auto [yaw_err, t_err] = best_candidate_error(out, gt);
  CHECK(yaw_err < 1e-7);
  CHECK(t_err < 1e-7);

  // every candidate's yaw must be a root of the independent coplanarity
  // difference n . (Rz(yaw) M (L2 - L3)) with n the interpretation plane
  // normal, located by grid search
  Vec3 d2 = pixel_to_ray(kCam, lm.pixel_endpoints[0]).direction();
  Vec3 d3 = pixel_to_ray(kCam, lm.pixel_endpoints[1]).direction();
  Vec3 n = d2.cross(d3);
  Vec3 delta = lm.world_endpoints[0] - lm.world_endpoints[1];
  Mat3 m = attitude_rotation(gt.attitude);
  auto f = [&](double yaw) { return n.dot(rot_z(yaw) * (m * delta)); };
  std::vector<double> expected = oracle::grid_roots(f);
  for (const Pose& cand : out.candidates) {
    double closest = 1e300;
    for (double root : expected) closest = std::min(closest, std::abs(wrap_angle(cand.yaw - root)));
    CHECK(closest < 1e-9);
  }

  // attitude is copied, not estimated
  for (const Pose& cand : out.candidates) {
    CHECK(cand.attitude.pitch() == gt.attitude.pitch());
    CHECK(cand.attitude.roll() == gt.attitude.roll());
  }
}

TEST_CASE("solve_1p1l identity pose") {
  GroundTruth gt{0.0, Attitude(0, 0), Vec3(0, 0, 3)};
  PointMatch pm = make_point(gt, Vec3(0.3, -0.2, 0.5));
  LineMatch lm = make_line(gt, Vec3(-0.4, 0.3, 0.0), Vec3(0.5, 0.5, -0.3));
  SolverOutput out = solve_1p1l(pm, lm, gt.attitude, kCam);
  REQUIRE(out.ok());
  auto [yaw_err, t_err] = best_candidate_error(out, gt);
  CHECK(yaw_err < 1e-9);
  CHECK(t_err < 1e-9);
}

TEST_CASE("solve_1p1l degenerate when point sits on the line") {
  GroundTruth gt{0.2, Attitude(0.05, 0.02), Vec3(0.1, -0.1, 3)};
  Vec3 w0(-0.4, 0.3, 0.0), w1(0.5, 0.5, -0.3);
  LineMatch lm = make_line(gt, w0, w1);
  PointMatch pm = make_point(gt, 0.5 * (w0 + w1));  // midpoint of the 3D line
  SolverOutput out = solve_1p1l(pm, lm, gt.attitude, kCam);
  CHECK(out.status == SolverStatus::Degenerate);
}

TEST_CASE("solve_1p1l endpoint swap invariance") {
  Rng rng(55);
  int checked = 0;
  while (checked < 100) {
    GroundTruth gt = random_ground_truth(rng);
    Vec3 p = random_visible_point(gt, rng);
    Vec3 w0 = random_visible_point(gt, rng);
    Vec3 w1 = random_visible_point(gt, rng);
    if ((w1 - w0).norm() < 0.2) continue;
    PointMatch pm = make_point(gt, p);
    LineMatch lm = make_line(gt, w0, w1);
    LineMatch swapped{{lm.pixel_endpoints[1], lm.pixel_endpoints[0]},
                      {lm.world_endpoints[1], lm.world_endpoints[0]}};
    SolverOutput a = solve_1p1l(pm, lm, gt.attitude, kCam);
    SolverOutput b = solve_1p1l(pm, swapped, gt.attitude, kCam);
    if (!a.ok() || !b.ok()) continue;
    REQUIRE(a.candidates.size() == b.candidates.size());
    for (std::size_t i = 0; i < a.candidates.size(); ++i) {
      CHECK(std::abs(wrap_angle(a.candidates[i].yaw - b.candidates[i].yaw)) < 1e-9);
      CHECK((a.candidates[i].translation - b.candidates[i].translation).norm() < 1e-9);
    }
    ++checked;
  }
}

TEST_CASE("solve_1p1l random exact recovery") {
  Rng rng(77);
  int solved = 0;
  for (int i = 0; i < 600 && solved < 500; ++i) {
    GroundTruth gt = random_ground_truth(rng);
    Vec3 p = random_visible_point(gt, rng);
    Vec3 w0 = random_visible_point(gt, rng);
    Vec3 w1 = random_visible_point(gt, rng);
    if ((w1 - w0).norm() < 0.2) continue;
    PointMatch pm = make_point(gt, p);
    LineMatch lm = make_line(gt, w0, w1);
    if (check_degeneracy_1p1l(pm, lm)) continue;
    SolverOutput out = solve_1p1l(pm, lm, gt.attitude, kCam);
    if (out.status == SolverStatus::IllConditioned) continue;
    REQUIRE(out.ok());
    auto [yaw_err, t_err] = best_candidate_error(out, gt);
    CHECK(yaw_err < 1e-7);
    CHECK(t_err < 1e-7);
    ++solved;
  }
  CHECK(solved >= 490);
}

TEST_CASE("solve_2p coaxial configuration is reported, off-axis recovers") {
  // Both world points on the camera axis: yaw and T3 are unobservable, so
  // the solver must flag the configuration rather than invent a pose.
  Attitude level(0, 0);
  PointMatch pm1{Vec2(320, 240), Vec3(0, 0, 1)};
  PointMatch pm2{Vec2(320, 240), Vec3(0, 0, 2)};
  SolverOutput coaxial = solve_2p(pm1, pm2, level, kCam);
  CHECK(!coaxial.ok());

  GroundTruth gt{0.0, level, Vec3::Zero()};
  PointMatch a = make_point(gt, Vec3(0, 0, 1));
  PointMatch b = make_point(gt, Vec3(0.5, 0.1, 2));
  SolverOutput out = solve_2p(a, b, level, kCam);
  REQUIRE(out.ok());
  double best = 1e300;
  for (const Pose& cand : out.candidates) {
    best = std::min(best, std::abs(wrap_angle(cand.yaw)) + cand.translation.norm());
  }
  CHECK(best < 1e-9);
}

TEST_CASE("solve_2p duplicate match") {
  PointMatch pm{Vec2(100, 100), Vec3(0.5, 0.5, 0.5)};
  CHECK(solve_2p(pm, pm, Attitude(0, 0), kCam).status == SolverStatus::DuplicateMatch);
}

TEST_CASE("solve_2p swap invariance") {
  Rng rng(91);
  int checked = 0;
  while (checked < 100) {
    GroundTruth gt = random_ground_truth(rng);
    PointMatch a = make_point(gt, random_visible_point(gt, rng));
    PointMatch b = make_point(gt, random_visible_point(gt, rng));
    SolverOutput ab = solve_2p(a, b, gt.attitude, kCam);
    SolverOutput ba = solve_2p(b, a, gt.attitude, kCam);
    if (!ab.ok() || !ba.ok()) continue;
    REQUIRE(ab.candidates.size() == ba.candidates.size());
    for (std::size_t i = 0; i < ab.candidates.size(); ++i) {
      CHECK(std::abs(wrap_angle(ab.candidates[i].yaw - ba.candidates[i].yaw)) < 1e-10);
      CHECK((ab.candidates[i].translation - ba.candidates[i].translation).norm() < 1e-10);
    }
    ++checked;
  }
}

TEST_CASE("solve_2p random exact recovery and self consistency") {
  Rng rng(13);
  int solved = 0;
  for (int i = 0; i < 600 && solved < 500; ++i) {
    GroundTruth gt = random_ground_truth(rng);
    PointMatch a = make_point(gt, random_visible_point(gt, rng));
    PointMatch b = make_point(gt, random_visible_point(gt, rng));
    if ((a.world - b.world).norm() < 1e-3) continue;
    SolverOutput out = solve_2p(a, b, gt.attitude, kCam);
    if (out.status == SolverStatus::IllConditioned) continue;
    REQUIRE(out.ok());
    auto [yaw_err, t_err] = best_candidate_error(out, gt);
    CHECK(yaw_err < 1e-7);
    CHECK(t_err < 1e-7);

    // self-consistency: each candidate satisfies the defining equations,
    // checked here through the projective form (ray alignment)
    for (const Pose& cand : out.candidates) {
      CHECK(cand.attitude.pitch() == gt.attitude.pitch());
      CHECK(cand.attitude.roll() == gt.attitude.roll());
      for (const PointMatch& pm : {a, b}) {
        Vec3 cam = cand.apply(pm.world);
        Vec3 ray = pixel_to_ray(kCam, pm.pixel).direction();
        CHECK(cam.cross(ray).norm() / std::max(1.0, cam.norm()) < 1e-8);
      }
    }
    ++solved;
  }
  CHECK(solved >= 490);
}

TEST_CASE("check_degeneracy_1p1l thresholds") {
  LineMatch lm{{Vec2(100, 100), Vec2(300, 300)},
               {Vec3(0, 0, 0), Vec3(1, 0, 0)}};

  PointMatch on_line{Vec2(400, 100), Vec3(0.5, 0, 0)};  // midpoint in 3D
  CHECK(check_degeneracy_1p1l(on_line, lm));

  PointMatch off_line{Vec2(400, 100), Vec3(0.5, 0.5, 0)};  // 0.5 away in 3D
  CHECK(!check_degeneracy_1p1l(off_line, lm));

  PointMatch barely{Vec2(400, 100), Vec3(0.5, 1e-7, 0)};
  CHECK(check_degeneracy_1p1l(barely, lm));

  // 2D proximity alone is enough
  PointMatch on_segment_line{Vec2(200, 200.3), Vec3(0.5, 0.5, 0)};
  CHECK(check_degeneracy_1p1l(on_segment_line, lm));
}

TEST_CASE("two lines cannot fix the pose") {
  Rng rng(29);
  int checked = 0;
  while (checked < 30) {
    GroundTruth gt = random_ground_truth(rng);
    Vec3 a0 = random_visible_point(gt, rng), a1 = random_visible_point(gt, rng);
    Vec3 b0 = random_visible_point(gt, rng), b1 = random_visible_point(gt, rng);
    if ((a1 - a0).norm() < 0.3 || (b1 - b0).norm() < 0.3) continue;
    LineMatch la = make_line(gt, a0, a1);
    LineMatch lb = make_line(gt, b0, b1);
    TwoLinesRank result = two_lines_constraint_rank(la, lb, gt.attitude, kCam);
    if (result.status != SolverStatus::Ok) continue;

    CHECK(result.nullspace_dim >= 1);
    // T3 never appears in the system
    CHECK(result.coefficients.col(4).cwiseAbs().maxCoeff() == 0.0);
    // first row is the bare T2 = 0 constraint
    Eigen::Matrix<double, 1, 5> expected;
    expected << 0, 0, 0, 1, 0;
    CHECK((result.coefficients.row(0) - expected).cwiseAbs().maxCoeff() == 0.0);
    CHECK(result.rank <= 4);
    ++checked;
  }
}

TEST_CASE("two lines parallel interpretation planes") {
  // Two collinear image segments share one interpretation plane.
  GroundTruth gt{0.0, Attitude(0, 0), Vec3(0, 0, 3)};
  LineMatch la{{Vec2(100, 240), Vec2(200, 240)}, {Vec3(-0.5, 0, 0), Vec3(-0.2, 0, 0)}};
  LineMatch lb{{Vec2(300, 240), Vec2(400, 240)}, {Vec3(0.2, 0, 0), Vec3(0.5, 0, 0)}};
  TwoLinesRank result = two_lines_constraint_rank(la, lb, gt.attitude, kCam);
  CHECK(result.status == SolverStatus::ParallelPlanes);
}

TEST_CASE("solve_p3p equilateral facing camera") {
  GroundTruth gt{0.0, Attitude(0, 0), Vec3(0, 0, 3)};
  Vec3 w1(0.5, 0, 0), w2(-0.25, 0.433, 0), w3(-0.25, -0.433, 0);
  SolverOutput out = solve_p3p(make_point(gt, w1), make_point(gt, w2), make_point(gt, w3), kCam);
  REQUIRE(out.ok());
  double best = 1e300;
  for (const Pose& cand : out.candidates) {
    best = std::min(best, std::abs(wrap_angle(cand.yaw)) +
                              std::abs(cand.attitude.pitch()) + std::abs(cand.attitude.roll()) +
                              (cand.translation - gt.t).norm());
  }
  CHECK(best < 1e-7);
}

TEST_CASE("solve_p3p collinear points") {
  GroundTruth gt{0.0, Attitude(0, 0), Vec3(0, 0, 3)};
  SolverOutput out = solve_p3p(make_point(gt, Vec3(-0.5, 0, 0)), make_point(gt, Vec3(0, 0, 0)),
                               make_point(gt, Vec3(0.5, 0, 0)), kCam);
  CHECK(out.status == SolverStatus::CollinearPoints);
}

TEST_CASE("solve_p3p random exact recovery") {
  Rng rng(17);
  int solved = 0;
  for (int i = 0; i < 400 && solved < 300; ++i) {
    GroundTruth gt = random_ground_truth(rng);
    Vec3 w1 = random_visible_point(gt, rng);
    Vec3 w2 = random_visible_point(gt, rng);
    Vec3 w3 = random_visible_point(gt, rng);
    if ((w2 - w1).cross(w3 - w1).norm() < 0.05) continue;
    PointMatch m1 = make_point(gt, w1), m2 = make_point(gt, w2), m3 = make_point(gt, w3);
    SolverOutput out = solve_p3p(m1, m2, m3, kCam);
    if (!out.ok()) continue;

    double best_yaw = 1e300, best_t = 1e300;
    for (const Pose& cand : out.candidates) {
      // every candidate reprojects the three inputs
      for (const PointMatch& pm : {m1, m2, m3}) {
        Vec3 cam = cand.apply(pm.world);
        REQUIRE(cam.z() > 0);
        CHECK((project_camera_point(kCam, cam) - pm.pixel).norm() < 1e-6);
      }
      double dy = std::abs(wrap_angle(cand.yaw - gt.yaw));
      double dt = (cand.translation - gt.t).norm() / gt.t.norm();
      if (dy + dt < best_yaw + best_t) {
        best_yaw = dy;
        best_t = dt;
      }
    }
    CHECK(best_yaw < 1e-7);
    CHECK(best_t < 1e-7);
    CHECK(out.candidates.size() <= 4);
    ++solved;
  }
  CHECK(solved >= 280);
}
