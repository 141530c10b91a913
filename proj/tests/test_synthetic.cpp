#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "m2e/synthetic.hpp"
#include "test_scenes.hpp"

using namespace m2e;

TEST_CASE("generate_scene noise-free consistency") {
  Rng rng(31);
  ScenarioConfig cfg;
  cfg.n_point_matches = 10;
  cfg.n_line_matches = 10;
  GeneratedScene scene = generate_scene(cfg, rng);

  CHECK(scene.matches.points.size() == 10);
  CHECK(scene.matches.lines.size() == 10);
  CHECK(scene.matches.attitude == scene.ground_truth.attitude);

  for (const PointMatch& pm : scene.matches.points) {
    CHECK(point_residual(scene.ground_truth, pm, scene.matches.intrinsics) < 1e-9);
    CHECK(pm.world.cwiseAbs().maxCoeff() <= 1.0);
    CHECK(pm.pixel.x() >= 0);
    CHECK(pm.pixel.x() < 640);
    CHECK(pm.pixel.y() >= 0);
    CHECK(pm.pixel.y() < 480);
  }
  for (const LineMatch& lm : scene.matches.lines) {
    CHECK(line_residual(scene.ground_truth, lm, scene.matches.intrinsics) < 1e-9);
    CHECK((lm.world_endpoints[1] - lm.world_endpoints[0]).norm() >= 0.2);
  }
}

TEST_CASE("generate_scene pixel noise statistics") {
  Rng rng(32);
  ScenarioConfig cfg;
  cfg.n_point_matches = 5000;
  cfg.n_line_matches = 0;
  cfg.pixel_noise_sigma = 1.0;
  GeneratedScene scene = generate_scene(cfg, rng);

  std::vector<double> noise;
  for (const PointMatch& pm : scene.matches.points) {
    Vec3 cam = scene.ground_truth.apply(pm.world);
    Vec2 clean = project_camera_point(scene.matches.intrinsics, cam);
    noise.push_back(pm.pixel.x() - clean.x());
    noise.push_back(pm.pixel.y() - clean.y());
  }
  CHECK(std::abs(oracle::sample_std(noise) - 1.0) < 0.03);
  CHECK(std::abs(oracle::sample_mean(noise)) < 0.03);
}

TEST_CASE("generate_scene determinism") {
  ScenarioConfig cfg;
  cfg.pixel_noise_sigma = 0.5;
  Rng a(77), b(77);
  GeneratedScene sa = generate_scene(cfg, a);
  GeneratedScene sb = generate_scene(cfg, b);
  CHECK(sa.ground_truth.yaw == sb.ground_truth.yaw);
  CHECK(sa.ground_truth.translation == sb.ground_truth.translation);
  REQUIRE(sa.matches.points.size() == sb.matches.points.size());
  for (std::size_t i = 0; i < sa.matches.points.size(); ++i) {
    CHECK(sa.matches.points[i].pixel == sb.matches.points[i].pixel);
    CHECK(sa.matches.points[i].world == sb.matches.points[i].world);
  }
}

TEST_CASE("generate_scene exhausts its rejection budget on impossible demands") {
  Rng rng(30);
  ScenarioConfig cfg;
  cfg.n_point_matches = 2000000;  // more features than the draw budget allows
  CHECK_THROWS_AS(generate_scene(cfg, rng), GenerationExhaustedError);
}

TEST_CASE("inject_outliers reaches the requested rate") {
  Rng rng(33);
  scenes::GroundTruth gt = scenes::random_ground_truth(rng);
  MatchSet ms = scenes::make_match_set(gt, 10, 10, rng);

  OutlierInjection zero = inject_outliers(ms, gt.pose(), 0.0, rng);
  CHECK(zero.matches.points.size() == 10);
  CHECK(zero.matches.lines.size() == 10);
  CHECK(std::count(zero.point_inliers.begin(), zero.point_inliers.end(), false) == 0);

  OutlierInjection inj = inject_outliers(ms, gt.pose(), 0.8, rng);
  CHECK(inj.matches.points.size() == 50);  // 10 inliers + 40 outliers
  CHECK(inj.matches.lines.size() == 50);
  CHECK(std::count(inj.point_inliers.begin(), inj.point_inliers.end(), false) == 40);
  CHECK(std::count(inj.line_inliers.begin(), inj.line_inliers.end(), false) == 40);

  // originals untouched, in order
  for (int i = 0; i < 10; ++i) {
    CHECK(inj.matches.points[i].pixel == ms.points[i].pixel);
    CHECK(inj.matches.points[i].world == ms.points[i].world);
  }

  CHECK_THROWS_AS(inject_outliers(ms, gt.pose(), 1.0, rng), std::invalid_argument);
}

TEST_CASE("inject_outliers masks recovered by thresholding") {
  for (double sigma : {0.0, 0.3}) {
    Rng rng(static_cast<std::uint64_t>(34 + sigma * 10));
    ScenarioConfig cfg;
    cfg.n_point_matches = 12;
    cfg.n_line_matches = 12;
    cfg.pixel_noise_sigma = sigma;
    GeneratedScene scene = generate_scene(cfg, rng);
    OutlierInjection inj = inject_outliers(scene.matches, scene.ground_truth, 0.6, rng);

    for (std::size_t i = 0; i < inj.matches.points.size(); ++i) {
      bool in = point_residual(scene.ground_truth, inj.matches.points[i],
                               inj.matches.intrinsics) < 2.0;
      CHECK(in == inj.point_inliers[i]);
    }
    for (std::size_t i = 0; i < inj.matches.lines.size(); ++i) {
      bool in = line_residual(scene.ground_truth, inj.matches.lines[i],
                              inj.matches.intrinsics) < 2.0;
      CHECK(in == inj.line_inliers[i]);
    }
  }
}

TEST_CASE("perturb_attitude") {
  Rng rng(35);
  Attitude base(0.3, -0.2);
  Attitude same = perturb_attitude(base, 0.0, rng);
  CHECK(same.pitch() == base.pitch());
  CHECK(same.roll() == base.roll());

  std::vector<double> pitches, rolls;
  for (int i = 0; i < 100000; ++i) {
    Attitude noisy = perturb_attitude(base, 5.0, rng);
    pitches.push_back((noisy.pitch() - base.pitch()) * 180.0 / 3.14159265358979323846);
    rolls.push_back((noisy.roll() - base.roll()) * 180.0 / 3.14159265358979323846);
  }
  CHECK(std::abs(oracle::sample_std(pitches) - 5.0) < 0.15);
  CHECK(std::abs(oracle::sample_std(rolls) - 5.0) < 0.15);

  // large sigma still yields a valid attitude (redraws when pitch escapes)
  for (int i = 0; i < 1000; ++i) {
    Attitude noisy = perturb_attitude(Attitude(0.5, 0.0), 25.0, rng);
    CHECK(std::abs(noisy.pitch()) < 3.14159265358979323846 / 2);
  }
}

TEST_CASE("evaluate_pose") {
  Rng rng(36);
  scenes::GroundTruth gt = scenes::random_ground_truth(rng);
  PoseError same = evaluate_pose(gt.pose(), gt.pose());
  CHECK(same.translation_error_pct == doctest::Approx(0.0));
  CHECK(same.rotation_error_deg == doctest::Approx(0.0));

  Pose scaled = gt.pose();
  scaled.translation *= 1.1;
  PoseError err = evaluate_pose(scaled, gt.pose());
  CHECK(err.translation_error_pct == doctest::Approx(10.0).epsilon(1e-9));
  CHECK(err.rotation_error_deg == doctest::Approx(0.0).epsilon(1e-6));

  Pose rotated = gt.pose();
  rotated.yaw = wrap_angle(rotated.yaw + 0.1);
  PoseError rot = evaluate_pose(rotated, gt.pose());
  CHECK(rot.rotation_error_deg == doctest::Approx(0.1 * 180.0 / 3.14159265358979323846)
                                      .epsilon(1e-6));  // ~5.7296 deg

  Pose zero_truth;
  CHECK_THROWS_AS(evaluate_pose(gt.pose(), zero_truth), ZeroTruthTranslationError);

  CHECK(success_criterion(PoseError{9.9, 4.9}));
  CHECK(!success_criterion(PoseError{10.1, 0.0}));
  CHECK(!success_criterion(PoseError{0.0, 5.1}));
}

TEST_CASE("method spec parsing") {
  MethodSpec m = MethodSpec::parse("2p");
  CHECK(m.strategy == Strategy::TwoPoints);
  CHECK(!m.refine);
  CHECK(m.id() == "2p");

  MethodSpec m2 = MethodSpec::parse("1p1l-4dof");
  CHECK(m2.strategy == Strategy::OnePointOneLine);
  CHECK(m2.refine == RefinementMode::FourDoF);
  CHECK(m2.id() == "1p1l-4dof");

  MethodSpec m3 = MethodSpec::parse("p3p-6dof");
  CHECK(!m3.strategy);
  CHECK(m3.refine == RefinementMode::SixDoF);
  CHECK(m3.id() == "p3p-6dof");

  CHECK_THROWS_AS(MethodSpec::parse("4p"), std::invalid_argument);
  CHECK_THROWS_AS(MethodSpec::parse("2p-8dof"), std::invalid_argument);
}

TEST_CASE("localize_pipeline refines over recovered inliers") {
  Rng rng(37);
  ScenarioConfig cfg;
  cfg.n_point_matches = 10;
  cfg.n_line_matches = 10;
  cfg.pixel_noise_sigma = 1.0;
  GeneratedScene scene = generate_scene(cfg, rng);
  OutlierInjection inj = inject_outliers(scene.matches, scene.ground_truth, 0.5, rng);

  RansacConfig rcfg;
  rcfg.seed = 17;
  PipelineResult plain = localize_pipeline(inj.matches, MethodSpec::parse("mixed"), rcfg);
  PipelineResult refined = localize_pipeline(inj.matches, MethodSpec::parse("mixed-4dof"), rcfg);

  PoseError before = evaluate_pose(plain.pose, scene.ground_truth);
  PoseError after = evaluate_pose(refined.pose, scene.ground_truth);
  CHECK(refined.refinement_rounds >= 1);
  CHECK(after.translation_error_pct <= before.translation_error_pct + 1e-9);
  CHECK(success_criterion(after));
}

TEST_CASE("run_experiment accuracy at zero noise is exact") {
  ScenarioConfig cfg;
  cfg.n_point_matches = 10;
  cfg.n_line_matches = 10;
  cfg.trials = 20;
  cfg.seed = 4242;
  std::vector<MethodSpec> methods = {MethodSpec::parse("2p"), MethodSpec::parse("1p1l"),
                                     MethodSpec::parse("mixed"), MethodSpec::parse("p3p")};
  ExperimentTable table = run_experiment(ExperimentKind::Accuracy, {0.0}, methods, cfg);
  REQUIRE(table.rows.size() == 4);
  for (const ExperimentRow& row : table.rows) {
    CHECK(row.success_rate == doctest::Approx(1.0));
    CHECK(row.mean_trans_err_pct < 1e-6);
    CHECK(row.mean_rot_err_deg < 1e-6);
  }
}

TEST_CASE("run_experiment is deterministic across thread counts") {
  ScenarioConfig cfg;
  cfg.n_point_matches = 8;
  cfg.n_line_matches = 8;
  cfg.trials = 12;
  cfg.seed = 99;
  cfg.pixel_noise_sigma = 1.0;
  std::vector<MethodSpec> methods = {MethodSpec::parse("mixed-4dof"), MethodSpec::parse("2p")};
  std::vector<double> sweep = {0.0, 0.4};

  ExperimentTable serial = run_experiment(ExperimentKind::Robustness, sweep, methods, cfg, 1);
  ExperimentTable parallel = run_experiment(ExperimentKind::Robustness, sweep, methods, cfg, 4);
  REQUIRE(serial.rows.size() == parallel.rows.size());
  for (std::size_t i = 0; i < serial.rows.size(); ++i) {
    CHECK(serial.rows[i].success_rate == parallel.rows[i].success_rate);
    CHECK(serial.rows[i].mean_trans_err_pct == parallel.rows[i].mean_trans_err_pct);
    CHECK(serial.rows[i].median_rot_err_deg == parallel.rows[i].median_rot_err_deg);
  }
}

TEST_CASE("robustness success rate does not increase with outlier rate") {
  ScenarioConfig cfg;
  cfg.n_point_matches = 8;
  cfg.n_line_matches = 8;
  cfg.trials = 100;
  cfg.seed = 2025;
  std::vector<MethodSpec> methods = {MethodSpec::parse("mixed")};
  ExperimentTable table =
      run_experiment(ExperimentKind::Robustness, {0.0, 0.4, 0.7}, methods, cfg);
  REQUIRE(table.rows.size() == 3);
  CHECK(table.rows[0].success_rate + 0.05 >= table.rows[1].success_rate);
  CHECK(table.rows[1].success_rate + 0.05 >= table.rows[2].success_rate);
}
