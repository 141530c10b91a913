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

#include "m2e/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <thread>

namespace m2e {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::uint64_t kExperimentStream = 0x45585052ULL;

constexpr double kImageWidth = 640.0;
constexpr double kImageHeight = 480.0;
constexpr double kShellMin = 2.5;
constexpr double kShellMax = 3.5;
constexpr double kMinLineLength = 0.2;
constexpr double kMinDepth = 0.1;
constexpr long kGenerationBudget = 1000000;

const Intrinsics& bench_intrinsics() {
  static const Intrinsics k(500.0, 500.0, 320.0, 240.0);
  return k;
}

bool in_image(const Vec2& px) {
  return px.x() >= 0.0 && px.x() < kImageWidth && px.y() >= 0.0 && px.y() < kImageHeight;
}

// Projects under the ground-truth pose; false when rejected by cheirality or
// the image bounds.
bool project_feature(const Pose& pose, const Vec3& world, Vec2& pixel) {
  Vec3 cam = pose.apply(world);
  if (!(cam.z() > kMinDepth)) return false;
  pixel = project_camera_point(bench_intrinsics(), cam);
  return in_image(pixel);
}

void parallel_for(int n, int threads, const std::function<void(int)>& body) {
  if (threads <= 0) threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  threads = std::min(threads, n);
  if (threads <= 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int w = 0; w < threads; ++w) {
    int lo = static_cast<int>(static_cast<long>(n) * w / threads);
    int hi = static_cast<int>(static_cast<long>(n) * (w + 1) / threads);
    pool.emplace_back([&body, lo, hi] {
      for (int i = lo; i < hi; ++i) body(i);
    });
  }
  for (auto& t : pool) t.join();
}

double mean_of(std::vector<double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

GeneratedScene generate_scene(const ScenarioConfig& cfg, Rng& rng) {
  GeneratedScene scene;
  long attempts = 0;
  auto spend = [&attempts](long n = 1) {
    attempts += n;
    if (attempts > kGenerationBudget) throw GenerationExhaustedError();
  };

  double yaw = rng.uniform(-kPi, kPi);
  Attitude attitude(rng.uniform(-kPi / 6.0, kPi / 6.0), rng.uniform(-kPi / 6.0, kPi / 6.0));
  double radius = rng.uniform(kShellMin, kShellMax);

  Mat3 r = rotation_from_ypr(yaw, attitude);
  Vec3 view_world = r.transpose() * Vec3(0, 0, 1);
  Vec3 center = -radius * view_world;  // camera looks at the cube center
  Pose gt{yaw, attitude, -(r * center)};
  scene.ground_truth = gt;

  MatchSet& ms = scene.matches;
  ms.attitude = attitude;
  ms.intrinsics = bench_intrinsics();

  auto draw_cube_point = [&rng] {
    return Vec3(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
  };

  while (static_cast<int>(ms.points.size()) < cfg.n_point_matches) {
    spend();
    Vec3 world = draw_cube_point();
    Vec2 pixel;
    if (!project_feature(gt, world, pixel)) continue;
    pixel += Vec2(rng.gaussian(cfg.pixel_noise_sigma), rng.gaussian(cfg.pixel_noise_sigma));
    ms.points.push_back(PointMatch{pixel, world});
  }

  while (static_cast<int>(ms.lines.size()) < cfg.n_line_matches) {
    spend();
    Vec3 w0 = draw_cube_point();
    Vec3 w1 = draw_cube_point();
    if ((w1 - w0).norm() < kMinLineLength) continue;
    Vec2 p0, p1;
    if (!project_feature(gt, w0, p0) || !project_feature(gt, w1, p1)) continue;
    if ((p1 - p0).norm() <= 1.0) continue;  // keep the image segment meaningful
    p0 += Vec2(rng.gaussian(cfg.pixel_noise_sigma), rng.gaussian(cfg.pixel_noise_sigma));
    p1 += Vec2(rng.gaussian(cfg.pixel_noise_sigma), rng.gaussian(cfg.pixel_noise_sigma));
    if ((p1 - p0).norm() <= 1.0) continue;
    ms.lines.push_back(LineMatch{{p0, p1}, {w0, w1}});
  }

  return scene;
}

OutlierInjection inject_outliers(const MatchSet& matches, const Pose& ground_truth,
                                 double rate, Rng& rng, double point_threshold_px,
                                 double line_threshold_px) {
  if (rate < 0.0 || rate >= 1.0) {
    throw std::invalid_argument("inject_outliers: rate must lie in [0, 1)");
  }
  OutlierInjection out;
  out.matches = matches;
  out.point_inliers.assign(matches.points.size(), true);
  out.line_inliers.assign(matches.lines.size(), true);
  if (rate == 0.0) return out;

  const Intrinsics& k = matches.intrinsics;
  auto count_for = [rate](std::size_t inliers) {
    return static_cast<int>(std::llround(static_cast<double>(inliers) * rate / (1.0 - rate)));
  };

  auto random_pixel = [&rng] {
    return Vec2(rng.uniform(0.0, kImageWidth), rng.uniform(0.0, kImageHeight));
  };

  int n_points = static_cast<int>(matches.points.size());
  int want_points = count_for(matches.points.size());
  for (int i = 0; i < want_points; ++i) {
    PointMatch candidate;
    bool placed = false;
    for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
      int world_from = static_cast<int>(rng.below(static_cast<std::uint32_t>(n_points)));
      candidate.world = matches.points[world_from].world;
      if (n_points >= 2 && attempt < 64) {
        // Re-associate with another feature's observation.
        int pixel_from = static_cast<int>(rng.below(static_cast<std::uint32_t>(n_points - 1)));
        if (pixel_from >= world_from) ++pixel_from;
        candidate.pixel = matches.points[pixel_from].pixel;
      } else {
        candidate.pixel = random_pixel();
      }
      placed = point_residual(ground_truth, candidate, k) > point_threshold_px;
    }
    if (!placed) throw GenerationExhaustedError();
    out.matches.points.push_back(candidate);
    out.point_inliers.push_back(false);
  }

  int n_lines = static_cast<int>(matches.lines.size());
  int want_lines = count_for(matches.lines.size());
  for (int i = 0; i < want_lines; ++i) {
    LineMatch candidate;
    bool placed = false;
    for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
      int world_from = static_cast<int>(rng.below(static_cast<std::uint32_t>(n_lines)));
      candidate.world_endpoints = matches.lines[world_from].world_endpoints;
      if (n_lines >= 2 && attempt < 64) {
        int pixel_from = static_cast<int>(rng.below(static_cast<std::uint32_t>(n_lines - 1)));
        if (pixel_from >= world_from) ++pixel_from;
        candidate.pixel_endpoints = matches.lines[pixel_from].pixel_endpoints;
      } else {
        candidate.pixel_endpoints[0] = random_pixel();
        candidate.pixel_endpoints[1] = random_pixel();
        if ((candidate.pixel_endpoints[1] - candidate.pixel_endpoints[0]).norm() <= 2.0) continue;
      }
      placed = line_residual(ground_truth, candidate, k) > line_threshold_px;
    }
    if (!placed) throw GenerationExhaustedError();
    out.matches.lines.push_back(candidate);
    out.line_inliers.push_back(false);
  }

  return out;
}

Attitude perturb_attitude(const Attitude& attitude, double sigma_deg, Rng& rng) {
  if (sigma_deg < 0.0) throw std::invalid_argument("perturb_attitude: sigma must be >= 0");
  if (sigma_deg == 0.0) return attitude;
  double sigma = sigma_deg * kPi / 180.0;
  for (int attempt = 0; attempt < 10000; ++attempt) {
    double pitch = attitude.pitch() + rng.gaussian(sigma);
    double roll = attitude.roll() + rng.gaussian(sigma);
    try {
      return Attitude(pitch, roll);
    } catch (const std::invalid_argument&) {
      // pitch left (-pi/2, pi/2); redraw
    }
  }
  throw std::runtime_error("perturb_attitude: could not draw a valid attitude");
}

PoseError evaluate_pose(const Pose& estimate, const Pose& truth) {
  double t_norm = truth.translation.norm();
  if (t_norm <= 1e-9) throw ZeroTruthTranslationError();
  PoseError err;
  err.translation_error_pct = 100.0 * (estimate.translation - truth.translation).norm() / t_norm;
  Mat3 delta = estimate.rotation() * truth.rotation().transpose();
  double cos_angle = std::clamp((delta.trace() - 1.0) / 2.0, -1.0, 1.0);
  err.rotation_error_deg = std::acos(cos_angle) * 180.0 / kPi;
  return err;
}

bool success_criterion(const PoseError& error) {
  return error.translation_error_pct < 10.0 && error.rotation_error_deg < 5.0;
}

const char* to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::Accuracy: return "accuracy";
    case ExperimentKind::Sensitivity: return "sensitivity";
    case ExperimentKind::Robustness: return "robustness";
  }
  return "unknown";
}

MethodSpec MethodSpec::parse(const std::string& id) {
  MethodSpec spec;
  std::string solver = id;
  std::string suffix;
  if (auto dash = id.find('-'); dash != std::string::npos) {
    solver = id.substr(0, dash);
    suffix = id.substr(dash + 1);
  }

  if (solver == "2p") {
    spec.strategy = Strategy::TwoPoints;
  } else if (solver == "1p1l") {
    spec.strategy = Strategy::OnePointOneLine;
  } else if (solver == "mixed") {
    spec.strategy = Strategy::Mixed;
  } else if (solver == "p3p") {
    spec.strategy = std::nullopt;
  } else {
    throw std::invalid_argument("unknown method '" + id + "'");
  }

  if (suffix.empty() || suffix == "none") {
    spec.refine = std::nullopt;
  } else if (suffix == "4dof") {
    spec.refine = RefinementMode::FourDoF;
  } else if (suffix == "6dof") {
    spec.refine = RefinementMode::SixDoF;
  } else {
    throw std::invalid_argument("unknown refinement suffix in method '" + id + "'");
  }
  return spec;
}

std::string MethodSpec::id() const {
  std::string s = strategy ? to_string(*strategy) : "p3p";
  if (refine) s += *refine == RefinementMode::FourDoF ? "-4dof" : "-6dof";
  return s;
}

PipelineResult localize_pipeline(const MatchSet& matches, const MethodSpec& method,
                                 const RansacConfig& cfg) {
  RansacConfig rcfg = cfg;
  PipelineResult result;
  if (method.strategy) {
    rcfg.strategy = *method.strategy;
    result.ransac = run_ransac(matches, rcfg);
  } else {
    result.ransac = run_ransac_p3p(matches, rcfg);
  }
  result.pose = result.ransac.best_pose;
  if (!method.refine) return result;

  const RefinementMode mode = *method.refine;
  const std::size_t min_entities = mode == RefinementMode::SixDoF ? 3 : 2;

  auto recount = [&](const Pose& pose, double factor, std::vector<bool>& points,
                     std::vector<bool>& lines) {
    points.resize(matches.points.size());
    lines.resize(matches.lines.size());
    for (std::size_t i = 0; i < matches.points.size(); ++i) {
      points[i] = point_residual(pose, matches.points[i], matches.intrinsics) <
                  factor * cfg.point_threshold_px;
    }
    for (std::size_t i = 0; i < matches.lines.size(); ++i) {
      lines[i] = line_residual(pose, matches.lines[i], matches.intrinsics) <
                 factor * cfg.line_threshold_px;
    }
  };

  // Refit-and-recount fixpoint with an annealed threshold: the first rounds
  // accept matches within a widened band so a roughly-right hypothesis can
  // pull in enough support to refine, then the band shrinks back to the
  // configured threshold which re-filters strictly.
  std::vector<bool> point_mask, line_mask;
  std::vector<bool> prev_points, prev_lines;
  for (int round = 0; round < 10; ++round) {
    double factor = round < 3 ? std::pow(2.0, 3 - round) : 1.0;  // 8, 4, 2, then 1
    recount(result.pose, factor, point_mask, line_mask);
    std::size_t support =
        static_cast<std::size_t>(std::count(point_mask.begin(), point_mask.end(), true) +
                                 std::count(line_mask.begin(), line_mask.end(), true));
    if (support < min_entities) {
      if (factor > 1.0) continue;
      break;
    }
    if (factor == 1.0 && point_mask == prev_points && line_mask == prev_lines) break;

    RefinementProblem problem;
    problem.initial = result.pose;
    problem.mode = mode;
    problem.intrinsics = matches.intrinsics;
    for (std::size_t i = 0; i < matches.points.size(); ++i) {
      if (point_mask[i]) problem.points.push_back(matches.points[i]);
    }
    for (std::size_t i = 0; i < matches.lines.size(); ++i) {
      if (line_mask[i]) problem.lines.push_back(matches.lines[i]);
    }
    try {
      result.pose = refine(problem).pose;
    } catch (const SingularNormalEquationsError&) {
      break;
    }
    ++result.refinement_rounds;
    if (factor == 1.0) {
      prev_points = point_mask;
      prev_lines = line_mask;
    }
  }

  recount(result.pose, 1.0, point_mask, line_mask);
  result.ransac.point_inliers = point_mask;
  result.ransac.line_inliers = line_mask;
  result.ransac.best_score =
      static_cast<int>(std::count(point_mask.begin(), point_mask.end(), true) +
                       std::count(line_mask.begin(), line_mask.end(), true));
  return result;
}

ExperimentTable run_experiment(ExperimentKind kind, const std::vector<double>& sweep,
                               const std::vector<MethodSpec>& methods,
                               const ScenarioConfig& cfg, int threads) {
  if (sweep.empty()) throw std::invalid_argument("run_experiment: empty sweep");
  if (methods.empty()) throw std::invalid_argument("run_experiment: no methods");
  if (cfg.trials < 1) throw std::invalid_argument("run_experiment: trials must be >= 1");

  ExperimentTable table;
  table.kind = kind;
  table.sweep = sweep;
  table.base = cfg;
  for (const MethodSpec& m : methods) table.method_ids.push_back(m.id());

  const int n_levels = static_cast<int>(sweep.size());
  const int n_methods = static_cast<int>(methods.size());
  const int n_trials = cfg.trials;
  const int total = n_levels * n_methods * n_trials;
  std::vector<TrialOutcome> outcomes(total);

  parallel_for(total, threads, [&](int flat) {
    int trial = flat % n_trials;
    int method_idx = (flat / n_trials) % n_methods;
    int level_idx = flat / (n_trials * n_methods);
    double level = sweep[level_idx];
    const MethodSpec& method = methods[method_idx];

    ScenarioConfig scenario = cfg;
    switch (kind) {
      case ExperimentKind::Accuracy: scenario.pixel_noise_sigma = level; break;
      case ExperimentKind::Sensitivity: scenario.attitude_noise_sigma_deg = level; break;
      case ExperimentKind::Robustness: scenario.outlier_rate = level; break;
    }

    Rng rng = Rng::derive(cfg.seed, {kExperimentStream, static_cast<std::uint64_t>(level_idx),
                                     static_cast<std::uint64_t>(method_idx),
                                     static_cast<std::uint64_t>(trial)});
    TrialOutcome& outcome = outcomes[flat];
    outcome.method = method.id();
    try {
      GeneratedScene scene = generate_scene(scenario, rng);
      MatchSet ms = scene.matches;
      if (scenario.attitude_noise_sigma_deg > 0.0) {
        ms.attitude = perturb_attitude(scene.ground_truth.attitude,
                                       scenario.attitude_noise_sigma_deg, rng);
      }
      if (scenario.outlier_rate > 0.0) {
        ms = inject_outliers(ms, scene.ground_truth, scenario.outlier_rate, rng,
                             scenario.ransac.point_threshold_px,
                             scenario.ransac.line_threshold_px)
                 .matches;
      }
      RansacConfig rcfg = scenario.ransac;
      rcfg.seed = rng.next_u64();
      PipelineResult pipeline = localize_pipeline(ms, method, rcfg);
      PoseError err = evaluate_pose(pipeline.pose, scene.ground_truth);
      outcome.translation_error_pct = err.translation_error_pct;
      outcome.rotation_error_deg = err.rotation_error_deg;
      outcome.success = success_criterion(err);
    } catch (const std::exception&) {
      outcome.translation_error_pct = kInf;
      outcome.rotation_error_deg = kInf;
      outcome.success = false;
    }
  });

  for (int level_idx = 0; level_idx < n_levels; ++level_idx) {
    for (int method_idx = 0; method_idx < n_methods; ++method_idx) {
      ExperimentRow row;
      row.level = sweep[level_idx];
      row.method = methods[method_idx].id();
      row.trials = n_trials;
      std::vector<double> trans, rot;
      int successes = 0;
      for (int trial = 0; trial < n_trials; ++trial) {
        const TrialOutcome& o = outcomes[(level_idx * n_methods + method_idx) * n_trials + trial];
        trans.push_back(o.translation_error_pct);
        rot.push_back(o.rotation_error_deg);
        if (o.success) ++successes;
      }
      row.success_rate = static_cast<double>(successes) / n_trials;
      row.mean_trans_err_pct = mean_of(trans);
      row.median_trans_err_pct = median_of(trans);
      row.mean_rot_err_deg = mean_of(rot);
      row.median_rot_err_deg = median_of(rot);
      table.rows.push_back(row);
    }
  }
  return table;
}

}  // namespace m2e
