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

#include <optional>
#include <string>
#include <vector>

#include "m2e/matches.hpp"
#include "m2e/ransac.hpp"
#include "m2e/refinement.hpp"
#include "m2e/rng.hpp"

namespace m2e {

struct GenerationExhaustedError : std::runtime_error {
  GenerationExhaustedError()
      : std::runtime_error("generate_scene: rejection sampling budget exhausted") {}
};
struct ZeroTruthTranslationError : std::runtime_error {
  ZeroTruthTranslationError()
      : std::runtime_error("evaluate_pose: ground-truth translation is zero") {}
};

// One synthetic experiment description. Features live in the cube [-1,1]^3,
// the camera on a shell outside it looking in, fixed 640x480 image with
// K = (500, 500, 320, 240).
struct ScenarioConfig {
  int n_point_matches = 10;
  int n_line_matches = 10;
  double pixel_noise_sigma = 0.0;        // pixels
  double attitude_noise_sigma_deg = 0.0; // degrees, applied to pitch and roll
  double outlier_rate = 0.0;             // fraction in [0,1)
  int trials = 200;
  RansacConfig ransac;
  std::uint64_t seed = 0;
};

struct GeneratedScene {
  MatchSet matches;
  Pose ground_truth;
};

// Fresh synthetic scene: uniform features in the cube, camera pose with yaw
// uniform in (-pi, pi], pitch/roll uniform in +/-30 deg, center on a shell of
// radius 2.5..3.5 looking at the cube. Every feature projects in front of the
// camera and inside the image before pixel noise is applied.
GeneratedScene generate_scene(const ScenarioConfig& cfg, Rng& rng);

struct OutlierInjection {
  MatchSet matches;
  std::vector<bool> point_inliers;  // ground-truth masks, true = inlier
  std::vector<bool> line_inliers;
};

// Appends outliers (world features re-associated with foreign image
// observations) until the requested fraction is reached, per feature type.
// Each injected outlier is verified to exceed the residual threshold under
// the ground-truth pose and re-drawn otherwise. Original matches untouched.
OutlierInjection inject_outliers(const MatchSet& matches, const Pose& ground_truth,
                                 double rate, Rng& rng, double point_threshold_px = 2.0,
                                 double line_threshold_px = 2.0);

// Independent zero-mean Gaussian noise on pitch and roll; samples that leave
// the valid pitch range are re-drawn.
Attitude perturb_attitude(const Attitude& attitude, double sigma_deg, Rng& rng);

struct PoseError {
  double translation_error_pct = 0.0;
  double rotation_error_deg = 0.0;
};

// Translation error 100*||t - t_gt|| / ||t_gt||; rotation error is the angle
// of R * R_gt^T in degrees. Throws ZeroTruthTranslationError.
PoseError evaluate_pose(const Pose& estimate, const Pose& truth);

// Localization counts as a success below 10% translation and 5 deg rotation.
bool success_criterion(const PoseError& error);

struct TrialOutcome {
  double translation_error_pct = 0.0;
  double rotation_error_deg = 0.0;
  bool success = false;
  std::string method;
};

enum class ExperimentKind { Accuracy, Sensitivity, Robustness };

const char* to_string(ExperimentKind kind);

// A method is a sampling strategy (or the P3P baseline) plus an optional
// refinement mode, e.g. "2p", "1p1l-4dof", "mixed-6dof", "p3p-6dof".
struct MethodSpec {
  std::optional<Strategy> strategy;  // empty => P3P baseline
  std::optional<RefinementMode> refine;

  static MethodSpec parse(const std::string& id);  // throws std::invalid_argument
  std::string id() const;
};

// Full localization pipeline for one match set: RANSAC, then (optionally)
// refinement over the inliers iterated with inlier recounting to a fixpoint.
struct PipelineResult {
  Pose pose;
  RansacResult ransac;
  int refinement_rounds = 0;
};

PipelineResult localize_pipeline(const MatchSet& matches, const MethodSpec& method,
                                 const RansacConfig& cfg);

struct ExperimentRow {
  double level = 0.0;
  std::string method;
  int trials = 0;
  double success_rate = 0.0;
  double mean_trans_err_pct = 0.0;
  double median_trans_err_pct = 0.0;
  double mean_rot_err_deg = 0.0;
  double median_rot_err_deg = 0.0;
};

struct ExperimentTable {
  ExperimentKind kind = ExperimentKind::Accuracy;
  std::vector<double> sweep;
  std::vector<std::string> method_ids;
  ScenarioConfig base;
  std::vector<ExperimentRow> rows;  // one per (level, method), level-major
};

// Runs cfg.trials independent trials (fresh scene each) per (level, method).
// The sweep level sets pixel noise (accuracy), attitude noise in degrees
// (sensitivity), or outlier rate (robustness). Deterministic for a given
// seed, regardless of `threads` (0 = hardware concurrency).
ExperimentTable run_experiment(ExperimentKind kind, const std::vector<double>& sweep,
                               const std::vector<MethodSpec>& methods,
                               const ScenarioConfig& cfg, int threads = 0);

}  // namespace m2e
