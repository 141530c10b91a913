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

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "m2e/matches.hpp"
#include "m2e/rng.hpp"
#include "m2e/solvers.hpp"

namespace m2e {

struct InsufficientMatchesError : std::runtime_error {
  explicit InsufficientMatchesError(const char* what) : std::runtime_error(what) {}
};
struct NoValidHypothesisError : std::runtime_error {
  NoValidHypothesisError() : std::runtime_error("run_ransac: every hypothesis draw failed") {}
};
struct EmptyHistoryError : std::runtime_error {
  EmptyHistoryError() : std::runtime_error("label_segments: segment has no history") {}
};

enum class Strategy { OnePointOneLine, TwoPoints, Mixed };

const char* to_string(Strategy strategy);

struct RansacConfig {
  int iterations = 100;
  double point_threshold_px = 2.0;
  double line_threshold_px = 2.0;
  std::uint64_t seed = 0;
  Strategy strategy = Strategy::Mixed;
  // Optional confidence-based early stop; off by default to match the fixed
  // 100-iteration protocol.
  bool adaptive = false;
  double confidence = 0.99;
};

struct EntityRef {
  enum class Kind { Point, Line };
  Kind kind = Kind::Point;
  int index = 0;

  bool operator==(const EntityRef&) const = default;
};

// Inlier-rate summary of a match set: point rate lambda, line rate gamma.
struct InlierStats {
  double point_rate = 0.0;  // lambda
  double line_rate = 0.0;   // gamma
  int points = 0;           // p
  int lines = 0;            // l

  static InlierStats from_counts(int point_inliers, int line_inliers, int points, int lines);
};

struct RansacDiagnostics {
  int hypotheses_scored = 0;
  int failed_draws = 0;       // degenerate / unsolvable samples
  int two_point_draws = 0;
  int point_line_draws = 0;
};

struct RansacResult {
  Pose best_pose;
  std::vector<bool> point_inliers;
  std::vector<bool> line_inliers;
  int best_score = 0;
  int iterations_run = 0;
  RansacDiagnostics diagnostics;
};

// Index-level sampling for one hypothesis; uniform without replacement within
// the strategy's pools. Mixed draws one point, then one entity uniformly from
// the remaining points and lines. Throws InsufficientMatchesError.
std::array<EntityRef, 2> sample_entities(int points, int lines, Strategy strategy, Rng& rng);

struct HypothesisDraw {
  std::array<EntityRef, 2> entities;
  SolverOutput output;
};

HypothesisDraw sample_hypothesis(const MatchSet& matches, Strategy strategy, Rng& rng);

// Reprojection distance in pixels; +infinity when the world point falls
// behind the camera.
double point_residual(const Pose& pose, const PointMatch& match, const Intrinsics& intrinsics);

// Max over the two projected world endpoints of the perpendicular distance
// to the infinite image line through the measured segment; +infinity when
// either endpoint falls behind the camera.
double line_residual(const Pose& pose, const LineMatch& match, const Intrinsics& intrinsics);

// 2-entity RANSAC. Runs exactly cfg.iterations hypothesis draws (fewer only
// in adaptive mode), scoring every solver candidate by inlier count with ties
// broken by summed inlier residual, then by iteration order. Deterministic
// given cfg.seed. Throws InsufficientMatchesError / NoValidHypothesisError.
RansacResult run_ransac(const MatchSet& matches, const RansacConfig& cfg);

// Same engine with the 3-point baseline solver; samples three distinct point
// matches per iteration and scores over the full match set.
RansacResult run_ransac_p3p(const MatchSet& matches, const RansacConfig& cfg);

// Single-draw success probability of a sampling strategy:
//   P_1p1l  = lambda * gamma
//   P_2p    = lambda * (lambda p - 1) / (p - 1)
//   P_mixed = lambda * (lambda p + gamma l - 1) / (p + l - 1)
// clamped to [0, 1]. Throws std::domain_error on count preconditions.
double success_probability(const InlierStats& stats, Strategy strategy);

// Argmax of success_probability over the applicable strategies; exact ties
// resolve to Mixed.
Strategy select_strategy(const InlierStats& stats);

// Per-segment strategy labels from historical inlier statistics: rates are
// averaged per segment and select_strategy applied. Throws EmptyHistoryError.
std::map<std::string, Strategy> label_segments(
    const std::vector<std::pair<std::string, InlierStats>>& history);

}  // namespace m2e
