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

#include "m2e/ransac.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace m2e {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::uint64_t kRansacStream = 0x52414E53ULL;  // per-iteration stream tag

struct HypothesisScore {
  int count = -1;
  double inlier_residual_sum = kInf;
  std::vector<bool> point_inliers;
  std::vector<bool> line_inliers;

  bool better_than(const HypothesisScore& other) const {
    if (count != other.count) return count > other.count;
    return inlier_residual_sum < other.inlier_residual_sum;
  }
};

HypothesisScore score_pose(const Pose& pose, const MatchSet& ms, const RansacConfig& cfg) {
  HypothesisScore s;
  s.count = 0;
  s.inlier_residual_sum = 0.0;
  s.point_inliers.assign(ms.points.size(), false);
  s.line_inliers.assign(ms.lines.size(), false);
  for (std::size_t i = 0; i < ms.points.size(); ++i) {
    double r = point_residual(pose, ms.points[i], ms.intrinsics);
    if (r < cfg.point_threshold_px) {
      s.point_inliers[i] = true;
      ++s.count;
      s.inlier_residual_sum += r;
    }
  }
  for (std::size_t i = 0; i < ms.lines.size(); ++i) {
    double r = line_residual(pose, ms.lines[i], ms.intrinsics);
    if (r < cfg.line_threshold_px) {
      s.line_inliers[i] = true;
      ++s.count;
      s.inlier_residual_sum += r;
    }
  }
  return s;
}

void require_counts(int points, int lines, Strategy strategy) {
  switch (strategy) {
    case Strategy::OnePointOneLine:
      if (points < 1 || lines < 1) {
        throw InsufficientMatchesError("1p1l sampling needs at least one point and one line");
      }
      break;
    case Strategy::TwoPoints:
      if (points < 2) throw InsufficientMatchesError("2p sampling needs at least two points");
      break;
    case Strategy::Mixed:
      if (points < 1 || points + lines < 2) {
        throw InsufficientMatchesError("mixed sampling needs one point and two entities");
      }
      break;
  }
}

int adaptive_iterations_needed(double success_prob, double confidence) {
  if (success_prob <= 0.0) return std::numeric_limits<int>::max();
  if (success_prob >= 1.0) return 1;
  double n = std::log(1.0 - confidence) / std::log(1.0 - success_prob);
  if (!(n < 1e9)) return std::numeric_limits<int>::max();
  return static_cast<int>(std::ceil(n));
}

template <typename DrawFn>
RansacResult ransac_loop(const MatchSet& ms, const RansacConfig& cfg, DrawFn&& draw) {
  if (cfg.iterations < 1) throw std::invalid_argument("run_ransac: iterations must be >= 1");

  RansacResult result;
  HypothesisScore best;
  int iterations_run = 0;

  for (int iter = 0; iter < cfg.iterations; ++iter) {
    Rng rng = Rng::derive(cfg.seed, {kRansacStream, static_cast<std::uint64_t>(iter)});
    iterations_run = iter + 1;

    SolverOutput output = draw(rng, result.diagnostics);
    if (!output.ok() || output.candidates.empty()) {
      ++result.diagnostics.failed_draws;
      continue;
    }
    for (const Pose& pose : output.candidates) {
      HypothesisScore s = score_pose(pose, ms, cfg);
      ++result.diagnostics.hypotheses_scored;
      if (s.better_than(best)) {
        best = std::move(s);
        result.best_pose = pose;
      }
    }

    if (cfg.adaptive && best.count >= 2) {
      int point_in = static_cast<int>(std::count(best.point_inliers.begin(),
                                                 best.point_inliers.end(), true));
      int line_in = static_cast<int>(std::count(best.line_inliers.begin(),
                                                best.line_inliers.end(), true));
      InlierStats stats = InlierStats::from_counts(point_in, line_in,
                                                   static_cast<int>(ms.points.size()),
                                                   static_cast<int>(ms.lines.size()));
      double prob;
      try {
        prob = success_probability(stats, cfg.strategy);
      } catch (const std::domain_error&) {
        prob = 0.0;
      }
      if (iterations_run >= adaptive_iterations_needed(prob, cfg.confidence)) break;
    }
  }

  if (best.count < 0) throw NoValidHypothesisError();
  result.point_inliers = std::move(best.point_inliers);
  result.line_inliers = std::move(best.line_inliers);
  result.best_score = best.count;
  result.iterations_run = iterations_run;
  return result;
}

}  // namespace

const char* to_string(Strategy strategy) {
  switch (strategy) {
    case Strategy::OnePointOneLine: return "1p1l";
    case Strategy::TwoPoints: return "2p";
    case Strategy::Mixed: return "mixed";
  }
  return "unknown";
}

InlierStats InlierStats::from_counts(int point_inliers, int line_inliers, int points, int lines) {
  InlierStats s;
  s.points = points;
  s.lines = lines;
  s.point_rate = points > 0 ? static_cast<double>(point_inliers) / points : 0.0;
  s.line_rate = lines > 0 ? static_cast<double>(line_inliers) / lines : 0.0;
  return s;
}

std::array<EntityRef, 2> sample_entities(int points, int lines, Strategy strategy, Rng& rng) {
  require_counts(points, lines, strategy);
  auto point_ref = [](int i) { return EntityRef{EntityRef::Kind::Point, i}; };
  auto line_ref = [](int i) { return EntityRef{EntityRef::Kind::Line, i}; };

  switch (strategy) {
    case Strategy::OnePointOneLine: {
      int i = static_cast<int>(rng.below(static_cast<std::uint32_t>(points)));
      int j = static_cast<int>(rng.below(static_cast<std::uint32_t>(lines)));
      return {point_ref(i), line_ref(j)};
    }
    case Strategy::TwoPoints: {
      int i = static_cast<int>(rng.below(static_cast<std::uint32_t>(points)));
      int j = static_cast<int>(rng.below(static_cast<std::uint32_t>(points - 1)));
      if (j >= i) ++j;
      return {point_ref(i), point_ref(j)};
    }
    case Strategy::Mixed: {
      // One point first, then a uniform draw over the remaining entities.
      int i = static_cast<int>(rng.below(static_cast<std::uint32_t>(points)));
      int k = static_cast<int>(rng.below(static_cast<std::uint32_t>(points - 1 + lines)));
      if (k < points - 1) {
        if (k >= i) ++k;
        return {point_ref(i), point_ref(k)};
      }
      return {point_ref(i), line_ref(k - (points - 1))};
    }
  }
  throw std::logic_error("sample_entities: unreachable");
}

HypothesisDraw sample_hypothesis(const MatchSet& matches, Strategy strategy, Rng& rng) {
  HypothesisDraw draw;
  draw.entities = sample_entities(static_cast<int>(matches.points.size()),
                                  static_cast<int>(matches.lines.size()), strategy, rng);
  const EntityRef& a = draw.entities[0];
  const EntityRef& b = draw.entities[1];
  if (b.kind == EntityRef::Kind::Point) {
    draw.output = solve_2p(matches.points[a.index], matches.points[b.index],
                           matches.attitude, matches.intrinsics);
  } else {
    draw.output = solve_1p1l(matches.points[a.index], matches.lines[b.index],
                             matches.attitude, matches.intrinsics);
  }
  return draw;
}

double point_residual(const Pose& pose, const PointMatch& match, const Intrinsics& intrinsics) {
  Vec3 cam = pose.apply(match.world);
  if (!(cam.z() > tol().min_depth)) return kInf;
  return (project_camera_point(intrinsics, cam) - match.pixel).norm();
}

double line_residual(const Pose& pose, const LineMatch& match, const Intrinsics& intrinsics) {
  Vec2 g = match.pixel_endpoints[1] - match.pixel_endpoints[0];
  double len = g.norm();
  if (len < 1e-12) return kInf;
  Vec2 normal(-g.y() / len, g.x() / len);

  double worst = 0.0;
  for (const Vec3& endpoint : match.world_endpoints) {
    Vec3 cam = pose.apply(endpoint);
    if (!(cam.z() > tol().min_depth)) return kInf;
    Vec2 proj = project_camera_point(intrinsics, cam);
    worst = std::max(worst, std::abs(normal.dot(proj - match.pixel_endpoints[0])));
  }
  return worst;
}

RansacResult run_ransac(const MatchSet& matches, const RansacConfig& cfg) {
  require_counts(static_cast<int>(matches.points.size()),
                 static_cast<int>(matches.lines.size()), cfg.strategy);
  return ransac_loop(matches, cfg, [&](Rng& rng, RansacDiagnostics& diag) {
    HypothesisDraw draw = sample_hypothesis(matches, cfg.strategy, rng);
    if (draw.entities[1].kind == EntityRef::Kind::Point) {
      ++diag.two_point_draws;
    } else {
      ++diag.point_line_draws;
    }
    return draw.output;
  });
}

RansacResult run_ransac_p3p(const MatchSet& matches, const RansacConfig& cfg) {
  int points = static_cast<int>(matches.points.size());
  if (points < 3) throw InsufficientMatchesError("p3p sampling needs at least three points");
  return ransac_loop(matches, cfg, [&](Rng& rng, RansacDiagnostics&) {
    int i = static_cast<int>(rng.below(static_cast<std::uint32_t>(points)));
    int j = static_cast<int>(rng.below(static_cast<std::uint32_t>(points - 1)));
    if (j >= i) ++j;
    int k = static_cast<int>(rng.below(static_cast<std::uint32_t>(points - 2)));
    int lo = std::min(i, j), hi = std::max(i, j);
    if (k >= lo) ++k;
    if (k >= hi) ++k;
    return solve_p3p(matches.points[i], matches.points[j], matches.points[k],
                     matches.intrinsics);
  });
}

double success_probability(const InlierStats& stats, Strategy strategy) {
  double lambda = stats.point_rate;
  double gamma = stats.line_rate;
  double p = stats.points;
  double l = stats.lines;
  if (lambda < 0.0 || lambda > 1.0 || gamma < 0.0 || gamma > 1.0) {
    throw std::domain_error("success_probability: rates must lie in [0,1]");
  }

  double prob = 0.0;
  switch (strategy) {
    case Strategy::OnePointOneLine:
      if (stats.points < 1 || stats.lines < 1) {
        throw std::domain_error("success_probability: 1p1l needs p >= 1 and l >= 1");
      }
      prob = lambda * gamma;
      break;
    case Strategy::TwoPoints:
      if (stats.points < 2) throw std::domain_error("success_probability: 2p needs p >= 2");
      prob = lambda * (lambda * p - 1.0) / (p - 1.0);
      break;
    case Strategy::Mixed:
      if (stats.points < 1 || stats.points + stats.lines < 2) {
        throw std::domain_error("success_probability: mixed needs p >= 1 and p + l >= 2");
      }
      prob = lambda * (lambda * p + gamma * l - 1.0) / (p + l - 1.0);
      break;
  }
  return std::clamp(prob, 0.0, 1.0);
}

Strategy select_strategy(const InlierStats& stats) {
  // Evaluation order puts Mixed last so that an exact tie resolves to it.
  constexpr Strategy order[] = {Strategy::TwoPoints, Strategy::OnePointOneLine, Strategy::Mixed};
  bool found = false;
  Strategy best = Strategy::Mixed;
  double best_prob = -1.0;
  for (Strategy s : order) {
    double prob;
    try {
      prob = success_probability(stats, s);
    } catch (const std::domain_error&) {
      continue;
    }
    if (!found || prob > best_prob || (prob == best_prob && s == Strategy::Mixed)) {
      found = true;
      best = s;
      best_prob = prob;
    }
  }
  if (!found) throw std::domain_error("select_strategy: no strategy applicable to these counts");
  return best;
}

std::map<std::string, Strategy> label_segments(
    const std::vector<std::pair<std::string, InlierStats>>& history) {
  if (history.empty()) throw EmptyHistoryError();

  struct Acc {
    double lambda = 0.0, gamma = 0.0, points = 0.0, lines = 0.0;
    int n = 0;
  };
  std::map<std::string, Acc> acc;
  for (const auto& [segment, stats] : history) {
    Acc& a = acc[segment];
    a.lambda += stats.point_rate;
    a.gamma += stats.line_rate;
    a.points += stats.points;
    a.lines += stats.lines;
    ++a.n;
  }

  std::map<std::string, Strategy> labels;
  for (const auto& [segment, a] : acc) {
    InlierStats mean;
    mean.point_rate = a.lambda / a.n;
    mean.line_rate = a.gamma / a.n;
    mean.points = static_cast<int>(std::llround(a.points / a.n));
    mean.lines = static_cast<int>(std::llround(a.lines / a.n));
    labels[segment] = select_strategy(mean);
  }
  return labels;
}

}  // namespace m2e
