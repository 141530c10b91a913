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

#include <CLI11.hpp>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "m2e/match_io.hpp"
#include "m2e/synthetic.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;

struct UsageError : std::runtime_error {
  explicit UsageError(const std::string& what) : std::runtime_error(what) {}
};

std::vector<double> parse_sweep(const std::string& text) {
  std::vector<double> levels;
  if (text.find(':') != std::string::npos) {
    // start:stop:step, inclusive of stop up to floating slack
    double start, stop, step;
    char c1, c2;
    std::istringstream in(text);
    if (!(in >> start >> c1 >> stop >> c2 >> step) || c1 != ':' || c2 != ':' || step <= 0.0) {
      throw UsageError("bad sweep '" + text + "', expected start:stop:step");
    }
    int count = static_cast<int>(std::floor((stop - start) / step + 1e-9)) + 1;
    for (int i = 0; i < count; ++i) levels.push_back(start + i * step);
  } else {
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
      if (item.empty()) continue;
      try {
        levels.push_back(std::stod(item));
      } catch (const std::exception&) {
        throw UsageError("bad sweep value '" + item + "'");
      }
    }
  }
  if (levels.empty()) throw UsageError("empty sweep '" + text + "'");
  return levels;
}

std::vector<m2e::MethodSpec> parse_methods(const std::string& text) {
  std::vector<m2e::MethodSpec> methods;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item.empty()) continue;
    try {
      methods.push_back(m2e::MethodSpec::parse(item));
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }
  if (methods.empty()) throw UsageError("no methods given");
  return methods;
}

void write_output(const std::string& path, const std::string& payload) {
  if (path.empty() || path == "-") {
    std::cout << payload;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file '" + path + "'");
  out << payload;
}

std::string format_value(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

struct ExperimentFlags {
  int points = 10;
  int lines = 10;
  int trials = 200;
  int iterations = 100;
  std::uint64_t seed = 0;
  double point_threshold = 2.0;
  double line_threshold = 2.0;
  int threads = 0;
  std::string methods = "2p,1p1l,mixed";
  std::string out;
};

void add_experiment_flags(CLI::App* cmd, ExperimentFlags& f, bool with_counts = true) {
  if (with_counts) {
    cmd->add_option("--points", f.points, "point matches per scene");
    cmd->add_option("--lines", f.lines, "line matches per scene");
  }
  cmd->add_option("--trials", f.trials, "trials per (level, method)");
  cmd->add_option("--iterations", f.iterations, "RANSAC iterations");
  cmd->add_option("--seed", f.seed, "master seed");
  cmd->add_option("--point-threshold-px", f.point_threshold, "point inlier threshold (px)");
  cmd->add_option("--line-threshold-px", f.line_threshold, "line inlier threshold (px)");
  cmd->add_option("--threads", f.threads, "worker threads (0 = hardware)");
  cmd->add_option("--methods", f.methods, "comma list, e.g. 2p,1p1l-4dof,mixed-6dof,p3p");
  cmd->add_option("--out", f.out, "output CSV path (default stdout)");
}

m2e::ScenarioConfig scenario_from(const ExperimentFlags& f) {
  m2e::ScenarioConfig cfg;
  cfg.n_point_matches = f.points;
  cfg.n_line_matches = f.lines;
  cfg.trials = f.trials;
  cfg.seed = f.seed;
  cfg.ransac.iterations = f.iterations;
  cfg.ransac.point_threshold_px = f.point_threshold;
  cfg.ransac.line_threshold_px = f.line_threshold;
  return cfg;
}

void run_experiment_command(m2e::ExperimentKind kind, const ExperimentFlags& flags,
                            const std::string& sweep_text, m2e::ScenarioConfig cfg) {
  auto sweep = parse_sweep(sweep_text);
  auto methods = parse_methods(flags.methods);
  m2e::ExperimentTable table = m2e::run_experiment(kind, sweep, methods, cfg, flags.threads);
  write_output(flags.out, m2e::experiment_csv(table));
}

int run_localize(const std::string& input, const std::string& strategy_name,
                 const std::string& refine_name, const ExperimentFlags& flags) {
  std::ifstream file(input, std::ios::binary);
  if (!file) throw std::runtime_error("cannot open input file '" + input + "'");
  m2e::MatchFileContents contents = m2e::parse_match_file(file);
  const m2e::MatchSet& ms = contents.matches;

  m2e::RansacConfig rcfg;
  rcfg.iterations = flags.iterations;
  rcfg.point_threshold_px = flags.point_threshold;
  rcfg.line_threshold_px = flags.line_threshold;
  rcfg.seed = flags.seed;

  std::string method_id = strategy_name;
  if (strategy_name == "auto") {
    // Probe with the mixed strategy, estimate inlier rates from its masks,
    // then select and re-run.
    m2e::PipelineResult probe =
        m2e::localize_pipeline(ms, m2e::MethodSpec::parse("mixed"), rcfg);
    int pin = static_cast<int>(std::count(probe.ransac.point_inliers.begin(),
                                          probe.ransac.point_inliers.end(), true));
    int lin = static_cast<int>(std::count(probe.ransac.line_inliers.begin(),
                                          probe.ransac.line_inliers.end(), true));
    m2e::InlierStats stats = m2e::InlierStats::from_counts(
        pin, lin, static_cast<int>(ms.points.size()), static_cast<int>(ms.lines.size()));
    method_id = m2e::to_string(m2e::select_strategy(stats));
  }
  if (refine_name != "none") method_id += "-" + refine_name;

  m2e::MethodSpec method = m2e::MethodSpec::parse(method_id);
  m2e::PipelineResult result = m2e::localize_pipeline(ms, method, rcfg);

  int pin = static_cast<int>(std::count(result.ransac.point_inliers.begin(),
                                        result.ransac.point_inliers.end(), true));
  int lin = static_cast<int>(std::count(result.ransac.line_inliers.begin(),
                                        result.ransac.line_inliers.end(), true));

  std::cout << "strategy " << method_id << "\n";
  std::cout << "yaw " << format_value(result.pose.yaw) << "\n";
  std::cout << "pitch " << format_value(result.pose.attitude.pitch()) << "\n";
  std::cout << "roll " << format_value(result.pose.attitude.roll()) << "\n";
  std::cout << "translation " << format_value(result.pose.translation.x()) << " "
            << format_value(result.pose.translation.y()) << " "
            << format_value(result.pose.translation.z()) << "\n";
  std::cout << "point_inliers " << pin << "/" << ms.points.size() << "\n";
  std::cout << "line_inliers " << lin << "/" << ms.lines.size() << "\n";
  if (contents.ground_truth) {
    m2e::PoseError err = m2e::evaluate_pose(result.pose, *contents.ground_truth);
    std::cout << "translation_error_pct " << format_value(err.translation_error_pct) << "\n";
    std::cout << "rotation_error_deg " << format_value(err.rotation_error_deg) << "\n";
    std::cout << "success " << (m2e::success_criterion(err) ? 1 : 0) << "\n";
  }
  return kExitOk;
}

int run_select_strategy(const std::string& input, const std::string& out_path) {
  std::istream* in = &std::cin;
  std::ifstream file;
  if (!input.empty() && input != "-") {
    file.open(input);
    if (!file) throw std::runtime_error("cannot open input file '" + input + "'");
    in = &file;
  }

  std::vector<std::pair<std::string, m2e::InlierStats>> history;
  std::string line;
  int line_number = 0;
  while (std::getline(*in, line)) {
    ++line_number;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    std::string segment;
    m2e::InlierStats stats;
    if (!(fields >> segment >> stats.point_rate >> stats.line_rate >> stats.points >> stats.lines)) {
      throw std::runtime_error("history line " + std::to_string(line_number) +
                               ": expected 'segment lambda gamma p l'");
    }
    history.emplace_back(segment, stats);
  }

  auto labels = m2e::label_segments(history);
  std::string payload = "segment,strategy\n";
  for (const auto& [segment, strategy] : labels) {
    payload += segment;
    payload += ',';
    payload += m2e::to_string(strategy);
    payload += '\n';
  }
  write_output(out_path, payload);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gravity-aligned 4DoF localization from point and line matches"};
  app.require_subcommand(1);

  ExperimentFlags acc_flags, sens_flags, rob_flags;
  std::string acc_sweep = "0:2:0.5";
  std::string sens_sweep = "0,5,15,25";
  std::string rob_sweep = "0:0.8:0.1";
  double sens_pixel_noise = 1.0;
  double rob_pixel_noise = 0.0;
  int rob_inliers = 10;

  CLI::App* accuracy = app.add_subcommand("accuracy", "pixel-noise sweep");
  add_experiment_flags(accuracy, acc_flags);
  accuracy->add_option("--noise-sweep-px", acc_sweep, "pixel noise levels");

  CLI::App* sensitivity = app.add_subcommand("sensitivity", "attitude-noise sweep");
  add_experiment_flags(sensitivity, sens_flags);
  sensitivity->add_option("--attitude-noise-sweep-deg", sens_sweep, "attitude noise levels (deg)");
  sensitivity->add_option("--pixel-noise-px", sens_pixel_noise, "fixed pixel noise");

  CLI::App* robustness = app.add_subcommand("robustness", "outlier-rate sweep");
  add_experiment_flags(robustness, rob_flags, false);
  robustness->add_option("--inliers", rob_inliers, "inlier count per feature type");
  robustness->add_option("--outlier-rates", rob_sweep, "outlier rate levels");
  robustness->add_option("--pixel-noise-px", rob_pixel_noise, "fixed pixel noise");

  ExperimentFlags loc_flags;
  std::string loc_input, loc_strategy = "mixed", loc_refine = "none";
  CLI::App* localize = app.add_subcommand("localize", "localize one match file");
  localize->add_option("--input", loc_input, ".m2e match file")->required();
  localize->add_option("--strategy", loc_strategy, "1p1l|2p|mixed|p3p|auto");
  localize->add_option("--refine", loc_refine, "none|4dof|6dof");
  localize->add_option("--iterations", loc_flags.iterations, "RANSAC iterations");
  localize->add_option("--seed", loc_flags.seed, "RANSAC seed");
  localize->add_option("--point-threshold-px", loc_flags.point_threshold, "point threshold (px)");
  localize->add_option("--line-threshold-px", loc_flags.line_threshold, "line threshold (px)");

  std::string sel_input, sel_out;
  CLI::App* select = app.add_subcommand("select-strategy", "label segments from stats history");
  select->add_option("--input", sel_input, "history table: segment lambda gamma p l");
  select->add_option("--out", sel_out, "output path (default stdout)");

  ExperimentFlags gen_flags;
  gen_flags.points = 5;
  gen_flags.lines = 5;
  double gen_noise = 0.0;
  std::string gen_out;
  CLI::App* gen = app.add_subcommand("gen-scene", "emit a synthetic match file");
  gen->add_option("--points", gen_flags.points, "point matches");
  gen->add_option("--lines", gen_flags.lines, "line matches");
  gen->add_option("--pixel-noise", gen_noise, "pixel noise sigma");
  gen->add_option("--seed", gen_flags.seed, "scene seed");
  gen->add_option("--out", gen_out, "output path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (accuracy->parsed()) {
      m2e::ScenarioConfig cfg = scenario_from(acc_flags);
      run_experiment_command(m2e::ExperimentKind::Accuracy, acc_flags, acc_sweep, cfg);
    } else if (sensitivity->parsed()) {
      m2e::ScenarioConfig cfg = scenario_from(sens_flags);
      cfg.pixel_noise_sigma = sens_pixel_noise;
      run_experiment_command(m2e::ExperimentKind::Sensitivity, sens_flags, sens_sweep, cfg);
    } else if (robustness->parsed()) {
      rob_flags.points = rob_inliers;
      rob_flags.lines = rob_inliers;
      m2e::ScenarioConfig cfg = scenario_from(rob_flags);
      cfg.pixel_noise_sigma = rob_pixel_noise;
      run_experiment_command(m2e::ExperimentKind::Robustness, rob_flags, rob_sweep, cfg);
    } else if (localize->parsed()) {
      return run_localize(loc_input, loc_strategy, loc_refine, loc_flags);
    } else if (select->parsed()) {
      return run_select_strategy(sel_input, sel_out);
    } else if (gen->parsed()) {
      m2e::ScenarioConfig cfg;
      cfg.n_point_matches = gen_flags.points;
      cfg.n_line_matches = gen_flags.lines;
      cfg.pixel_noise_sigma = gen_noise;
      m2e::Rng rng = m2e::Rng::derive(gen_flags.seed, {0x47454E53ULL});
      m2e::GeneratedScene scene = m2e::generate_scene(cfg, rng);
      write_output(gen_out, m2e::serialize_match_file(scene.matches, scene.ground_truth));
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitOk;
}
