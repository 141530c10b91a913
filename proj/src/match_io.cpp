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

#include "m2e/match_io.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <sstream>
#include <vector>

namespace m2e {

namespace {

constexpr std::string_view kHeader = "# m2e v1";

std::string format17(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  (void)ec;
  return std::string(buf, end);
}

std::string format_short(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, end);
}

struct Token {
  std::string_view text;
  int column;  // 1-based
};

std::vector<Token> tokenize(std::string_view line) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    if (line[i] == ' ' || line[i] == '\t') {
      ++i;
      continue;
    }
    std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
    tokens.push_back(Token{line.substr(start, i - start), static_cast<int>(start) + 1});
  }
  return tokens;
}

class RecordParser {
 public:
  RecordParser(int line_number, const std::vector<Token>& tokens)
      : line_(line_number), tokens_(tokens) {}

  double number(std::size_t index) const {
    const Token& t = tokens_.at(index);
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), value);
    if (ec == std::errc::result_out_of_range) {
      throw ParseError(ParseErrorKind::NonFinite, line_, t.column, "value out of range");
    }
    if (ec != std::errc() || ptr != t.text.data() + t.text.size()) {
      throw ParseError(ParseErrorKind::Syntax, line_, t.column,
                       "expected a number, got '" + std::string(t.text) + "'");
    }
    if (!std::isfinite(value)) {
      throw ParseError(ParseErrorKind::NonFinite, line_, t.column, "non-finite value");
    }
    return value;
  }

  void expect_count(std::size_t fields) const {
    if (tokens_.size() - 1 < fields) {
      throw ParseError(ParseErrorKind::Syntax, line_, end_column(),
                       "record is missing fields");
    }
    if (tokens_.size() - 1 > fields) {
      throw ParseError(ParseErrorKind::Syntax, line_, tokens_[fields + 1].column,
                       "unexpected trailing fields");
    }
  }

  int line() const { return line_; }
  int end_column() const {
    return tokens_.empty() ? 1 : tokens_.back().column + static_cast<int>(tokens_.back().text.size());
  }

 private:
  int line_;
  const std::vector<Token>& tokens_;
};

}  // namespace

ParseError::ParseError(ParseErrorKind kind, int line, int column, const std::string& message)
    : std::runtime_error("line " + std::to_string(line) + ", column " + std::to_string(column) +
                         ": " + message),
      kind_(kind),
      line_(line),
      column_(column) {}

MatchFileContents parse_match_file(std::istream& input) {
  MatchFileContents contents;
  std::optional<Intrinsics> intrinsics;
  std::optional<Attitude> attitude;
  std::vector<PointMatch> points;
  std::vector<LineMatch> lines;

  std::string line;
  int line_number = 0;
  bool saw_header = false;

  while (std::getline(input, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();

    if (line_number == 1) {
      if (line != kHeader) {
        throw ParseError(ParseErrorKind::Syntax, 1, 1, "missing or unsupported version header");
      }
      saw_header = true;
      continue;
    }
    if (line.empty()) continue;
    if (line[0] == '#') continue;

    std::vector<Token> tokens = tokenize(line);
    if (tokens.empty()) continue;
    RecordParser rec(line_number, tokens);
    std::string_view tag = tokens[0].text;

    if (tag == "K") {
      rec.expect_count(4);
      if (intrinsics) {
        throw ParseError(ParseErrorKind::DuplicateRecord, line_number, tokens[0].column,
                         "duplicate K record");
      }
      try {
        intrinsics = Intrinsics(rec.number(1), rec.number(2), rec.number(3), rec.number(4));
      } catch (const std::invalid_argument& e) {
        throw ParseError(ParseErrorKind::InvalidRecord, line_number, tokens[1].column, e.what());
      }
    } else if (tag == "ATT") {
      rec.expect_count(2);
      if (attitude) {
        throw ParseError(ParseErrorKind::DuplicateRecord, line_number, tokens[0].column,
                         "duplicate ATT record");
      }
      try {
        attitude = Attitude(rec.number(1), rec.number(2));
      } catch (const std::invalid_argument& e) {
        throw ParseError(ParseErrorKind::InvalidRecord, line_number, tokens[1].column, e.what());
      }
    } else if (tag == "GT") {
      rec.expect_count(6);
      if (contents.ground_truth) {
        throw ParseError(ParseErrorKind::DuplicateRecord, line_number, tokens[0].column,
                         "duplicate GT record");
      }
      try {
        Pose gt;
        gt.yaw = rec.number(1);
        gt.attitude = Attitude(rec.number(2), rec.number(3));
        gt.translation = Vec3(rec.number(4), rec.number(5), rec.number(6));
        contents.ground_truth = gt;
      } catch (const std::invalid_argument& e) {
        throw ParseError(ParseErrorKind::InvalidRecord, line_number, tokens[1].column, e.what());
      }
    } else if (tag == "P") {
      rec.expect_count(5);
      PointMatch m;
      m.pixel = Vec2(rec.number(1), rec.number(2));
      m.world = Vec3(rec.number(3), rec.number(4), rec.number(5));
      points.push_back(m);
    } else if (tag == "L") {
      rec.expect_count(10);
      LineMatch m;
      m.pixel_endpoints[0] = Vec2(rec.number(1), rec.number(2));
      m.pixel_endpoints[1] = Vec2(rec.number(3), rec.number(4));
      m.world_endpoints[0] = Vec3(rec.number(5), rec.number(6), rec.number(7));
      m.world_endpoints[1] = Vec3(rec.number(8), rec.number(9), rec.number(10));
      if (std::string msg = validate_match(m); !msg.empty()) {
        throw ParseError(ParseErrorKind::InvalidRecord, line_number, tokens[0].column, msg);
      }
      lines.push_back(m);
    } else {
      throw ParseError(ParseErrorKind::Syntax, line_number, tokens[0].column,
                       "unknown record tag '" + std::string(tag) + "'");
    }
  }

  if (!saw_header) {
    throw ParseError(ParseErrorKind::Syntax, 1, 1, "missing or unsupported version header");
  }
  if (!intrinsics) {
    throw ParseError(ParseErrorKind::MissingRecord, line_number, 1, "missing K record");
  }
  if (!attitude) {
    throw ParseError(ParseErrorKind::MissingRecord, line_number, 1, "missing ATT record");
  }

  contents.matches.intrinsics = *intrinsics;
  contents.matches.attitude = *attitude;
  contents.matches.points = std::move(points);
  contents.matches.lines = std::move(lines);
  return contents;
}

MatchFileContents parse_match_file(const std::string& text) {
  std::istringstream stream(text);
  return parse_match_file(stream);
}

std::string serialize_match_file(const MatchSet& matches,
                                 const std::optional<Pose>& ground_truth) {
  std::string out(kHeader);
  out += '\n';
  out += "K " + format17(matches.intrinsics.fx()) + ' ' + format17(matches.intrinsics.fy()) +
         ' ' + format17(matches.intrinsics.cx()) + ' ' + format17(matches.intrinsics.cy()) + '\n';
  out += "ATT " + format17(matches.attitude.pitch()) + ' ' + format17(matches.attitude.roll()) + '\n';
  if (ground_truth) {
    out += "GT " + format17(ground_truth->yaw) + ' ' + format17(ground_truth->attitude.pitch()) +
           ' ' + format17(ground_truth->attitude.roll()) + ' ' +
           format17(ground_truth->translation.x()) + ' ' + format17(ground_truth->translation.y()) +
           ' ' + format17(ground_truth->translation.z()) + '\n';
  }
  for (const PointMatch& m : matches.points) {
    out += "P " + format17(m.pixel.x()) + ' ' + format17(m.pixel.y()) + ' ' +
           format17(m.world.x()) + ' ' + format17(m.world.y()) + ' ' + format17(m.world.z()) + '\n';
  }
  for (const LineMatch& m : matches.lines) {
    out += "L " + format17(m.pixel_endpoints[0].x()) + ' ' + format17(m.pixel_endpoints[0].y()) +
           ' ' + format17(m.pixel_endpoints[1].x()) + ' ' + format17(m.pixel_endpoints[1].y());
    for (const Vec3& w : m.world_endpoints) {
      out += ' ' + format17(w.x()) + ' ' + format17(w.y()) + ' ' + format17(w.z());
    }
    out += '\n';
  }
  return out;
}

std::string experiment_csv(const ExperimentTable& table) {
  std::string out;
  out += "# m2e ";
  out += to_string(table.kind);
  out += " experiment\n";

  const ScenarioConfig& c = table.base;
  out += "# seed=" + std::to_string(c.seed) + " trials=" + std::to_string(c.trials) +
         " points=" + std::to_string(c.n_point_matches) +
         " lines=" + std::to_string(c.n_line_matches) +
         " pixel_noise_px=" + format_short(c.pixel_noise_sigma) +
         " attitude_noise_deg=" + format_short(c.attitude_noise_sigma_deg) +
         " outlier_rate=" + format_short(c.outlier_rate) + "\n";
  out += "# ransac: iterations=" + std::to_string(c.ransac.iterations) +
         " point_threshold_px=" + format_short(c.ransac.point_threshold_px) +
         " line_threshold_px=" + format_short(c.ransac.line_threshold_px) +
         " adaptive=" + std::to_string(c.ransac.adaptive ? 1 : 0) + "\n";

  out += "# methods=";
  for (std::size_t i = 0; i < table.method_ids.size(); ++i) {
    if (i) out += ',';
    out += table.method_ids[i];
  }
  out += "\n# sweep=";
  for (std::size_t i = 0; i < table.sweep.size(); ++i) {
    if (i) out += ',';
    out += format_short(table.sweep[i]);
  }
  out += '\n';

  out += "level,method,trials,success_rate,mean_trans_err_pct,median_trans_err_pct,"
         "mean_rot_err_deg,median_rot_err_deg\n";
  for (const ExperimentRow& row : table.rows) {
    out += format_short(row.level) + ',' + row.method + ',' + std::to_string(row.trials) + ',' +
           format_short(row.success_rate) + ',' + format_short(row.mean_trans_err_pct) + ',' +
           format_short(row.median_trans_err_pct) + ',' + format_short(row.mean_rot_err_deg) +
           ',' + format_short(row.median_rot_err_deg) + '\n';
  }
  return out;
}

}  // namespace m2e
