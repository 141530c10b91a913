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

#include <iosfwd>
#include <optional>
#include <string>

#include "m2e/matches.hpp"
#include "m2e/synthetic.hpp"

namespace m2e {

// .m2e match files, version "# m2e v1". Whitespace-separated records, one
// per line:
//   K fx fy cx cy
//   ATT pitch roll                              (radians)
//   GT alpha beta gamma tx ty tz                (optional, radians)
//   P u v X Y Z
//   L u1 v1 u2 v2 X1 Y1 Z1 X2 Y2 Z2
// Canonical serialization orders records K, ATT, GT, P..., L... with 17
// significant digits and LF line endings. '#' lines after the header are
// comments.

enum class ParseErrorKind { Syntax, MissingRecord, DuplicateRecord, NonFinite, InvalidRecord };

class ParseError : public std::runtime_error {
 public:
  ParseError(ParseErrorKind kind, int line, int column, const std::string& message);

  ParseErrorKind kind() const { return kind_; }
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  ParseErrorKind kind_;
  int line_;
  int column_;
};

struct MatchFileContents {
  MatchSet matches;
  std::optional<Pose> ground_truth;
};

MatchFileContents parse_match_file(std::istream& input);
MatchFileContents parse_match_file(const std::string& text);

std::string serialize_match_file(const MatchSet& matches,
                                 const std::optional<Pose>& ground_truth = std::nullopt);

// Experiment CSV: '#' comment header carrying the full configuration and
// seed, then one row per (level, method):
//   level,method,trials,success_rate,mean_trans_err_pct,median_trans_err_pct,
//   mean_rot_err_deg,median_rot_err_deg
std::string experiment_csv(const ExperimentTable& table);

}  // namespace m2e
