// Copyright 2026 The streampca Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace streampca {

/// One line of a stream: {"id": "...", "values": [...], "t": 0.0, "group": "..."}.
/// `values` holds the first l features observed so far for `id`.
struct StreamEvent {
  std::string id;
  std::vector<double> values;
  double t = 0.0;
  std::optional<std::string> group;

  bool operator==(const StreamEvent&) const = default;
};

/// Parses one line. Throws std::invalid_argument describing the defect.
StreamEvent parse_event(std::string_view line);

/// Serializes to a single line (no trailing newline).
std::string format_event(const StreamEvent& event);

struct ReadResult {
  std::vector<StreamEvent> events;
  std::vector<std::string> errors;  // "line N: reason"
};

/// Reads every non-blank line; malformed lines are reported, not thrown.
ReadResult read_events(std::istream& in);

}  // namespace streampca
