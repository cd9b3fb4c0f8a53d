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

#include "streampca/replay.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace streampca {
namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    const auto first = cell.find_first_not_of(" \t\r\"");
    const auto last = cell.find_last_not_of(" \t\r\"");
    cells.push_back(first == std::string::npos ? "" : cell.substr(first, last - first + 1));
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::optional<double> to_number(const std::string& text) {
  double value = 0.0;
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || text.empty()) return std::nullopt;
  return value;
}

}  // namespace

int infer_dims(const std::vector<StreamEvent>& events) {
  std::size_t dims = 0;
  for (const StreamEvent& e : events) dims = std::max(dims, e.values.size());
  return static_cast<int>(dims);
}

std::vector<SnapshotPtr> replay(const std::vector<StreamEvent>& events,
                                const PipelineConfig& config,
                                const std::function<void(const LayoutSnapshot&)>& on_frame) {
  Pipeline pipeline(config);
  std::vector<SnapshotPtr> out;
  for (std::size_t i = 0; i < events.size(); ++i) {
    SnapshotPtr snapshot;
    try {
      snapshot = pipeline.ingest(events[i]);
    } catch (const RejectedEvent& e) {
      throw RejectedEvent("event " + std::to_string(i + 1) + ": " + e.what());
    }
    if (!snapshot) continue;
    if (on_frame) on_frame(*snapshot);
    out.push_back(std::move(snapshot));
  }
  return out;
}

void write_snapshots(std::ostream& out, const std::vector<SnapshotPtr>& snapshots,
                     bool with_timings) {
  for (const SnapshotPtr& s : snapshots) out << serialize(*s, with_timings) << '\n';
}

std::vector<LayoutSnapshot> read_snapshots(std::istream& in) {
  std::vector<LayoutSnapshot> out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(snapshot_from_json(nlohmann::json::parse(line)));
    } catch (const std::exception& e) {
      throw std::invalid_argument("line " + std::to_string(number) + ": " + e.what());
    }
  }
  return out;
}

std::vector<StreamEvent> events_from_csv(std::istream& in, const std::string& prefix) {
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("csv: empty input");
  const std::size_t columns = split_csv(line).size();

  std::vector<StreamEvent> events;
  std::optional<std::size_t> group_column;
  std::size_t number = 1;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split_csv(line);
    if (cells.size() != columns) {
      throw std::invalid_argument("csv line " + std::to_string(number) + ": expected " +
                                  std::to_string(columns) + " cells");
    }
    StreamEvent event;
    event.id = prefix + std::to_string(events.size());
    event.t = static_cast<double>(events.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (group_column == c) {
        event.group = cells[c];
      } else if (const auto value = to_number(cells[c])) {
        event.values.push_back(*value);
      } else if (!group_column && events.empty()) {
        group_column = c;
        event.group = cells[c];
      } else {
        throw std::invalid_argument("csv line " + std::to_string(number) + ": '" + cells[c] +
                                    "' is not a number");
      }
    }
    events.push_back(std::move(event));
  }
  return events;
}

}  // namespace streampca
