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

#include "streampca/tracking.hpp"

#include <algorithm>
#include <limits>
#include <set>

namespace streampca {

std::optional<TrackingMode> parse_tracking_mode(std::string_view text) {
  if (text == "new-points") return TrackingMode::kNewPoints;
  if (text == "selected-points") return TrackingMode::kSelectedPoints;
  if (text == "both") return TrackingMode::kBoth;
  if (text == "off") return TrackingMode::kOff;
  return std::nullopt;
}

std::string_view to_string(TrackingMode mode) {
  switch (mode) {
    case TrackingMode::kNewPoints: return "new-points";
    case TrackingMode::kSelectedPoints: return "selected-points";
    case TrackingMode::kBoth: return "both";
    case TrackingMode::kOff: return "off";
  }
  return "off";
}

namespace {

bool follows_selection(TrackingMode mode) {
  return mode == TrackingMode::kSelectedPoints || mode == TrackingMode::kBoth;
}

bool follows_new(TrackingMode mode) {
  return mode == TrackingMode::kNewPoints || mode == TrackingMode::kBoth;
}

}  // namespace

SelectionResult resolve_selection(TrackingMode mode, std::vector<std::string> ids,
                                  std::uint64_t issued_seq, const LayoutSnapshot* current) {
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());

  SelectionResult out;
  out.selection.mode = mode;
  out.selection.issued_seq = issued_seq;
  for (std::string& id : ids) {
    if (current != nullptr && current->find(id) != nullptr) {
      out.selection.ids.push_back(std::move(id));
    } else {
      out.pruned.push_back(std::move(id));
    }
  }
  if (follows_selection(mode) && out.selection.ids.empty()) {
    out.error = "selection names no point of the current layout";
  }
  return out;
}

std::vector<std::string> tracked_ids(const LayoutSnapshot& snapshot,
                                     const TrackingSelection& selection) {
  std::set<std::string> out;
  if (follows_new(selection.mode)) {
    for (const PlacedPoint& p : snapshot.points) {
      if (p.estimated) out.insert(p.id);
    }
    out.insert(snapshot.added.begin(), snapshot.added.end());
  }
  if (follows_selection(selection.mode)) {
    out.insert(selection.ids.begin(), selection.ids.end());
  }
  std::vector<std::string> present;
  for (const std::string& id : out) {
    if (snapshot.find(id) != nullptr) present.push_back(id);
  }
  return present;
}

std::optional<FocusRect> focus_rect(const LayoutSnapshot& snapshot,
                                    const TrackingSelection& selection) {
  if (selection.mode == TrackingMode::kOff || snapshot.points.empty()) return std::nullopt;
  const std::vector<std::string> ids = tracked_ids(snapshot, selection);
  if (ids.empty()) return std::nullopt;

  const Eigen::Index k = snapshot.points.front().position.size();
  const double inf = std::numeric_limits<double>::infinity();
  Eigen::VectorXd lo = Eigen::VectorXd::Constant(k, inf), hi = Eigen::VectorXd::Constant(k, -inf);
  for (const std::string& id : ids) {
    const Eigen::VectorXd& p = snapshot.find(id)->position;
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  Eigen::VectorXd all_lo = Eigen::VectorXd::Constant(k, inf);
  Eigen::VectorXd all_hi = Eigen::VectorXd::Constant(k, -inf);
  for (const PlacedPoint& p : snapshot.points) {
    all_lo = all_lo.cwiseMin(p.position);
    all_hi = all_hi.cwiseMax(p.position);
  }

  FocusRect out{lo, hi};
  const double side = kFocusMargin / 2.0;
  for (Eigen::Index c = 0; c < k; ++c) {
    double extent = hi(c) - lo(c);
    if (extent <= 0.0) extent = all_hi(c) - all_lo(c);
    if (extent <= 0.0) extent = 1.0;
    out.min(c) -= side * extent;
    out.max(c) += side * extent;
  }
  return out;
}

nlohmann::json focus_json(const std::optional<FocusRect>& focus) {
  if (!focus) return nullptr;
  auto list = [](const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  return {{"min", list(focus->min)}, {"max", list(focus->max)}};
}

}  // namespace streampca
