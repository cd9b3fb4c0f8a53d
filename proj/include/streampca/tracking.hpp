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

#include "streampca/snapshot.hpp"

#include <Eigen/Core>
#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace streampca {

enum class TrackingMode { kNewPoints, kSelectedPoints, kBoth, kOff };

/// "new-points", "selected-points", "both", "off".
std::optional<TrackingMode> parse_tracking_mode(std::string_view text);
std::string_view to_string(TrackingMode mode);

/// What a client asked the view to follow.
struct TrackingSelection {
  TrackingMode mode = TrackingMode::kOff;
  std::vector<std::string> ids;  // sorted, unique
  std::uint64_t issued_seq = 0;  // snapshot the client was looking at
};

struct SelectionResult {
  TrackingSelection selection;
  std::vector<std::string> pruned;  // requested ids absent from the layout
  std::optional<std::string> error;  // selection rejected; keep the old one
};

/// Checks a requested selection against the current layout. Unknown ids are
/// pruned; a mode that follows selected points needs at least one survivor.
SelectionResult resolve_selection(TrackingMode mode, std::vector<std::string> ids,
                                  std::uint64_t issued_seq, const LayoutSnapshot* current);

/// Ids the view follows in `snapshot`: new points are the ones still being
/// estimated plus those that entered the PCA layout in this frame.
std::vector<std::string> tracked_ids(const LayoutSnapshot& snapshot,
                                     const TrackingSelection& selection);

struct FocusRect {
  Eigen::VectorXd min;
  Eigen::VectorXd max;
};

/// Total extent added around the tracked points' bounding box (10% per side).
inline constexpr double kFocusMargin = 0.2;

/// Bounding box of the tracked points grown by kFocusMargin. A side with no
/// extent is padded by the same share of the whole layout's extent so the
/// view never collapses to a line. Nothing to track gives no rectangle.
std::optional<FocusRect> focus_rect(const LayoutSnapshot& snapshot,
                                    const TrackingSelection& selection);

nlohmann::json focus_json(const std::optional<FocusRect>& focus);

}  // namespace streampca
