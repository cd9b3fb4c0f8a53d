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

#include "streampca/alignment.hpp"
#include "streampca/uncertainty.hpp"

#include <Eigen/Core>
#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace streampca {

enum class FrameKind { kFull, kPartial };

struct PlacedPoint {
  std::string id;
  Eigen::VectorXd position;  // k, aligned frame
  std::string group;         // empty when ungrouped
  bool estimated = false;    // placed from a partial feature vector
  int observed = 0;          // l
};

struct PathNode {
  Eigen::VectorXd position;
  double combined = 0.0;  // W at this endpoint
};

struct PointPath {
  std::string id;
  std::vector<PathNode> nodes;  // oldest first
};

/// Milliseconds spent in each stage while producing a frame.
struct StageTimings {
  double a1 = 0.0;  // model update + projection
  double a2 = 0.0;  // alignment
  double a3 = 0.0;  // uncertainty bookkeeping and beta
  double b1 = 0.0;  // sub-layout + placement
  double b2 = 0.0;  // U, V, W
};

/// Immutable, sequence-numbered layout frame.
struct LayoutSnapshot {
  std::uint64_t seq = 0;
  FrameKind kind = FrameKind::kFull;
  double t = 0.0;  // stream time of the triggering event
  int components = 2;
  int transition_ms = 300;
  std::vector<PlacedPoint> points;
  std::vector<UncertaintyRecord> uncertainties;
  std::vector<PointPath> paths;
  std::vector<std::string> added;    // entered the PCA layout this frame
  std::vector<std::string> removed;  // left the layout this frame
  SimilarityTransform transform;     // raw PCA frame -> displayed frame
  double beta = 0.5;
  long beta_updates = 0;
  std::size_t stored = 0;
  StageTimings timings;

  const PlacedPoint* find(const std::string& id) const;
};

/// Wire form. Timings vary run to run, so they are only included on request;
/// everything else is a deterministic function of the event sequence.
nlohmann::json to_json(const LayoutSnapshot& snapshot, bool with_timings = false);
LayoutSnapshot snapshot_from_json(const nlohmann::json& j);
std::string serialize(const LayoutSnapshot& snapshot, bool with_timings = false);

/// Exact equality of everything except timings.
bool same_payload(const LayoutSnapshot& a, const LayoutSnapshot& b);

}  // namespace streampca
