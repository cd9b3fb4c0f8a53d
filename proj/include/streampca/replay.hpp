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

#include "streampca/pipeline.hpp"
#include "streampca/snapshot.hpp"
#include "streampca/stream_event.hpp"

#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace streampca {

using SnapshotPtr = std::shared_ptr<const LayoutSnapshot>;

/// Longest `values` array in the stream, i.e. D when the file was not told.
int infer_dims(const std::vector<StreamEvent>& events);

/// Feeds `events` through a fresh pipeline in order. Rejected events throw
/// RejectedEvent naming the 1-based event index.
std::vector<SnapshotPtr> replay(const std::vector<StreamEvent>& events,
                                const PipelineConfig& config,
                                const std::function<void(const LayoutSnapshot&)>& on_frame = {});

void write_snapshots(std::ostream& out, const std::vector<SnapshotPtr>& snapshots,
                     bool with_timings = false);
/// Throws std::invalid_argument with the offending line number.
std::vector<LayoutSnapshot> read_snapshots(std::istream& in);

/// Header row, then numeric columns become values; a single non-numeric
/// column becomes the group. Ids are "<prefix><row>" and t is the row index.
std::vector<StreamEvent> events_from_csv(std::istream& in, const std::string& prefix = "r");

}  // namespace streampca
