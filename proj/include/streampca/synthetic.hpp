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

#include "streampca/stream_event.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

namespace streampca {

/// n x D matrix with entries uniform in [-1, 1].
Eigen::MatrixXd uniform_points(int n, int dims, std::uint64_t seed);

/// One complete event per row, ids "<prefix><row>", t = row index.
std::vector<StreamEvent> complete_events(const Eigen::Ref<const Eigen::MatrixXd>& rows,
                                         const std::string& prefix = "p",
                                         const std::vector<std::string>& groups = {});

/// Clustered points whose features arrive one at a time, like vehicles
/// reporting stops along a route. A few points arrive complete to boot the
/// layout; after that a new point starts every tick and every in-flight
/// point reveals its next feature, so several partial points interleave.
struct ProgressiveStreamOptions {
  int points = 200;
  int dims = 4;
  int initial_complete = 6;
  int clusters = 3;
  double cluster_spread = 3.0;  // std-dev of cluster centres
  double noise = 1.0;           // std-dev around a centre
  std::uint64_t seed = 1;
};

std::vector<StreamEvent> progressive_stream(const ProgressiveStreamOptions& options);

/// Writes events as line-delimited records.
void write_events(std::ostream& out, const std::vector<StreamEvent>& events);

}  // namespace streampca
