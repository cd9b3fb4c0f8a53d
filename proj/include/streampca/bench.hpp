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

#include "streampca/position_estimation.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace streampca {

struct StageSummary {
  double mean = 0.0;
  double median = 0.0;
};

/// Stage timings (milliseconds) for one (D, n) cell.
struct BenchCell {
  int dims = 0;
  int points = 0;
  int reps = 0;
  StageSummary a1, a2, a3, b1, b2;
  StageSummary full;     // a1 + a2 + a3 per repetition
  StageSummary partial;  // b1 + b2 per repetition
};

struct BenchOptions {
  std::vector<int> dims{10, 100, 1000};
  std::vector<int> points{100, 1000, 10000};
  int reps = 10;
  int components = 2;
  int batch = 2;
  EstimatorOptions estimator;  // capped at 1,000 iterations by default
  std::uint64_t seed = 0;
};

/// Runs one cell: n stored points with values uniform in [-1, 1], then per
/// repetition a cold partial placement at a random l < D and a full update
/// of m points (one of which was tracked as partial, so the uncertainty
/// stage has a completion to process).
BenchCell bench_cell(int dims, int points, const BenchOptions& options);

/// All cells, D-major; `progress` is called after each cell.
std::vector<BenchCell> bench_grid(const BenchOptions& options,
                                  const std::function<void(const BenchCell&)>& progress = {});

}  // namespace streampca
