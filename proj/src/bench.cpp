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

#include "streampca/bench.hpp"

#include "streampca/pipeline.hpp"
#include "streampca/synthetic.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

namespace streampca {
namespace {

StageSummary summarize(std::vector<double> samples) {
  StageSummary out;
  if (samples.empty()) return out;
  out.mean = std::accumulate(samples.begin(), samples.end(), 0.0) /
             static_cast<double>(samples.size());
  std::sort(samples.begin(), samples.end());
  const std::size_t mid = samples.size() / 2;
  out.median = samples.size() % 2 ? samples[mid] : 0.5 * (samples[mid - 1] + samples[mid]);
  return out;
}

std::vector<double> row_values(const Eigen::MatrixXd& m, Eigen::Index row, int count) {
  std::vector<double> out(static_cast<std::size_t>(count));
  for (int j = 0; j < count; ++j) out[static_cast<std::size_t>(j)] = m(row, j);
  return out;
}

}  // namespace

BenchCell bench_cell(int dims, int points, const BenchOptions& options) {
  if (dims < 2 || points < 2 || options.reps < 1) {
    throw std::invalid_argument("bench: needs D >= 2, n >= 2 and reps >= 1");
  }
  PipelineConfig config;
  config.dims = dims;
  config.components = std::min(options.components, dims);
  config.batch = options.batch;
  config.estimator = options.estimator;
  config.seed = options.seed;

  const std::uint64_t seed =
      options.seed ^ (static_cast<std::uint64_t>(dims) << 32) ^ static_cast<std::uint64_t>(points);
  // Stored points, then per repetition one partial probe and m fresh points.
  const int per_rep = 1 + options.batch;
  const Eigen::MatrixXd data = uniform_points(points + per_rep * options.reps, dims, seed);
  std::vector<std::string> ids(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) ids[static_cast<std::size_t>(i)] = "s" + std::to_string(i);

  Pipeline base(config);
  base.bootstrap(ids, data.topRows(points));

  std::mt19937_64 rng(seed + 1);
  std::uniform_int_distribution<int> level(1, dims - 1);
  std::vector<double> a1, a2, a3, b1, b2, full, partial;
  for (int rep = 0; rep < options.reps; ++rep) {
    const Eigen::Index row = points + static_cast<Eigen::Index>(rep) * per_rep;

    // Partial path: a new point at a random l on a layout with no cached
    // sub-layouts.
    {
      Pipeline p = base;
      const auto s = p.ingest({"probe", row_values(data, row, level(rng)), 0.0, std::nullopt});
      b1.push_back(s->timings.b1);
      b2.push_back(s->timings.b2);
      partial.push_back(s->timings.b1 + s->timings.b2);
    }

    // Full path: m complete points, the first of which was on screen as a
    // partial point, so a3 realizes its errors and steps beta.
    {
      Pipeline p = base;
      const Eigen::Index tracked = row + 1;
      p.ingest({"t", row_values(data, tracked, level(rng)), 0.0, std::nullopt});
      p.ingest({"t", row_values(data, tracked, dims), 1.0, std::nullopt});
      std::shared_ptr<const LayoutSnapshot> s;
      for (int i = 1; i < options.batch; ++i) {
        s = p.ingest({"f" + std::to_string(i), row_values(data, tracked + i, dims), 2.0,
                      std::nullopt});
      }
      a1.push_back(s->timings.a1);
      a2.push_back(s->timings.a2);
      a3.push_back(s->timings.a3);
      full.push_back(s->timings.a1 + s->timings.a2 + s->timings.a3);
    }
  }

  BenchCell cell;
  cell.dims = dims;
  cell.points = points;
  cell.reps = options.reps;
  cell.a1 = summarize(a1);
  cell.a2 = summarize(a2);
  cell.a3 = summarize(a3);
  cell.b1 = summarize(b1);
  cell.b2 = summarize(b2);
  cell.full = summarize(full);
  cell.partial = summarize(partial);
  return cell;
}

std::vector<BenchCell> bench_grid(const BenchOptions& options,
                                  const std::function<void(const BenchCell&)>& progress) {
  std::vector<BenchCell> cells;
  for (const int d : options.dims) {
    for (const int n : options.points) {
      cells.push_back(bench_cell(d, n, options));
      if (progress) progress(cells.back());
    }
  }
  return cells;
}

}  // namespace streampca
