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

#include "streampca/synthetic.hpp"

#include <algorithm>
#include <ostream>
#include <random>
#include <stdexcept>

namespace streampca {

Eigen::MatrixXd uniform_points(int n, int dims, std::uint64_t seed) {
  if (n < 0 || dims < 1) throw std::invalid_argument("uniform_points: bad shape");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Eigen::MatrixXd out(n, dims);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < dims; ++j) out(i, j) = dist(rng);
  }
  return out;
}

std::vector<StreamEvent> complete_events(const Eigen::Ref<const Eigen::MatrixXd>& rows,
                                         const std::string& prefix,
                                         const std::vector<std::string>& groups) {
  if (!groups.empty() && groups.size() != static_cast<std::size_t>(rows.rows())) {
    throw std::invalid_argument("complete_events: one group per row expected");
  }
  std::vector<StreamEvent> events;
  events.reserve(static_cast<std::size_t>(rows.rows()));
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    StreamEvent e;
    e.id = prefix + std::to_string(i);
    e.values.resize(static_cast<std::size_t>(rows.cols()));
    for (Eigen::Index j = 0; j < rows.cols(); ++j) e.values[static_cast<std::size_t>(j)] = rows(i, j);
    e.t = static_cast<double>(i);
    if (!groups.empty()) e.group = groups[static_cast<std::size_t>(i)];
    events.push_back(std::move(e));
  }
  return events;
}

std::vector<StreamEvent> progressive_stream(const ProgressiveStreamOptions& o) {
  if (o.points < 2 || o.dims < 1 || o.clusters < 1 || o.initial_complete < 2 ||
      o.initial_complete > o.points) {
    throw std::invalid_argument("progressive_stream: bad options");
  }
  std::mt19937_64 rng(o.seed);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd centres(o.clusters, o.dims);
  for (int c = 0; c < o.clusters; ++c) {
    for (int j = 0; j < o.dims; ++j) centres(c, j) = o.cluster_spread * normal(rng);
  }
  std::uniform_int_distribution<int> pick(0, o.clusters - 1);
  Eigen::MatrixXd values(o.points, o.dims);
  std::vector<int> cluster(static_cast<std::size_t>(o.points));
  for (int i = 0; i < o.points; ++i) {
    cluster[static_cast<std::size_t>(i)] = pick(rng);
    for (int j = 0; j < o.dims; ++j) {
      values(i, j) = centres(cluster[static_cast<std::size_t>(i)], j) + o.noise * normal(rng);
    }
  }

  auto event = [&](int i, int observed, double t) {
    StreamEvent e;
    e.id = "u" + std::to_string(i);
    e.values.resize(static_cast<std::size_t>(observed));
    for (int j = 0; j < observed; ++j) e.values[static_cast<std::size_t>(j)] = values(i, j);
    e.t = t;
    e.group = "g" + std::to_string(cluster[static_cast<std::size_t>(i)]);
    return e;
  };

  std::vector<StreamEvent> events;
  int tick = 0;
  for (int i = 0; i < o.initial_complete; ++i) events.push_back(event(i, o.dims, tick++));

  // Point i (after the initial ones) starts at tick offset i and reveals one
  // feature per tick; events within a tick are ordered by point index.
  const int first = o.initial_complete;
  const int progressive = o.points - first;
  for (int step = 0; step < progressive + o.dims - 1; ++step, ++tick) {
    for (int i = std::max(0, step - o.dims + 1); i <= std::min(step, progressive - 1); ++i) {
      const int observed = step - i + 1;
      events.push_back(event(first + i, observed, tick));
    }
  }
  return events;
}

void write_events(std::ostream& out, const std::vector<StreamEvent>& events) {
  for (const StreamEvent& e : events) out << format_event(e) << '\n';
}

}  // namespace streampca
