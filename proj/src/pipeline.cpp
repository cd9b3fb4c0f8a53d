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

#include "streampca/pipeline.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <utility>

namespace streampca {
namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::uint64_t fnv1a(std::string_view text, std::uint64_t seed) {
  std::uint64_t hash = 1469598103934665603ULL ^ seed;
  for (const char c : text) {
    hash ^= static_cast<unsigned char>(c);
    hash *= 1099511628211ULL;
  }
  return hash;
}

}  // namespace

void PipelineConfig::validate() const {
  if (dims < 1) throw std::invalid_argument("pipeline: dims must be >= 1");
  if (components < 1 || components > dims) {
    throw std::invalid_argument("pipeline: components must lie in [1, dims]");
  }
  if (batch < 2) throw std::invalid_argument("pipeline: batch size m must be >= 2");
  if (!(forgetting > 0.0 && forgetting <= 1.0)) {
    throw std::invalid_argument("pipeline: forgetting factor must lie in (0, 1]");
  }
  if (path_length < 1) throw std::invalid_argument("pipeline: path length must be >= 1");
  if (!(coalesce_window >= 0.0)) {
    throw std::invalid_argument("pipeline: coalescing window must be >= 0");
  }
  if (!(beta0 >= 0.0 && beta0 <= 1.0)) throw std::invalid_argument("pipeline: beta0 must lie in [0, 1]");
  if (subsample_profiles && profile_cap < 1) {
    throw std::invalid_argument("pipeline: profile cap must be >= 1");
  }
  if (estimator.max_iterations < 0) {
    throw std::invalid_argument("pipeline: estimator iteration cap must be >= 0");
  }
}

Pipeline::Pipeline(PipelineConfig config)
    : config_(std::move(config)),
      uncertainty_(config_.beta0, config_.estimator.decay, config_.estimator.epsilon) {
  config_.validate();
  model_ = PcaModel(PcaOptions{config_.dims, config_.components, config_.forgetting, 0});
  scatter_ = PrefixScatter(config_.dims);
  stored_.resize(0, config_.dims);
  display_.resize(0, config_.components);
  transform_ = SimilarityTransform::identity(config_.components);
}

std::shared_ptr<const LayoutSnapshot> Pipeline::ingest(const StreamEvent& event) {
  bool changed = false;
  validate_and_merge(event, changed);
  if (!changed) return nullptr;

  PartialState& state = partials_.at(event.id);
  StageTimings timings;
  if (state.values.size() == config_.dims) {
    state.complete = true;
    buffer_.push_back(event.id);
    // A point already on screen gets its l = D estimate; that level anchors
    // the beta update once the point's PCA position is known.
    const bool tracked = state.placed;
    if (tracked && booted()) place(event.id, state, timings);
    if (buffer_.size() == static_cast<std::size_t>(config_.batch)) return full_update(event.t);
    if (!tracked) return nullptr;  // arrived complete: waits for its batch
  }
  if (!booted()) return nullptr;  // parked until the first batch lands

  if (!state.complete) place(event.id, state, timings);
  if (config_.coalesce_window > 0.0 && last_partial_emit_ &&
      event.t - *last_partial_emit_ < config_.coalesce_window) {
    return nullptr;
  }
  last_partial_emit_ = event.t;
  return emit(FrameKind::kPartial, event.t, timings, {}, {});
}

void Pipeline::validate_and_merge(const StreamEvent& event, bool& changed) {
  const auto observed = event.values.size();
  if (event.id.empty()) throw RejectedEvent("event has an empty id");
  if (observed == 0) throw RejectedEvent("event '" + event.id + "' carries no values");
  if (observed > static_cast<std::size_t>(config_.dims)) {
    throw RejectedEvent("event '" + event.id + "' has " + std::to_string(observed) +
                        " values but the stream has D = " + std::to_string(config_.dims));
  }
  for (const double v : event.values) {
    if (!std::isfinite(v)) throw RejectedEvent("event '" + event.id + "' has non-finite values");
  }
  if (stored_set_.contains(event.id)) {
    throw RejectedEvent("point '" + event.id + "' is already part of the PCA layout");
  }

  const Eigen::Map<const Eigen::VectorXd> values(event.values.data(),
                                                 static_cast<Eigen::Index>(observed));
  const auto it = partials_.find(event.id);
  if (it == partials_.end()) {
    PartialState state;
    state.values = values;
    state.group = event.group.value_or("");
    partials_.emplace(event.id, std::move(state));
    changed = true;
    return;
  }

  PartialState& state = it->second;
  const auto previous = static_cast<std::size_t>(state.values.size());
  if (observed < previous) {
    throw RejectedEvent("point '" + event.id + "' shrinks from " + std::to_string(previous) +
                        " to " + std::to_string(observed) + " features");
  }
  for (std::size_t i = 0; i < previous; ++i) {
    if (event.values[i] != state.values(static_cast<Eigen::Index>(i))) {
      throw RejectedEvent("point '" + event.id + "' changes already observed feature " +
                          std::to_string(i + 1));
    }
  }
  if (observed == previous) {
    changed = false;
    return;
  }
  state.values = values;
  if (state.group.empty() && event.group) state.group = *event.group;
  changed = true;
}

std::shared_ptr<const LayoutSnapshot> Pipeline::full_update(double t) {
  const auto start = Clock::now();
  StageTimings timings;
  const std::vector<std::string> ids = std::exchange(buffer_, {});

  const auto m = static_cast<Eigen::Index>(ids.size());
  Eigen::MatrixXd batch(m, config_.dims);
  std::vector<std::string> groups;
  groups.reserve(ids.size());
  for (Eigen::Index i = 0; i < m; ++i) {
    const PartialState& state = partials_.at(ids[static_cast<std::size_t>(i)]);
    batch.row(i) = state.values.transpose();
    groups.push_back(state.group);
  }
  try {
    model_ = model_.updated(batch);
  } catch (...) {
    buffer_ = ids;  // the frame is abandoned; the previous snapshot stays current
    throw;
  }
  append_stored(ids, groups, batch);
  std::vector<std::string> removed = apply_retention();
  relayout(timings, start);

  const auto a3_start = Clock::now();
  const std::vector<CompletedPoint> completed = realize_errors(ids);
  if (!completed.empty()) uncertainty_.update_beta(completed);
  for (const std::string& id : ids) {
    uncertainty_.purge(id);
    partials_.erase(id);
  }
  for (auto& [id, state] : partials_) {
    if (state.placed) {
      state.record.combined = combined_uncertainty(state.record.strain, state.record.loading,
                                                   uncertainty_.beta());
    }
  }
  timings.a3 = ms_since(a3_start);

  for (auto& [id, state] : partials_) {
    if (!state.placed && !state.complete) place(id, state, timings);
  }
  return emit(FrameKind::kFull, t, timings, ids, std::move(removed));
}

std::shared_ptr<const LayoutSnapshot> Pipeline::bootstrap(
    const std::vector<std::string>& ids, const Eigen::Ref<const Eigen::MatrixXd>& points) {
  const auto start = Clock::now();
  const auto rows = points.rows();
  if (static_cast<std::size_t>(rows) != ids.size()) {
    throw std::invalid_argument("bootstrap: " + std::to_string(ids.size()) + " ids for " +
                                std::to_string(rows) + " rows");
  }
  if (points.cols() != config_.dims) throw std::invalid_argument("bootstrap: width mismatch");
  if (rows < 2) throw std::invalid_argument("bootstrap: needs at least 2 points");
  if (!points.allFinite()) throw std::invalid_argument("bootstrap: non-finite values");
  std::unordered_set<std::string> seen;
  for (const std::string& id : ids) {
    if (id.empty() || !seen.insert(id).second || stored_set_.contains(id) ||
        partials_.contains(id)) {
      throw std::invalid_argument("bootstrap: duplicate or known id '" + id + "'");
    }
  }

  const Eigen::Index m = config_.batch;
  PcaModel next = model_;
  for (Eigen::Index begin = 0; begin < rows;) {
    const Eigen::Index remaining = rows - begin;
    const Eigen::Index size = remaining < 2 * m ? remaining : m;
    next = next.updated(points.middleRows(begin, size));
    begin += size;
  }
  model_ = std::move(next);

  StageTimings timings;
  append_stored(ids, std::vector<std::string>(ids.size()), points);
  std::vector<std::string> removed = apply_retention();
  relayout(timings, start);
  for (auto& [id, state] : partials_) {
    if (!state.placed && !state.complete) place(id, state, timings);
  }
  return emit(FrameKind::kFull, latest_ ? latest_->t : 0.0, timings, ids, std::move(removed));
}

void Pipeline::append_stored(const std::vector<std::string>& ids,
                             const std::vector<std::string>& groups,
                             const Eigen::Ref<const Eigen::MatrixXd>& rows) {
  const Eigen::Index m = rows.rows();
  if (stored_begin_ + stored_rows_ + m > stored_.rows()) {
    const Eigen::Index capacity = std::max<Eigen::Index>(2 * (stored_rows_ + m), 16);
    Eigen::MatrixXd grown(capacity, config_.dims);
    grown.topRows(stored_rows_) = stored_.middleRows(stored_begin_, stored_rows_);
    stored_ = std::move(grown);
    stored_begin_ = 0;
  }
  stored_.middleRows(stored_begin_ + stored_rows_, m) = rows;
  stored_rows_ += m;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    stored_ids_.push_back(ids[i]);
    stored_groups_.push_back(groups[i]);
    stored_set_.insert(ids[i]);
  }
  scatter_.add(rows);
}

std::vector<std::string> Pipeline::apply_retention() {
  std::vector<std::string> removed;
  if (config_.retention != Retention::kForgetBeyondEffectiveHistory) return removed;
  const auto history = effective_history(config_.forgetting, config_.batch);
  if (!history) return removed;
  // m / (1 - f) is integral for the usual settings but rarely exact in binary.
  const auto cap = static_cast<Eigen::Index>(std::ceil(*history - 1e-9));
  if (stored_rows_ <= cap) return removed;

  const Eigen::Index drop = stored_rows_ - cap;
  scatter_.remove(stored_.middleRows(stored_begin_, drop));
  for (Eigen::Index i = 0; i < drop; ++i) {
    removed.push_back(stored_ids_.front());
    stored_set_.erase(stored_ids_.front());
    stored_ids_.pop_front();
    stored_groups_.pop_front();
  }
  stored_begin_ += drop;
  stored_rows_ -= drop;
  first_serial_ += static_cast<std::uint64_t>(drop);
  removed_since_rebuild_ += static_cast<std::size_t>(drop);
  if (removed_since_rebuild_ >= static_cast<std::size_t>(stored_rows_)) {
    scatter_.rebuild(stored_block());
    removed_since_rebuild_ = 0;
  }
  return removed;
}

Eigen::Block<const Eigen::MatrixXd> Pipeline::stored_block() const {
  return std::as_const(stored_).middleRows(stored_begin_, stored_rows_);
}

void Pipeline::relayout(StageTimings& timings, Clock::time_point start) {
  const Eigen::MatrixXd raw = model_.project(stored_block());
  timings.a1 = ms_since(start);

  const auto a2_start = Clock::now();
  SimilarityTransform transform = SimilarityTransform::identity(config_.components);
  if (config_.align && has_frame_ && anchors_) {
    // Points that were part of both the previous and the current PCA layout.
    const std::uint64_t prev_first = anchors_->first_serial;
    const auto prev_rows = static_cast<std::uint64_t>(anchors_->positions.rows());
    const std::uint64_t lo = std::max(prev_first, first_serial_);
    const std::uint64_t hi = std::min(prev_first + prev_rows,
                                      first_serial_ + static_cast<std::uint64_t>(stored_rows_));
    if (hi > lo) {
      const auto count = static_cast<Eigen::Index>(hi - lo);
      PointCorrespondence corr{
          anchors_->positions.middleRows(static_cast<Eigen::Index>(lo - prev_first), count),
          raw.middleRows(static_cast<Eigen::Index>(lo - first_serial_), count)};
      transform = fit(corr);
    }
  }
  display_ = apply(transform, raw);
  transform_ = std::move(transform);
  has_frame_ = true;
  anchors_ = std::make_shared<const AnchorFrame>(AnchorFrame{first_serial_, display_});
  loadings_ = model_.loadings();
  sub_layouts_.clear();
  timings.a2 = ms_since(a2_start);
}

std::vector<CompletedPoint> Pipeline::realize_errors(const std::vector<std::string>& ids) {
  last_completions_.clear();
  std::vector<CompletedPoint> completed;
  const auto batch_size = static_cast<Eigen::Index>(ids.size());
  // Anchors that are neither the batch itself nor evicted since the estimate.
  const std::uint64_t current_first = first_serial_;
  const std::uint64_t current_end =
      first_serial_ + static_cast<std::uint64_t>(stored_rows_ - batch_size);

  for (Eigen::Index b = 0; b < batch_size; ++b) {
    const std::string& id = ids[static_cast<std::size_t>(b)];
    const PartialState& state = partials_.at(id);
    const std::vector<LevelTrace>* traces = uncertainty_.history(id);
    if (state.estimates.empty() || traces == nullptr) continue;

    const Eigen::RowVectorXd final_position = display_.row(stored_rows_ - batch_size + b);
    // Latest estimate per level.
    std::map<int, std::size_t> latest;
    for (std::size_t i = 0; i < state.estimates.size(); ++i) {
      latest[state.estimates[i].observed] = i;
    }

    CompletedPoint point;
    point.id = id;
    point.dims = config_.dims;
    for (const auto& [level, index] : latest) {
      const EstimateRecord& estimate = state.estimates[index];
      const AnchorFrame& frame = *estimate.anchors;
      const auto frame_end =
          frame.first_serial + static_cast<std::uint64_t>(frame.positions.rows());
      const std::uint64_t lo = std::max(frame.first_serial, current_first);
      const std::uint64_t hi = std::min(frame_end, current_end);
      if (hi <= lo) continue;
      const auto count = static_cast<Eigen::Index>(hi - lo);
      const Eigen::VectorXd s_prime =
          (frame.positions.middleRows(static_cast<Eigen::Index>(lo - frame.first_serial), count)
               .rowwise() -
           estimate.position.transpose())
              .rowwise()
              .norm();
      const Eigen::VectorXd sigma =
          (display_.middleRows(static_cast<Eigen::Index>(lo - current_first), count).rowwise() -
           final_position)
              .rowwise()
              .norm();
      const double error = observed_error(sigma, s_prime);
      const LevelTrace& trace = (*traces)[index];
      point.levels.push_back(level);
      point.strain.push_back(trace.strain);
      point.loading.push_back(trace.loading);
      point.error.push_back(error);
      last_completions_.push_back({id, level, estimate.combined, error});
    }
    if (!point.levels.empty()) completed.push_back(std::move(point));
  }
  return completed;
}

const SubLayout& Pipeline::sub_layout_for(int observed) {
  auto it = sub_layouts_.find(observed);
  if (it == sub_layouts_.end()) {
    it = sub_layouts_
             .emplace(observed, scatter_.layout(stored_block(), observed, config_.components))
             .first;
  }
  return it->second;
}

void Pipeline::place(const std::string& id, PartialState& state, StageTimings& timings) {
  const auto b1_start = Clock::now();
  const int observed = static_cast<int>(state.values.size());
  const SubLayout& layout = sub_layout_for(observed);

  DistanceProfile profile;
  Eigen::VectorXd distances = layout.distances_from(state.values);
  const auto n = static_cast<std::size_t>(stored_rows_);
  if (config_.subsample_profiles && n > config_.profile_cap) {
    std::vector<Eigen::Index> all(n);
    std::iota(all.begin(), all.end(), Eigen::Index{0});
    std::vector<Eigen::Index> picked;
    picked.reserve(config_.profile_cap);
    std::mt19937_64 rng(fnv1a(id, config_.seed) ^ static_cast<std::uint64_t>(observed));
    std::sample(all.begin(), all.end(), std::back_inserter(picked), config_.profile_cap, rng);
    spdlog::debug("subsampling distance profile of '{}' from {} to {} anchors", id, n,
                  picked.size());
    profile.distances = distances(picked);
    profile.anchors = display_(picked, Eigen::all);
  } else {
    profile.distances = std::move(distances);
    profile.anchors = display_;
  }

  std::optional<PlacementStart> warm;
  if (state.placed) warm = PlacementStart{state.placement.scale, state.placement.position};
  EstimatedPlacement placement = estimate(profile, warm, config_.estimator);
  timings.b1 += ms_since(b1_start);

  const auto b2_start = Clock::now();
  placement.strain = strain_uncertainty(placement.residual, profile.distances);
  const double loading = loading_uncertainty(loadings_, observed);
  const double combined = combined_uncertainty(placement.strain, loading, uncertainty_.beta());
  timings.b2 += ms_since(b2_start);

  state.placement = std::move(placement);
  state.placed = true;
  state.record = {id, observed, state.placement.strain, loading, combined};
  state.path.push_back({state.placement.position, combined});
  while (state.path.size() > config_.path_length) state.path.pop_front();
  uncertainty_.record(id, {observed, state.placement.strain, loading, combined});
  state.estimates.push_back({observed, state.placement.position, combined, anchors_});
}

std::shared_ptr<const LayoutSnapshot> Pipeline::emit(FrameKind kind, double t,
                                                     const StageTimings& timings,
                                                     std::vector<std::string> added,
                                                     std::vector<std::string> removed) {
  auto snapshot = std::make_shared<LayoutSnapshot>();
  snapshot->seq = ++seq_;
  snapshot->kind = kind;
  snapshot->t = t;
  snapshot->components = config_.components;
  snapshot->transition_ms = config_.transition_ms;
  snapshot->points.reserve(static_cast<std::size_t>(stored_rows_) + partials_.size());
  for (Eigen::Index i = 0; i < stored_rows_; ++i) {
    const auto index = static_cast<std::size_t>(i);
    snapshot->points.push_back(
        {stored_ids_[index], display_.row(i).transpose(), stored_groups_[index], false,
         config_.dims});
  }
  for (const auto& [id, state] : partials_) {
    if (!state.placed) continue;
    snapshot->points.push_back({id, state.placement.position, state.group, true,
                                static_cast<int>(state.values.size())});
    snapshot->uncertainties.push_back(state.record);
    snapshot->paths.push_back({id, {state.path.begin(), state.path.end()}});
  }
  snapshot->added = std::move(added);
  snapshot->removed = std::move(removed);
  snapshot->transform = transform_;
  snapshot->beta = uncertainty_.beta();
  snapshot->beta_updates = uncertainty_.updates();
  snapshot->stored = static_cast<std::size_t>(stored_rows_);
  snapshot->timings = timings;
  latest_ = std::move(snapshot);
  return latest_;
}

Eigen::MatrixXd Pipeline::stored_values() const { return stored_block(); }

std::vector<std::string> Pipeline::stored_ids() const {
  return {stored_ids_.begin(), stored_ids_.end()};
}

std::size_t Pipeline::parked_count() const {
  return static_cast<std::size_t>(std::count_if(
      partials_.begin(), partials_.end(), [](const auto& entry) { return !entry.second.placed && !entry.second.complete; }));
}

std::optional<EstimatedPlacement> Pipeline::placement(const std::string& id) const {
  const auto it = partials_.find(id);
  if (it == partials_.end() || !it->second.placed) return std::nullopt;
  return it->second.placement;
}

}  // namespace streampca
