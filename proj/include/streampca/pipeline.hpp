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
#include "streampca/pca_model.hpp"
#include "streampca/position_estimation.hpp"
#include "streampca/snapshot.hpp"
#include "streampca/stream_event.hpp"
#include "streampca/uncertainty.hpp"

#include <Eigen/Core>

#include <chrono>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

namespace streampca {

enum class Retention {
  kKeepAll,
  // Drop the oldest stored points beyond ceil(m / (1 - f)).
  kForgetBeyondEffectiveHistory,
};

struct PipelineConfig {
  int dims = 0;             // D
  int components = 2;       // k
  int batch = 2;            // m
  double forgetting = 1.0;  // f
  Retention retention = Retention::kKeepAll;
  bool align = true;
  int transition_ms = 300;  // animation hint forwarded to clients
  std::size_t path_length = 8;
  // Minimum stream-time gap between partial-path snapshots; 0 emits every one.
  double coalesce_window = 0.0;
  EstimatorOptions estimator;
  double beta0 = 0.5;
  bool subsample_profiles = false;
  std::size_t profile_cap = 10000;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Thrown by Pipeline::ingest for events that violate the stream contract.
class RejectedEvent : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Realized error of one earlier estimate, available once its point entered
/// a full layout.
struct CompletionSample {
  std::string id;
  int observed = 0;
  double combined = 0.0;  // W when the estimate was shown
  double error = 0.0;     // e
};

/// Streaming driver: complete points are buffered into batches of m that
/// update the PCA model, get projected and aligned to the previous frame;
/// partial points are placed by distance matching and carry uncertainty.
/// Not thread-safe; one writer calls ingest in event order. Emitted
/// snapshots are immutable and may be shared with any number of readers.
class Pipeline {
 public:
  explicit Pipeline(PipelineConfig config);

  /// Returns the snapshot produced by the event, or null when the event only
  /// changed internal state (buffered, parked, coalesced or a repeat).
  /// Throws RejectedEvent for malformed or inconsistent events.
  std::shared_ptr<const LayoutSnapshot> ingest(const StreamEvent& event);

  /// Absorbs many complete points at once (model updates in chunks of m) and
  /// emits one full frame.
  std::shared_ptr<const LayoutSnapshot> bootstrap(const std::vector<std::string>& ids,
                                                  const Eigen::Ref<const Eigen::MatrixXd>& points);

  const std::shared_ptr<const LayoutSnapshot>& latest() const { return latest_; }
  const PipelineConfig& config() const { return config_; }
  const PcaModel& model() const { return model_; }
  const UncertaintyState& uncertainty() const { return uncertainty_; }
  bool booted() const { return stored_count() >= 2; }

  std::size_t stored_count() const { return static_cast<std::size_t>(stored_rows_); }
  /// Stored complete points, oldest first.
  Eigen::MatrixXd stored_values() const;
  std::vector<std::string> stored_ids() const;
  /// Displayed positions of the stored points, same order.
  const Eigen::MatrixXd& stored_positions() const { return display_; }

  std::size_t partial_count() const { return partials_.size(); }
  std::size_t parked_count() const;
  std::optional<EstimatedPlacement> placement(const std::string& id) const;

  /// Errors of estimates realized by the most recent full frame.
  const std::vector<CompletionSample>& last_completions() const { return last_completions_; }

 private:
  struct AnchorFrame {
    std::uint64_t first_serial = 0;
    Eigen::MatrixXd positions;  // n x k
  };
  struct EstimateRecord {
    int observed = 0;
    Eigen::VectorXd position;
    double combined = 0.0;
    std::shared_ptr<const AnchorFrame> anchors;
  };
  struct PartialState {
    Eigen::VectorXd values;
    std::string group;
    bool complete = false;  // waiting in the full buffer
    bool placed = false;
    EstimatedPlacement placement;
    UncertaintyRecord record;
    std::deque<PathNode> path;
    std::vector<EstimateRecord> estimates;
  };

  void validate_and_merge(const StreamEvent& event, bool& changed);
  std::shared_ptr<const LayoutSnapshot> full_update(double t);
  void place(const std::string& id, PartialState& state, StageTimings& timings);
  std::shared_ptr<const LayoutSnapshot> emit(FrameKind kind, double t, const StageTimings& timings,
                                             std::vector<std::string> added,
                                             std::vector<std::string> removed);

  void append_stored(const std::vector<std::string>& ids, const std::vector<std::string>& groups,
                     const Eigen::Ref<const Eigen::MatrixXd>& rows);
  std::vector<std::string> apply_retention();
  Eigen::Block<const Eigen::MatrixXd> stored_block() const;
  void relayout(StageTimings& timings, std::chrono::steady_clock::time_point start);
  std::vector<CompletedPoint> realize_errors(const std::vector<std::string>& ids);
  const SubLayout& sub_layout_for(int observed);

  PipelineConfig config_;
  PcaModel model_;
  UncertaintyState uncertainty_;
  PrefixScatter scatter_;
  std::size_t removed_since_rebuild_ = 0;

  // Stored complete points occupy rows [stored_begin_, stored_begin_ + stored_rows_).
  Eigen::MatrixXd stored_;
  Eigen::Index stored_begin_ = 0;
  Eigen::Index stored_rows_ = 0;
  std::deque<std::string> stored_ids_;
  std::deque<std::string> stored_groups_;
  std::unordered_set<std::string> stored_set_;
  std::uint64_t first_serial_ = 0;  // serial of the oldest stored point

  Eigen::MatrixXd display_;  // stored points in the displayed frame
  SimilarityTransform transform_;
  bool has_frame_ = false;
  std::shared_ptr<const AnchorFrame> anchors_;
  Eigen::MatrixXd loadings_;
  std::map<int, SubLayout> sub_layouts_;

  std::map<std::string, PartialState> partials_;
  std::vector<std::string> buffer_;

  std::vector<CompletionSample> last_completions_;
  std::uint64_t seq_ = 0;
  std::optional<double> last_partial_emit_;
  std::shared_ptr<const LayoutSnapshot> latest_;
};

}  // namespace streampca
