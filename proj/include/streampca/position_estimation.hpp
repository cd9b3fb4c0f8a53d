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

#include <Eigen/Core>

#include <optional>
#include <string>

namespace streampca {

/// A point whose first `observed()` of D features are known.
struct PartialPoint {
  std::string id;
  Eigen::VectorXd values;
  int observed() const { return static_cast<int>(values.size()); }
};

/// Distances s_ui from a new point to each stored point in the prefix layout,
/// paired with the stored points' positions q_i in the full layout.
struct DistanceProfile {
  Eigen::VectorXd distances;  // n
  Eigen::MatrixXd anchors;    // n x k
};

struct EstimatedPlacement {
  Eigen::VectorXd position;  // x
  double scale = 1.0;        // alpha
  double residual = 0.0;     // final objective
  double strain = 0.0;       // U, filled by the caller
  int iterations = 0;
  bool underdetermined = false;  // fewer than k + 1 anchors
  bool fell_back = false;        // clamped to the alpha = 0 solution
};

struct PlacementStart {
  double scale = 1.0;
  Eigen::VectorXd position;
};

struct EstimatorOptions {
  int max_iterations = 1000;
  double decay = 0.95;
  double epsilon = 1e-6;
  // Stop once the best objective improves by less than this fraction over
  // `patience` iterations.
  double relative_tolerance = 1e-9;
  int patience = 10;
  // Reset the step accumulators at the best point after this many
  // iterations without improvement; 0 disables.
  int restart_after = 5;
};

/// sum_i (s_i - alpha * ||x - q_i||)^2 and its gradient with respect to
/// (alpha, x). Anchors that coincide with x contribute no direction.
struct ObjectiveValue {
  double value = 0.0;
  Eigen::VectorXd gradient;  // [d/dalpha, d/dx...]
};
ObjectiveValue placement_objective(const DistanceProfile& profile, double scale,
                                   const Eigen::Ref<const Eigen::VectorXd>& position);

/// Inverse-distance-weighted mean of the anchors, weights 1 / (s_i + eps).
Eigen::VectorXd default_start_position(const DistanceProfile& profile);

/// Finds (alpha, x) matching the distance profile with Adadelta.
EstimatedPlacement estimate(const DistanceProfile& profile,
                            const std::optional<PlacementStart>& start = std::nullopt,
                            const EstimatorOptions& options = {});

/// PCA layout of stored points restricted to their first `observed` features.
struct SubLayout {
  int observed = 0;
  Eigen::VectorXd mean;       // observed
  Eigen::MatrixXd basis;      // observed x min(observed, k)
  Eigen::MatrixXd positions;  // n x min(observed, k)

  Eigen::Index width() const { return basis.cols(); }
  Eigen::VectorXd project(const Eigen::Ref<const Eigen::VectorXd>& prefix) const;
  /// Distances from the projected prefix to every stored point.
  Eigen::VectorXd distances_from(const Eigen::Ref<const Eigen::VectorXd>& prefix) const;
};

/// Decomposes the stored points' feature prefix from scratch.
SubLayout sub_layout(const Eigen::Ref<const Eigen::MatrixXd>& stored, int observed,
                     int k);

/// Running mean and scatter matrix of the stored points, so that prefix
/// layouts need only an eigensolve of the leading block plus a projection.
class PrefixScatter {
 public:
  PrefixScatter() = default;
  explicit PrefixScatter(int dims);

  void add(const Eigen::Ref<const Eigen::MatrixXd>& rows);
  void remove(const Eigen::Ref<const Eigen::MatrixXd>& rows);
  /// Recomputes from the given rows, discarding accumulated round-off.
  void rebuild(const Eigen::Ref<const Eigen::MatrixXd>& rows);

  /// Same layout as sub_layout(stored, observed, k) when `stored` holds
  /// exactly the rows added so far.
  SubLayout layout(const Eigen::Ref<const Eigen::MatrixXd>& stored, int observed,
                   int k) const;

  double count() const { return count_; }
  int dims() const { return static_cast<int>(mean_.size()); }
  const Eigen::VectorXd& mean() const { return mean_; }
  /// Lower triangle is authoritative.
  const Eigen::MatrixXd& scatter() const { return scatter_; }

 private:
  double count_ = 0.0;
  Eigen::VectorXd mean_;
  Eigen::MatrixXd scatter_;
};

}  // namespace streampca
