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

#include "streampca/adadelta.hpp"

#include <Eigen/Core>

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace streampca {

/// Normalized residual of the placement fit, sqrt(residual / sum s^2).
/// Zero when all distances are zero.
double strain_uncertainty(double residual,
                          const Eigen::Ref<const Eigen::VectorXd>& distances);

/// Share of the displayed loading mass not covered by the first `observed`
/// dimensions. Rows whose loadings are all zero count as fully covered.
double loading_uncertainty(const Eigen::Ref<const Eigen::MatrixXd>& loadings,
                           int observed);

/// beta * strain + (1 - beta) * loading.
double combined_uncertainty(double strain, double loading, double beta);

/// Mean absolute difference between final-layout distances and the
/// distances implied by an earlier estimate.
double observed_error(const Eigen::Ref<const Eigen::VectorXd>& sigma,
                      const Eigen::Ref<const Eigen::VectorXd>& s_prime);

struct UncertaintyRecord {
  std::string id;
  int observed = 0;
  double strain = 0.0;    // U
  double loading = 0.0;   // V
  double combined = 0.0;  // W

  bool operator==(const UncertaintyRecord&) const = default;
};

/// One estimate of an in-flight point.
struct LevelTrace {
  int observed = 0;
  double strain = 0.0;
  double loading = 0.0;
  double combined = 0.0;
};

/// Per-level strain, loading and realized error of a point that reached all
/// D dimensions and then appeared in a full layout.
struct CompletedPoint {
  std::string id;
  int dims = 0;
  std::vector<int> levels;
  std::vector<double> strain;
  std::vector<double> loading;
  std::vector<double> error;
};

/// rho / (rho + phi) for one completed point, clamped to [0, 1]; nullopt when
/// it is undefined (no level D, zero mean strain, zero loading sum or a
/// non-positive denominator).
std::optional<double> beta_target(const CompletedPoint& point);

struct BetaStep {
  bool applied = false;
  double target = 0.0;
  double gradient = 0.0;
  double step = 0.0;
};

/// Weight beta between strain and loading uncertainty, tuned from realized
/// placement errors with an Adadelta-style update, plus the per-point
/// histories that feed it. Owned by a single writer.
class UncertaintyState {
 public:
  explicit UncertaintyState(double beta0 = 0.5, double decay = 0.95,
                            double epsilon = 1e-6);

  double beta() const { return beta_; }
  double beta0() const { return beta0_; }
  long updates() const { return updates_; }
  double rms_gradient() const;
  double rms_step() const;

  /// One beta step toward the mean target of `completed`. Points without a
  /// defined target are ignored; if none remain the state is unchanged.
  BetaStep update_beta(std::span<const CompletedPoint> completed);

  void record(const std::string& id, const LevelTrace& trace);
  const std::vector<LevelTrace>* history(const std::string& id) const;
  void purge(const std::string& id);
  std::size_t tracked() const { return histories_.size(); }

 private:
  double beta0_;
  double beta_;
  long updates_ = 0;
  Adadelta stepper_;
  std::map<std::string, std::vector<LevelTrace>> histories_;
};

}  // namespace streampca
