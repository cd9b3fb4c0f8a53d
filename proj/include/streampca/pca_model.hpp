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
#include <vector>

namespace streampca {

/// A batch of m complete observations, one per row.
struct Batch {
  Eigen::MatrixXd points;  // m x D
  std::vector<std::string> ids;
};

struct PcaOptions {
  int dims = 0;             // D
  int components = 2;       // k, the components used for output
  double forgetting = 1.0;  // f in (0, 1]
  /// Retained rank k'. Zero selects min(D, k + m) at each update.
  int retained_rank = 0;
};

/// Running incremental PCA state (sequential Karhunen-Loeve with a running
/// mean and a forgetting factor). Updates return a new model; a model is a
/// value and may be shared freely between threads once built.
class PcaModel {
 public:
  PcaModel() = default;
  explicit PcaModel(const PcaOptions& options);

  /// Absorbs a batch of m >= 2 rows of width D and returns the new model.
  /// The work is proportional to D * (k' + m)^2 and independent of how many
  /// observations were absorbed before.
  [[nodiscard]] PcaModel updated(const Eigen::Ref<const Eigen::MatrixXd>& batch) const;
  [[nodiscard]] PcaModel updated(const Batch& batch) const {
    return updated(batch.points);
  }

  /// Rows of width D -> rows of width k: (point - mean) * basis[:, :k].
  Eigen::MatrixXd project(const Eigen::Ref<const Eigen::MatrixXd>& points) const;
  Eigen::VectorXd project_point(const Eigen::Ref<const Eigen::VectorXd>& point) const;

  /// k x D matrix of principal-component loadings sqrt(lambda_i) * h_ij with
  /// lambda_i = s_i^2 / max(n_effective - 1, 1).
  Eigen::MatrixXd loadings() const;

  bool empty() const { return n_effective_ <= 0.0; }
  int dims() const { return options_.dims; }
  int components() const { return options_.components; }
  double forgetting() const { return options_.forgetting; }
  const PcaOptions& options() const { return options_; }
  Eigen::Index available_components() const { return basis_.cols(); }

  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::MatrixXd& basis() const { return basis_; }
  const Eigen::VectorXd& singular_values() const { return singular_values_; }
  double n_effective() const { return n_effective_; }

  /// Largest |B^T B - I| entry of the current basis.
  double orthonormality_error() const;

  /// Builds a model from explicit state (deserialization, tests).
  static PcaModel from_state(const PcaOptions& options, Eigen::VectorXd mean,
                             Eigen::MatrixXd basis,
                             Eigen::VectorXd singular_values,
                             double n_effective);

 private:
  void require_components(Eigen::Index wanted) const;

  PcaOptions options_;
  Eigen::VectorXd mean_;
  Eigen::MatrixXd basis_;  // D x k'
  Eigen::VectorXd singular_values_;
  double n_effective_ = 0.0;
};

/// Free-function spelling of PcaModel::updated.
inline PcaModel update(const PcaModel& model, const Batch& batch) {
  return model.updated(batch);
}

/// Number of observations that still influence the model, m / (1 - f).
/// Returns std::nullopt (unbounded) for f == 1.
std::optional<double> effective_history(double forgetting, int batch_size);

}  // namespace streampca
