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

#include "streampca/pca_model.hpp"

#include "thin_product.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace streampca {
namespace {

constexpr double kSingularFloor = 1e-12;
constexpr double kReorthogonalizeAbove = 1e-12;

void validate_options(const PcaOptions& o) {
  if (o.dims < 1) throw std::invalid_argument("PcaModel: dims must be >= 1");
  if (o.components < 1 || o.components > o.dims) {
    throw std::invalid_argument("PcaModel: components must lie in [1, dims]");
  }
  if (!(o.forgetting > 0.0 && o.forgetting <= 1.0)) {
    throw std::invalid_argument("PcaModel: forgetting factor must lie in (0, 1]");
  }
  if (o.retained_rank != 0 &&
      (o.retained_rank < o.components || o.retained_rank > o.dims)) {
    throw std::invalid_argument(
        "PcaModel: retained rank must lie in [components, dims]");
  }
}

}  // namespace

PcaModel::PcaModel(const PcaOptions& options) : options_(options) {
  validate_options(options_);
  mean_ = Eigen::VectorXd::Zero(options_.dims);
  basis_.resize(options_.dims, 0);
  singular_values_.resize(0);
}

PcaModel PcaModel::from_state(const PcaOptions& options, Eigen::VectorXd mean,
                              Eigen::MatrixXd basis,
                              Eigen::VectorXd singular_values,
                              double n_effective) {
  PcaModel model(options);
  if (mean.size() != options.dims || basis.rows() != options.dims ||
      basis.cols() != singular_values.size() || n_effective < 0.0) {
    throw std::invalid_argument("PcaModel::from_state: inconsistent shapes");
  }
  model.mean_ = std::move(mean);
  model.basis_ = std::move(basis);
  model.singular_values_ = std::move(singular_values);
  model.n_effective_ = n_effective;
  return model;
}

PcaModel PcaModel::updated(const Eigen::Ref<const Eigen::MatrixXd>& batch) const {
  const Eigen::Index dims = options_.dims;
  const Eigen::Index m = batch.rows();
  if (batch.cols() != dims) {
    throw std::invalid_argument("PcaModel::update: batch width " +
                                std::to_string(batch.cols()) +
                                " does not match model dims " +
                                std::to_string(dims));
  }
  if (m < 2) {
    throw std::invalid_argument("PcaModel::update: batch needs m >= 2 rows, got " +
                                std::to_string(m));
  }
  if (!batch.allFinite()) {
    throw std::invalid_argument("PcaModel::update: batch has non-finite values");
  }

  const double f = options_.forgetting;
  const double n_old = n_effective_;
  const Eigen::VectorXd batch_mean = batch.colwise().mean().transpose();

  // Augmented matrix: [f * U * S, centered batch, mean-correction column].
  const Eigen::Index prior = basis_.cols();
  const bool correct_mean = n_old > 0.0;
  const Eigen::Index width = prior + m + (correct_mean ? 1 : 0);
  Eigen::MatrixXd augmented(dims, width);
  if (prior > 0) {
    augmented.leftCols(prior) = f * basis_ * singular_values_.asDiagonal();
  }
  augmented.middleCols(prior, m) =
      (batch.rowwise() - batch_mean.transpose()).transpose();
  if (correct_mean) {
    augmented.col(width - 1) =
        std::sqrt(n_old * static_cast<double>(m) / (n_old + static_cast<double>(m))) *
        (batch_mean - mean_);
  }

  PcaModel next = *this;
  next.n_effective_ = f * n_old + static_cast<double>(m);
  next.mean_ = (f * n_old * mean_ + static_cast<double>(m) * batch_mean) /
               next.n_effective_;

  // Thin QR of the augmented matrix, then the SVD of its small R factor.
  const Eigen::Index r = std::min(dims, width);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(augmented);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(dims, r);
  Eigen::MatrixXd upper =
      qr.matrixQR().topRows(r).triangularView<Eigen::Upper>();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(upper, Eigen::ComputeThinU);

  const Eigen::Index target = options_.retained_rank > 0
                                  ? options_.retained_rank
                                  : std::min<Eigen::Index>(dims, options_.components + m);
  Eigen::Index keep = std::min(target, r);

  next.basis_ = q * svd.matrixU().leftCols(keep);
  next.singular_values_ = svd.singularValues().head(keep);
  if (keep < target) {
    // Too few columns to span `target` directions yet (first batches with
    // m < k): complete the basis with zero-variance orthonormal directions.
    Eigen::HouseholderQR<Eigen::MatrixXd> complete(next.basis_);
    Eigen::MatrixXd full = complete.householderQ() * Eigen::MatrixXd::Identity(dims, target);
    full.leftCols(keep) = next.basis_;
    next.basis_ = std::move(full);
    next.singular_values_.conservativeResize(target);
    next.singular_values_.tail(target - keep).setZero();
    keep = target;
  }
  const double largest =
      next.singular_values_.size() > 0 ? next.singular_values_(0) : 0.0;
  for (Eigen::Index i = 0; i < keep; ++i) {
    if (next.singular_values_(i) < kSingularFloor * largest) {
      next.singular_values_(i) = 0.0;
    }
  }

  if (next.orthonormality_error() > kReorthogonalizeAbove) {
    Eigen::HouseholderQR<Eigen::MatrixXd> fix(next.basis_);
    Eigen::MatrixXd thin = fix.householderQ() * Eigen::MatrixXd::Identity(dims, keep);
    // Keep each column's orientation.
    for (Eigen::Index i = 0; i < keep; ++i) {
      if (thin.col(i).dot(next.basis_.col(i)) < 0.0) thin.col(i) *= -1.0;
    }
    next.basis_ = std::move(thin);
  }
  return next;
}

void PcaModel::require_components(Eigen::Index wanted) const {
  if (empty()) throw std::logic_error("PcaModel: model is empty");
  if (basis_.cols() < wanted) {
    throw std::invalid_argument(
        "PcaModel: " + std::to_string(wanted) + " components requested but only " +
        std::to_string(basis_.cols()) + " available (short by " +
        std::to_string(wanted - basis_.cols()) + ")");
  }
}

Eigen::MatrixXd PcaModel::project(const Eigen::Ref<const Eigen::MatrixXd>& points) const {
  const Eigen::Index k = options_.components;
  require_components(k);
  if (points.cols() != options_.dims) {
    throw std::invalid_argument("PcaModel::project: point width mismatch");
  }
  Eigen::MatrixXd out = detail::thin_product(points, basis_.leftCols(k));
  out.rowwise() -= (mean_.transpose() * basis_.leftCols(k));
  return out;
}

Eigen::VectorXd PcaModel::project_point(const Eigen::Ref<const Eigen::VectorXd>& point) const {
  const Eigen::Index k = options_.components;
  require_components(k);
  if (point.size() != options_.dims) {
    throw std::invalid_argument("PcaModel::project: point width mismatch");
  }
  return basis_.leftCols(k).transpose() * (point - mean_);
}

Eigen::MatrixXd PcaModel::loadings() const {
  const Eigen::Index k = options_.components;
  require_components(k);
  const double denom = std::max(n_effective_ - 1.0, 1.0);
  Eigen::MatrixXd out(k, options_.dims);
  for (Eigen::Index i = 0; i < k; ++i) {
    const double lambda = singular_values_(i) * singular_values_(i) / denom;
    out.row(i) = std::sqrt(lambda) * basis_.col(i).transpose();
  }
  return out;
}

double PcaModel::orthonormality_error() const {
  if (basis_.cols() == 0) return 0.0;
  const Eigen::MatrixXd gram = basis_.transpose() * basis_;
  return (gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols()))
      .cwiseAbs()
      .maxCoeff();
}

std::optional<double> effective_history(double forgetting, int batch_size) {
  if (!(forgetting > 0.0 && forgetting <= 1.0)) {
    throw std::invalid_argument("effective_history: forgetting factor must lie in (0, 1]");
  }
  if (batch_size < 2) {
    throw std::invalid_argument("effective_history: batch size must be >= 2");
  }
  if (forgetting == 1.0) return std::nullopt;
  return static_cast<double>(batch_size) / (1.0 - forgetting);
}

}  // namespace streampca
