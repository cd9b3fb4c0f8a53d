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

#include "streampca/alignment.hpp"

#include <Eigen/SVD>

#include <stdexcept>
#include <string>

namespace streampca {

SimilarityTransform SimilarityTransform::identity(Eigen::Index k) {
  return {1.0, Eigen::VectorXd::Zero(k), Eigen::MatrixXd::Identity(k, k)};
}

SimilarityTransform fit(const PointCorrespondence& corr) {
  const Eigen::Index n = corr.prev.rows();
  const Eigen::Index k = corr.prev.cols();
  if (n < 1 || corr.curr.rows() != n || corr.curr.cols() != k) {
    throw std::invalid_argument("alignment::fit: correspondence needs matching non-empty layouts");
  }
  const Eigen::RowVectorXd prev_centroid = corr.prev.colwise().mean();
  const Eigen::RowVectorXd curr_centroid = corr.curr.colwise().mean();
  const Eigen::MatrixXd prev_c = corr.prev.rowwise() - prev_centroid;
  const Eigen::MatrixXd curr_c = corr.curr.rowwise() - curr_centroid;

  SimilarityTransform degenerate{1.0, (prev_centroid - curr_centroid).transpose(),
                                 Eigen::MatrixXd::Identity(k, k)};
  const double curr_ss = curr_c.squaredNorm();
  if (curr_ss <= 0.0) return degenerate;

  // Cross-covariance P_c^T P'_c = U S V^T gives R = V U^T.
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(prev_c.transpose() * curr_c,
                                        Eigen::ComputeFullU | Eigen::ComputeFullV);
  const double trace = svd.singularValues().sum();
  if (!(trace > 0.0)) return degenerate;

  SimilarityTransform t;
  t.rotation = svd.matrixV() * svd.matrixU().transpose();
  t.scale = trace / curr_ss;
  // Map the current centroid onto the previous one:
  // scale * (c' + tau) R = c  =>  tau = c R^T / scale - c'.
  t.translation = (prev_centroid * t.rotation.transpose() / t.scale - curr_centroid).transpose();
  return t;
}

Eigen::MatrixXd apply(const SimilarityTransform& t,
                      const Eigen::Ref<const Eigen::MatrixXd>& points) {
  if (points.cols() != t.dims()) {
    throw std::invalid_argument("alignment::apply: points have width " +
                                std::to_string(points.cols()) + ", transform expects " +
                                std::to_string(t.dims()));
  }
  return t.scale * ((points.rowwise() + t.translation.transpose()) * t.rotation);
}

Eigen::VectorXd apply_point(const SimilarityTransform& t,
                            const Eigen::Ref<const Eigen::VectorXd>& point) {
  if (point.size() != t.dims()) {
    throw std::invalid_argument("alignment::apply: point width mismatch");
  }
  return t.scale * (t.rotation.transpose() * (point + t.translation));
}

SimilarityTransform invert(const SimilarityTransform& t) {
  // y = c (x + tau) R  =>  x = (1/c) (y - c tau R) R^T.
  return {1.0 / t.scale, -t.scale * (t.rotation.transpose() * t.translation),
          t.rotation.transpose()};
}

SimilarityTransform compose(const SimilarityTransform& first,
                            const SimilarityTransform& second) {
  if (first.dims() != second.dims()) {
    throw std::invalid_argument("alignment::compose: dimension mismatch");
  }
  // c2 (c1 (x + tau1) R1 + tau2) R2 = c1 c2 (x + tau1 + tau2 R1^T / c1) R1 R2.
  return {first.scale * second.scale,
          first.translation + first.rotation * second.translation / first.scale,
          first.rotation * second.rotation};
}

double residual(const SimilarityTransform& t, const PointCorrespondence& corr) {
  return (apply(t, corr.curr) - corr.prev).norm();
}

}  // namespace streampca
