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

namespace streampca {

/// Similarity transform acting on row vectors: p -> scale * (p + translation) * rotation.
/// `rotation` is orthogonal and may include a reflection.
struct SimilarityTransform {
  double scale = 1.0;
  Eigen::VectorXd translation;  // k
  Eigen::MatrixXd rotation;     // k x k

  static SimilarityTransform identity(Eigen::Index k);
  Eigen::Index dims() const { return translation.size(); }
};

/// Rows of the previous layout (`prev`, P) paired with the same points in
/// the current layout (`curr`, P').
struct PointCorrespondence {
  Eigen::MatrixXd prev;
  Eigen::MatrixXd curr;
};

/// Least-squares similarity transform minimizing
/// ||scale * (P' + 1 tau^T) R - P||^2 over scale, tau and orthogonal R.
/// A current layout with no spread yields the pure translation onto the
/// previous centroid.
SimilarityTransform fit(const PointCorrespondence& corr);

/// Applies `t` to every row of `points`.
Eigen::MatrixXd apply(const SimilarityTransform& t,
                      const Eigen::Ref<const Eigen::MatrixXd>& points);
Eigen::VectorXd apply_point(const SimilarityTransform& t,
                            const Eigen::Ref<const Eigen::VectorXd>& point);

SimilarityTransform invert(const SimilarityTransform& t);

/// The transform equivalent to applying `first`, then `second`.
SimilarityTransform compose(const SimilarityTransform& first,
                            const SimilarityTransform& second);

/// Frobenius norm of apply(t, corr.curr) - corr.prev.
double residual(const SimilarityTransform& t, const PointCorrespondence& corr);

}  // namespace streampca
