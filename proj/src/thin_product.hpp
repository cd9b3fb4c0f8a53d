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

namespace streampca::detail {

/// rows * basis for a tall `rows` and a thin `basis` (few columns). Streams
/// through `rows` once, column by column; Eigen's general product would pack
/// the whole left-hand side first, which dominates at this shape.
inline Eigen::MatrixXd thin_product(const Eigen::Ref<const Eigen::MatrixXd>& rows,
                                    const Eigen::Ref<const Eigen::MatrixXd>& basis) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(rows.rows(), basis.cols());
  for (Eigen::Index j = 0; j < rows.cols(); ++j) {
    for (Eigen::Index c = 0; c < basis.cols(); ++c) {
      out.col(c).noalias() += basis(j, c) * rows.col(j);
    }
  }
  return out;
}

}  // namespace streampca::detail
