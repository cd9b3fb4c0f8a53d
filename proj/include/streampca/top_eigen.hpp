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

/// Leading eigenpairs of a symmetric positive semi-definite matrix,
/// eigenvalues in descending order.
struct Eigenpairs {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;  // one column per eigenvalue
};

/// Computes the `count` largest eigenpairs of the symmetric matrix `sym`
/// (only the lower triangle is read). Small matrices go through a dense
/// solver; larger ones use Lanczos with full reorthogonalization and fall
/// back to the dense solver if it does not converge.
Eigenpairs top_eigenpairs(const Eigen::Ref<const Eigen::MatrixXd>& sym,
                          int count);

/// Size above which `top_eigenpairs` switches to Lanczos.
inline constexpr Eigen::Index kDenseEigenLimit = 192;

}  // namespace streampca
