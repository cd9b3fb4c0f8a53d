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

#include "streampca/top_eigen.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace streampca {
namespace {

Eigenpairs dense_top(const Eigen::Ref<const Eigen::MatrixXd>& sym, int count) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(
      sym, Eigen::ComputeEigenvectors);
  const Eigen::Index n = sym.rows();
  Eigenpairs out;
  out.values.resize(count);
  out.vectors.resize(n, count);
  for (int i = 0; i < count; ++i) {
    out.values(i) = solver.eigenvalues()(n - 1 - i);
    out.vectors.col(i) = solver.eigenvectors().col(n - 1 - i);
  }
  return out;
}

// Lanczos with full (twice-applied) Gram-Schmidt reorthogonalization.
// Returns false when the Ritz pairs do not reach the residual tolerance.
bool lanczos_top(const Eigen::Ref<const Eigen::MatrixXd>& sym, int count,
                 Eigenpairs& out) {
  constexpr double kTolerance = 1e-10;
  constexpr int kCheckEvery = 5;
  const Eigen::Index n = sym.rows();
  const Eigen::Index max_steps = std::min<Eigen::Index>(n, 400);

  Eigen::MatrixXd basis(n, max_steps + 1);
  Eigen::VectorXd alpha(max_steps), beta(max_steps);

  // Deterministic start vector with no special alignment to the axes.
  Eigen::VectorXd start(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    start(i) = 1.0 + 0.5 * std::sin(1.0 + 0.37 * static_cast<double>(i));
  }
  basis.col(0) = start.normalized();

  const auto lower = sym.selfadjointView<Eigen::Lower>();
  Eigen::VectorXd w(n);
  for (Eigen::Index j = 0; j < max_steps; ++j) {
    w.noalias() = lower * basis.col(j);
    alpha(j) = basis.col(j).dot(w);
    auto prev = basis.leftCols(j + 1);
    for (int pass = 0; pass < 2; ++pass) {
      Eigen::VectorXd coeff = prev.transpose() * w;
      w.noalias() -= prev * coeff;
    }
    beta(j) = w.norm();

    const Eigen::Index steps = j + 1;
    const bool exhausted = beta(j) <= 1e-14 * std::abs(alpha(0)) ||
                           steps == max_steps;
    if (steps < count && !exhausted) {
      basis.col(j + 1) = w / beta(j);
      continue;
    }
    if (steps % kCheckEvery != 0 && !exhausted) {
      basis.col(j + 1) = w / beta(j);
      continue;
    }

    Eigen::MatrixXd tri = Eigen::MatrixXd::Zero(steps, steps);
    for (Eigen::Index i = 0; i < steps; ++i) {
      tri(i, i) = alpha(i);
      if (i + 1 < steps) tri(i, i + 1) = tri(i + 1, i) = beta(i);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ritz(tri);
    if (steps < count) return false;
    const double scale =
        std::max(std::abs(ritz.eigenvalues()(steps - 1)), 1e-300);
    bool converged = true;
    for (int i = 0; i < count; ++i) {
      const double residual =
          std::abs(beta(j) * ritz.eigenvectors()(steps - 1, steps - 1 - i));
      if (residual > kTolerance * scale) converged = false;
    }
    if (converged || beta(j) <= 1e-14 * scale) {
      out.values.resize(count);
      out.vectors.resize(n, count);
      for (int i = 0; i < count; ++i) {
        out.values(i) = ritz.eigenvalues()(steps - 1 - i);
        out.vectors.col(i) =
            (basis.leftCols(steps) * ritz.eigenvectors().col(steps - 1 - i))
                .normalized();
      }
      return true;
    }
    if (exhausted) return false;
    basis.col(j + 1) = w / beta(j);
  }
  return false;
}

}  // namespace

Eigenpairs top_eigenpairs(const Eigen::Ref<const Eigen::MatrixXd>& sym,
                          int count) {
  if (sym.rows() != sym.cols()) {
    throw std::invalid_argument("top_eigenpairs: matrix is not square");
  }
  if (count < 1 || count > sym.rows()) {
    throw std::invalid_argument("top_eigenpairs: requested " +
                                std::to_string(count) + " eigenpairs of a " +
                                std::to_string(sym.rows()) + "-square matrix");
  }
  if (sym.rows() <= kDenseEigenLimit) return dense_top(sym, count);
  Eigenpairs out;
  if (lanczos_top(sym, count, out)) return out;
  return dense_top(sym, count);
}

}  // namespace streampca
