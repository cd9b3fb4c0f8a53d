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

#include "streampca/position_estimation.hpp"

#include "streampca/adadelta.hpp"
#include "streampca/top_eigen.hpp"
#include "thin_product.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace streampca {
namespace {

constexpr double kStartEpsilon = 1e-9;

void check_profile(const DistanceProfile& profile) {
  if (profile.anchors.rows() < 1) {
    throw std::invalid_argument("estimate: distance profile has no anchors");
  }
  if (profile.distances.size() != profile.anchors.rows()) {
    throw std::invalid_argument("estimate: " + std::to_string(profile.distances.size()) +
                                " distances for " + std::to_string(profile.anchors.rows()) +
                                " anchors");
  }
  if (!profile.distances.allFinite() || (profile.distances.array() < 0.0).any()) {
    throw std::invalid_argument("estimate: distances must be finite and non-negative");
  }
}

// Scratch space for evaluate(), sized once per optimization.
struct Workspace {
  Eigen::ArrayXXd diff;  // n x k, x - q_i
  Eigen::ArrayXd dist;
  Eigen::ArrayXd resid;
  Eigen::ArrayXd coef;
};

// Objective and gradient; anchors are n x k with each coordinate contiguous.
double evaluate(const Eigen::MatrixXd& anchors, const Eigen::VectorXd& s, double scale,
                const Eigen::Ref<const Eigen::VectorXd>& x, Eigen::VectorXd& grad,
                Workspace& w) {
  const Eigen::Index k = anchors.cols();
  w.diff = (-anchors.array()).rowwise() + x.transpose().array();
  w.dist = w.diff.square().rowwise().sum().sqrt();
  w.resid = s.array() - scale * w.dist;
  // Anchors that coincide with x contribute no direction.
  w.coef = (w.dist > 0.0).select(-2.0 * scale * w.resid / w.dist, 0.0);
  grad.resize(k + 1);
  grad(0) = -2.0 * (w.resid * w.dist).sum();
  for (Eigen::Index c = 0; c < k; ++c) grad(c + 1) = (w.coef * w.diff.col(c)).sum();
  return w.resid.square().sum();
}

}  // namespace

ObjectiveValue placement_objective(const DistanceProfile& profile, double scale,
                                   const Eigen::Ref<const Eigen::VectorXd>& position) {
  check_profile(profile);
  if (position.size() != profile.anchors.cols()) {
    throw std::invalid_argument("placement_objective: position width mismatch");
  }
  ObjectiveValue out;
  Workspace work;
  out.value = evaluate(profile.anchors, profile.distances, scale, position, out.gradient, work);
  return out;
}

Eigen::VectorXd default_start_position(const DistanceProfile& profile) {
  check_profile(profile);
  const Eigen::ArrayXd weights = 1.0 / (profile.distances.array() + kStartEpsilon);
  return (profile.anchors.transpose() * weights.matrix()) / weights.sum();
}

EstimatedPlacement estimate(const DistanceProfile& profile,
                            const std::optional<PlacementStart>& start,
                            const EstimatorOptions& options) {
  check_profile(profile);
  const Eigen::Index n = profile.anchors.rows();
  const Eigen::Index k = profile.anchors.cols();
  const Eigen::VectorXd& s = profile.distances;
  const double total = s.squaredNorm();

  EstimatedPlacement out;
  out.underdetermined = n < k + 1;

  if (total == 0.0) {
    // Every anchor coincides with the new point in the prefix layout.
    out.position = profile.anchors.row(0).transpose();
    out.scale = 1.0;
    Eigen::VectorXd unused;
    Workspace work;
    out.residual = evaluate(profile.anchors, s, out.scale, out.position, unused, work);
    return out;
  }

  Eigen::VectorXd theta(k + 1);
  if (start && start->position.size() == k && start->position.allFinite() &&
      std::isfinite(start->scale)) {
    theta(0) = std::max(start->scale, 0.0);
    theta.tail(k) = start->position;
  } else {
    theta(0) = 1.0;
    theta.tail(k) = default_start_position(profile);
  }
  const Eigen::VectorXd initial = theta;

  // Optimize in a frame centred on the anchors so the trajectory does not
  // depend on where the layout sits.
  const Eigen::VectorXd origin = profile.anchors.colwise().mean().transpose();
  const Eigen::MatrixXd anchors = profile.anchors.rowwise() - origin.transpose();
  Workspace work;
  theta.tail(k) -= origin;
  Adadelta stepper(k + 1, options.decay, options.epsilon);
  Eigen::VectorXd grad(k + 1);

  const int patience = std::max(options.patience, 1);
  std::vector<double> best_history;
  best_history.reserve(static_cast<std::size_t>(std::max(options.max_iterations, 0)) + 1);
  double best_value = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best = theta;

  int iter = 0;
  int stale = 0;
  for (; iter < options.max_iterations; ++iter) {
    double value = evaluate(anchors, s, theta(0), theta.tail(k), grad, work);
    if (value < best_value) {
      best_value = value;
      best = theta;
      stale = 0;
    } else if (options.restart_after > 0 && ++stale >= options.restart_after) {
      // Adadelta's step size does not anneal and can lock into an
      // oscillation across a valley; start over from the best point.
      theta = best;
      stepper = Adadelta(k + 1, options.decay, options.epsilon);
      value = evaluate(anchors, s, theta(0), theta.tail(k), grad, work);
      stale = 0;
    }
    best_history.push_back(best_value);
    if (iter >= patience) {
      const double before = best_history[static_cast<std::size_t>(iter - patience)];
      if (before - best_value <= options.relative_tolerance * before) break;
    }
    theta += stepper.step(grad);
    theta(0) = std::max(theta(0), 0.0);
  }
  {
    const double value = evaluate(anchors, s, theta(0), theta.tail(k), grad, work);
    if (value < best_value) {
      best_value = value;
      best = theta;
    }
  }

  out.iterations = iter;
  if (best_value > total) {
    out.scale = 0.0;
    out.position = initial.tail(k);
    out.residual = total;
    out.fell_back = true;
  } else {
    out.scale = best(0);
    out.position = best.tail(k) + origin;
    out.residual = best_value;
  }
  return out;
}

Eigen::VectorXd SubLayout::project(const Eigen::Ref<const Eigen::VectorXd>& prefix) const {
  if (prefix.size() != observed) {
    throw std::invalid_argument("SubLayout: prefix has " + std::to_string(prefix.size()) +
                                " features, layout expects " + std::to_string(observed));
  }
  return basis.transpose() * (prefix - mean);
}

Eigen::VectorXd SubLayout::distances_from(const Eigen::Ref<const Eigen::VectorXd>& prefix) const {
  const Eigen::VectorXd p = project(prefix);
  return (positions.rowwise() - p.transpose()).rowwise().norm();
}

namespace {

SubLayout finish_layout(const Eigen::Ref<const Eigen::MatrixXd>& stored, int observed,
                        int k, Eigen::VectorXd mean,
                        const Eigen::Ref<const Eigen::MatrixXd>& scatter) {
  const int width = std::min(observed, k);
  Eigenpairs eig = top_eigenpairs(scatter, width);
  SubLayout layout;
  layout.observed = observed;
  layout.mean = std::move(mean);
  layout.basis = std::move(eig.vectors);
  layout.positions = detail::thin_product(stored.leftCols(observed), layout.basis);
  layout.positions.rowwise() -= (layout.mean.transpose() * layout.basis);
  return layout;
}

void check_prefix_args(Eigen::Index rows, Eigen::Index dims, int observed, int k) {
  if (rows < 2) {
    throw std::invalid_argument("sub_layout: needs at least 2 stored points, got " +
                                std::to_string(rows));
  }
  if (observed < 1 || observed > dims) {
    throw std::invalid_argument("sub_layout: observed features " + std::to_string(observed) +
                                " outside [1, " + std::to_string(dims) + "]");
  }
  if (k < 1) throw std::invalid_argument("sub_layout: k must be >= 1");
}

}  // namespace

SubLayout sub_layout(const Eigen::Ref<const Eigen::MatrixXd>& stored, int observed, int k) {
  check_prefix_args(stored.rows(), stored.cols(), observed, k);
  const auto prefix = stored.leftCols(observed);
  Eigen::VectorXd mean = prefix.colwise().mean().transpose();
  const Eigen::MatrixXd centered = prefix.rowwise() - mean.transpose();
  const Eigen::MatrixXd scatter = centered.transpose() * centered;
  return finish_layout(stored, observed, k, std::move(mean), scatter);
}

PrefixScatter::PrefixScatter(int dims)
    : mean_(Eigen::VectorXd::Zero(dims)), scatter_(Eigen::MatrixXd::Zero(dims, dims)) {}

void PrefixScatter::add(const Eigen::Ref<const Eigen::MatrixXd>& rows) {
  if (rows.rows() == 0) return;
  if (rows.cols() != dims()) throw std::invalid_argument("PrefixScatter: width mismatch");
  const double m = static_cast<double>(rows.rows());
  const Eigen::VectorXd batch_mean = rows.colwise().mean().transpose();
  const Eigen::MatrixXd centered = (rows.rowwise() - batch_mean.transpose()).transpose();
  const double total = count_ + m;
  const Eigen::VectorXd delta = batch_mean - mean_;
  auto lower = scatter_.selfadjointView<Eigen::Lower>();
  lower.rankUpdate(centered);
  if (count_ > 0.0) lower.rankUpdate(delta, count_ * m / total);
  mean_ += delta * (m / total);
  count_ = total;
}

void PrefixScatter::remove(const Eigen::Ref<const Eigen::MatrixXd>& rows) {
  if (rows.rows() == 0) return;
  if (rows.cols() != dims()) throw std::invalid_argument("PrefixScatter: width mismatch");
  const double m = static_cast<double>(rows.rows());
  if (m > count_) throw std::invalid_argument("PrefixScatter: removing more rows than held");
  const double rest = count_ - m;
  if (rest == 0.0) {
    count_ = 0.0;
    mean_.setZero();
    scatter_.setZero();
    return;
  }
  const Eigen::VectorXd batch_mean = rows.colwise().mean().transpose();
  const Eigen::MatrixXd centered = (rows.rowwise() - batch_mean.transpose()).transpose();
  const Eigen::VectorXd rest_mean = (count_ * mean_ - m * batch_mean) / rest;
  const Eigen::VectorXd delta = batch_mean - rest_mean;
  auto lower = scatter_.selfadjointView<Eigen::Lower>();
  lower.rankUpdate(centered, -1.0);
  lower.rankUpdate(delta, -rest * m / count_);
  mean_ = rest_mean;
  count_ = rest;
}

void PrefixScatter::rebuild(const Eigen::Ref<const Eigen::MatrixXd>& rows) {
  const int d = dims();
  count_ = 0.0;
  mean_ = Eigen::VectorXd::Zero(d);
  scatter_ = Eigen::MatrixXd::Zero(d, d);
  add(rows);
}

SubLayout PrefixScatter::layout(const Eigen::Ref<const Eigen::MatrixXd>& stored, int observed,
                                int k) const {
  check_prefix_args(stored.rows(), dims(), observed, k);
  if (stored.cols() != dims()) throw std::invalid_argument("PrefixScatter: width mismatch");
  return finish_layout(stored, observed, k, mean_.head(observed),
                       scatter_.topLeftCorner(observed, observed));
}

}  // namespace streampca
