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

#include "streampca/uncertainty.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace streampca {

double strain_uncertainty(double residual,
                          const Eigen::Ref<const Eigen::VectorXd>& distances) {
  const double total = distances.squaredNorm();
  if (total <= 0.0) return 0.0;
  return std::clamp(std::sqrt(std::max(residual, 0.0) / total), 0.0, 1.0);
}

double loading_uncertainty(const Eigen::Ref<const Eigen::MatrixXd>& loadings,
                           int observed) {
  const Eigen::Index k = loadings.rows();
  const Eigen::Index dims = loadings.cols();
  if (k < 1 || dims < 1) {
    throw std::invalid_argument("loading_uncertainty: empty loadings");
  }
  if (observed < 1 || observed > dims) {
    throw std::invalid_argument("loading_uncertainty: observed dimension count out of range");
  }
  if (observed == dims) return 0.0;
  double covered = 0.0;
  for (Eigen::Index i = 0; i < k; ++i) {
    const double whole = loadings.row(i).cwiseAbs().sum();
    if (whole <= 0.0) {
      covered += 1.0;
      continue;
    }
    covered += loadings.row(i).head(observed).cwiseAbs().sum() / whole;
  }
  return std::clamp(1.0 - covered / static_cast<double>(k), 0.0, 1.0);
}

double combined_uncertainty(double strain, double loading, double beta) {
  return beta * strain + (1.0 - beta) * loading;
}

double observed_error(const Eigen::Ref<const Eigen::VectorXd>& sigma,
                      const Eigen::Ref<const Eigen::VectorXd>& s_prime) {
  if (sigma.size() != s_prime.size()) {
    throw std::invalid_argument("observed_error: length mismatch");
  }
  if (sigma.size() == 0) throw std::invalid_argument("observed_error: no distances");
  return (sigma - s_prime).cwiseAbs().mean();
}

std::optional<double> beta_target(const CompletedPoint& point) {
  const std::size_t count = point.levels.size();
  if (count == 0 || point.strain.size() != count || point.loading.size() != count ||
      point.error.size() != count) {
    return std::nullopt;
  }
  const auto last = std::find(point.levels.begin(), point.levels.end(), point.dims);
  if (last == point.levels.end()) return std::nullopt;
  const double error_full = point.error[static_cast<std::size_t>(last - point.levels.begin())];

  double strain_sum = 0.0;
  double loading_sum = 0.0;
  double excess_error = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    strain_sum += point.strain[i];
    loading_sum += point.loading[i];
    excess_error += point.error[i] - error_full;
  }
  const double mean_strain = strain_sum / static_cast<double>(count);
  if (mean_strain <= 0.0 || loading_sum <= 0.0) return std::nullopt;
  const double rho = error_full / mean_strain;
  const double phi = excess_error / loading_sum;
  if (!(rho + phi > 0.0)) return std::nullopt;
  return std::clamp(rho / (rho + phi), 0.0, 1.0);
}

UncertaintyState::UncertaintyState(double beta0, double decay, double epsilon)
    : beta0_(std::clamp(beta0, 0.0, 1.0)), beta_(beta0_), stepper_(1, decay, epsilon) {}

double UncertaintyState::rms_gradient() const {
  return std::sqrt(stepper_.mean_sq_grad()(0) + stepper_.epsilon());
}

double UncertaintyState::rms_step() const {
  return std::sqrt(stepper_.mean_sq_step()(0) + stepper_.epsilon());
}

BetaStep UncertaintyState::update_beta(std::span<const CompletedPoint> completed) {
  double target_sum = 0.0;
  int targets = 0;
  for (const CompletedPoint& point : completed) {
    if (const auto target = beta_target(point)) {
      target_sum += *target;
      ++targets;
    } else {
      spdlog::debug("beta update: no target for point '{}'", point.id);
    }
  }
  BetaStep out;
  if (targets == 0) {
    if (!completed.empty()) spdlog::debug("beta update skipped: no usable completions");
    return out;
  }
  out.applied = true;
  out.target = target_sum / targets;
  out.gradient = beta_ - out.target;
  out.step = stepper_.step(Eigen::VectorXd::Constant(1, out.gradient))(0);
  beta_ = std::clamp(beta_ + out.step, 0.0, 1.0);
  ++updates_;
  return out;
}

void UncertaintyState::record(const std::string& id, const LevelTrace& trace) {
  histories_[id].push_back(trace);
}

const std::vector<LevelTrace>* UncertaintyState::history(const std::string& id) const {
  const auto it = histories_.find(id);
  return it == histories_.end() ? nullptr : &it->second;
}

void UncertaintyState::purge(const std::string& id) { histories_.erase(id); }

}  // namespace streampca
