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

#include <cmath>

namespace streampca {

/// Per-parameter Adadelta stepper (decaying RMS of gradients and of steps).
/// Used by the placement optimizer and by the automatic beta update.
class Adadelta {
 public:
  explicit Adadelta(Eigen::Index size = 0, double decay = 0.95,
                    double epsilon = 1e-6)
      : decay_(decay),
        epsilon_(epsilon),
        mean_sq_grad_(Eigen::VectorXd::Zero(size)),
        mean_sq_step_(Eigen::VectorXd::Zero(size)) {}

  Eigen::Index size() const { return mean_sq_grad_.size(); }
  double decay() const { return decay_; }
  double epsilon() const { return epsilon_; }

  /// Accumulates `grad` and returns the step to add to the parameters.
  Eigen::VectorXd step(const Eigen::VectorXd& grad) {
    mean_sq_grad_ =
        decay_ * mean_sq_grad_ + (1.0 - decay_) * grad.cwiseAbs2();
    Eigen::VectorXd delta =
        -((mean_sq_step_.array() + epsilon_).sqrt() /
          (mean_sq_grad_.array() + epsilon_).sqrt() * grad.array())
             .matrix();
    mean_sq_step_ =
        decay_ * mean_sq_step_ + (1.0 - decay_) * delta.cwiseAbs2();
    return delta;
  }

  const Eigen::VectorXd& mean_sq_grad() const { return mean_sq_grad_; }
  const Eigen::VectorXd& mean_sq_step() const { return mean_sq_step_; }

  // Restores accumulators, e.g. when resuming a serialized state.
  void set_accumulators(Eigen::VectorXd mean_sq_grad,
                        Eigen::VectorXd mean_sq_step) {
    mean_sq_grad_ = std::move(mean_sq_grad);
    mean_sq_step_ = std::move(mean_sq_step);
  }

 private:
  double decay_;
  double epsilon_;
  Eigen::VectorXd mean_sq_grad_;
  Eigen::VectorXd mean_sq_step_;
};

}  // namespace streampca
