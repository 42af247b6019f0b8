/*
 * Copyright 2026 The LeakLab Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *   https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef LEAKLAB_LOGREG_HPP_
#define LEAKLAB_LOGREG_HPP_

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <functional>
#include <stdexcept>
#include <vector>

namespace leaklab {

using SparseRows = Eigen::SparseMatrix<double, Eigen::RowMajor>;

// ---------------------------------------------------------------------------
// Limited-memory BFGS with a backtracking Armijo line search.

struct LbfgsOptions {
  int max_iterations = 1000;
  int history = 10;
  double grad_tol = 1e-6;
};

struct LbfgsResult {
  Eigen::VectorXd x;
  double value = 0;
  double grad_norm = 0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> history;  // objective after each accepted step
};

// Objective returns f(x) and writes the gradient into `grad`.
using Objective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;

LbfgsResult lbfgs_minimize(const Objective& f, Eigen::VectorXd x0, const LbfgsOptions& opts = {});

// ---------------------------------------------------------------------------
// Binary L2-regularized logistic regression.
//
// Loss over the standardized design Z:
//   sum_i softplus(z_i) - y_i z_i + (l2 / 2) |w|^2,  z_i = Z_i w + b.
// The bias is not penalized.

class TrainingError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct LogRegModel {
  Eigen::VectorXd weights;
  double bias = 0;
  Eigen::VectorXd mean;   // empty for sparse models
  Eigen::VectorXd scale;  // per-feature divisor
  double l2_lambda = 1.0;
  int iterations = 0;
  double grad_norm = 0;
  std::vector<double> loss_history;

  Eigen::VectorXd decision(const Eigen::MatrixXd& x) const;
  Eigen::VectorXd decision(const SparseRows& x) const;
  std::vector<int> predict(const Eigen::MatrixXd& x) const;
  std::vector<int> predict(const SparseRows& x) const;
};

struct TrainOptions {
  double l2_lambda = 1.0;
  int iterations = 1000;
  double grad_tol = 1e-6;
};

// Columns are standardized with training mean and std (std 0 treated as 1).
LogRegModel train_logreg(const Eigen::MatrixXd& x, const std::vector<int>& y,
                         const TrainOptions& opts = {});
// Sparse variant: columns scaled by their max magnitude, not centered.
LogRegModel train_logreg(const SparseRows& x, const std::vector<int>& y,
                         const TrainOptions& opts = {});

// Loss and gradient of the binary objective at (w, b) over an already
// transformed design. Exposed for gradient checks.
double logreg_loss(const Eigen::MatrixXd& z, const std::vector<int>& y, double l2,
                   const Eigen::VectorXd& params, Eigen::VectorXd* grad);

// ---------------------------------------------------------------------------
// Multinomial (softmax) regression over labels 0..K-1.

struct SoftmaxModel {
  Eigen::MatrixXd weights;  // d x K
  Eigen::VectorXd bias;     // K
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;
  std::vector<int> classes;  // model column -> original label
  int iterations = 0;
  double grad_norm = 0;

  std::vector<int> predict(const Eigen::MatrixXd& x) const;
};

SoftmaxModel train_softmax(const Eigen::MatrixXd& x, const std::vector<int>& y,
                           const TrainOptions& opts = {});

double accuracy(const std::vector<int>& predicted, const std::vector<int>& truth);

}  // namespace leaklab

#endif  // LEAKLAB_LOGREG_HPP_
