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

#include "leaklab/logreg.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <string>

namespace leaklab {
namespace {

double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

void check_binary(std::size_t rows, const std::vector<int>& y) {
  if (rows != y.size()) throw TrainingError("feature rows and labels differ in length");
  if (rows < 4) throw TrainingError("need at least 4 examples to train");
  bool zero = false, one = false;
  for (int v : y) {
    if (v == 0) zero = true;
    else if (v == 1) one = true;
    else throw TrainingError("binary labels must be 0 or 1");
  }
  if (!zero || !one) throw TrainingError("training labels contain a single class");
}

template <typename Design>
double binary_objective(const Design& z, const Eigen::VectorXd& yv, double l2,
                        const Eigen::VectorXd& params, Eigen::VectorXd* grad) {
  const Eigen::Index d = z.cols();
  const auto w = params.head(d);
  const double b = params[d];
  Eigen::VectorXd s = z * w;
  s.array() += b;
  double loss = 0.5 * l2 * w.squaredNorm();
  Eigen::VectorXd r(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    loss += softplus(s[i]) - yv[i] * s[i];
    r[i] = sigmoid(s[i]) - yv[i];
  }
  if (grad != nullptr) {
    grad->resize(d + 1);
    grad->head(d) = z.transpose() * r + l2 * w;
    (*grad)[d] = r.sum();
  }
  return loss;
}

template <typename Design>
LogRegModel fit_binary(const Design& z, const std::vector<int>& y, const TrainOptions& opts) {
  Eigen::VectorXd yv(static_cast<Eigen::Index>(y.size()));
  for (std::size_t i = 0; i < y.size(); ++i) yv[static_cast<Eigen::Index>(i)] = y[i];
  Objective f = [&](const Eigen::VectorXd& p, Eigen::VectorXd& g) {
    return binary_objective(z, yv, opts.l2_lambda, p, &g);
  };
  LbfgsOptions lo;
  lo.max_iterations = opts.iterations;
  lo.grad_tol = opts.grad_tol;
  LbfgsResult res = lbfgs_minimize(f, Eigen::VectorXd::Zero(z.cols() + 1), lo);
  LogRegModel m;
  m.weights = res.x.head(z.cols());
  m.bias = res.x[z.cols()];
  m.l2_lambda = opts.l2_lambda;
  m.iterations = res.iterations;
  m.grad_norm = res.grad_norm;
  m.loss_history = std::move(res.history);
  return m;
}

void check_finite(const Eigen::MatrixXd& x) {
  if (!x.allFinite()) throw TrainingError("features contain non-finite values");
}

// Column mean and std (population); std 0 becomes 1.
void standardize_fit(const Eigen::MatrixXd& x, Eigen::VectorXd& mean, Eigen::VectorXd& scale) {
  mean = x.colwise().mean().transpose();
  scale.resize(x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double var = (x.col(j).array() - mean[j]).square().mean();
    scale[j] = var > 1e-24 ? std::sqrt(var) : 1.0;
  }
}

Eigen::MatrixXd standardize_apply(const Eigen::MatrixXd& x, const Eigen::VectorXd& mean,
                                  const Eigen::VectorXd& scale) {
  return (x.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array();
}

SparseRows scale_columns(const SparseRows& x, const Eigen::VectorXd& scale) {
  SparseRows out = x;
  for (Eigen::Index r = 0; r < out.outerSize(); ++r) {
    for (SparseRows::InnerIterator it(out, r); it; ++it) it.valueRef() /= scale[it.col()];
  }
  return out;
}

}  // namespace

LbfgsResult lbfgs_minimize(const Objective& f, Eigen::VectorXd x0, const LbfgsOptions& opts) {
  LbfgsResult res;
  Eigen::VectorXd x = std::move(x0);
  Eigen::VectorXd g(x.size());
  double fx = f(x, g);
  std::deque<Eigen::VectorXd> s_hist, y_hist;
  std::deque<double> rho_hist;
  res.history.push_back(fx);

  int it = 0;
  int stalled = 0;
  for (; it < opts.max_iterations; ++it) {
    if (g.norm() <= opts.grad_tol) break;

    // Two-loop recursion.
    Eigen::VectorXd q = g;
    std::vector<double> alpha(s_hist.size());
    for (std::size_t k = s_hist.size(); k-- > 0;) {
      alpha[k] = rho_hist[k] * s_hist[k].dot(q);
      q -= alpha[k] * y_hist[k];
    }
    double gamma = 1.0;
    if (!s_hist.empty()) gamma = s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
    Eigen::VectorXd dir = gamma * q;
    for (std::size_t k = 0; k < s_hist.size(); ++k) {
      const double beta = rho_hist[k] * y_hist[k].dot(dir);
      dir += (alpha[k] - beta) * s_hist[k];
    }
    dir = -dir;
    double slope = g.dot(dir);
    if (!(slope < 0)) {
      // Not a descent direction; restart from steepest descent.
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      dir = -g;
      slope = -g.squaredNorm();
    }

    double step = s_hist.empty() ? std::min(1.0, 1.0 / std::max(g.norm(), 1e-300)) : 1.0;
    Eigen::VectorXd x_new, g_new(x.size());
    double f_new = fx;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      x_new = x + step * dir;
      f_new = f(x_new, g_new);
      if (std::isfinite(f_new) && f_new <= fx + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // no further progress at machine precision

    Eigen::VectorXd s = x_new - x;
    Eigen::VectorXd yk = g_new - g;
    const double sy = s.dot(yk);
    if (sy > 1e-12 * s.norm() * yk.norm()) {
      if (static_cast<int>(s_hist.size()) == opts.history) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(yk));
      rho_hist.push_back(1.0 / sy);
    }
    // Progress below the objective's rounding level for several steps in a
    // row means the gradient cannot shrink further in floating point.
    stalled = fx - f_new <= 1e-14 * std::max(1.0, std::abs(fx)) ? stalled + 1 : 0;
    x = std::move(x_new);
    g = g_new;
    fx = f_new;
    if (stalled >= 5) {
      ++it;
      break;
    }
    res.history.push_back(fx);
  }
  res.x = std::move(x);
  res.value = fx;
  res.grad_norm = g.norm();
  res.iterations = it;
  res.converged = res.grad_norm <= opts.grad_tol;
  return res;
}

double logreg_loss(const Eigen::MatrixXd& z, const std::vector<int>& y, double l2,
                   const Eigen::VectorXd& params, Eigen::VectorXd* grad) {
  Eigen::VectorXd yv(static_cast<Eigen::Index>(y.size()));
  for (std::size_t i = 0; i < y.size(); ++i) yv[static_cast<Eigen::Index>(i)] = y[i];
  return binary_objective(z, yv, l2, params, grad);
}

LogRegModel train_logreg(const Eigen::MatrixXd& x, const std::vector<int>& y,
                         const TrainOptions& opts) {
  check_binary(static_cast<std::size_t>(x.rows()), y);
  check_finite(x);
  Eigen::VectorXd mean, scale;
  standardize_fit(x, mean, scale);
  LogRegModel m = fit_binary(standardize_apply(x, mean, scale), y, opts);
  m.mean = std::move(mean);
  m.scale = std::move(scale);
  return m;
}

LogRegModel train_logreg(const SparseRows& x, const std::vector<int>& y, const TrainOptions& opts) {
  check_binary(static_cast<std::size_t>(x.rows()), y);
  Eigen::VectorXd scale = Eigen::VectorXd::Ones(x.cols());
  for (Eigen::Index r = 0; r < x.outerSize(); ++r) {
    for (SparseRows::InnerIterator it(x, r); it; ++it) {
      if (!std::isfinite(it.value())) throw TrainingError("features contain non-finite values");
      scale[it.col()] = std::max(scale[it.col()], std::abs(it.value()));
    }
  }
  LogRegModel m = fit_binary(scale_columns(x, scale), y, opts);
  m.scale = std::move(scale);
  return m;
}

Eigen::VectorXd LogRegModel::decision(const Eigen::MatrixXd& x) const {
  Eigen::VectorXd s = standardize_apply(x, mean, scale) * weights;
  s.array() += bias;
  return s;
}

Eigen::VectorXd LogRegModel::decision(const SparseRows& x) const {
  Eigen::VectorXd s = scale_columns(x, scale) * weights;
  s.array() += bias;
  return s;
}

std::vector<int> LogRegModel::predict(const Eigen::MatrixXd& x) const {
  Eigen::VectorXd s = decision(x);
  std::vector<int> out(static_cast<std::size_t>(s.size()));
  for (Eigen::Index i = 0; i < s.size(); ++i) out[static_cast<std::size_t>(i)] = s[i] > 0 ? 1 : 0;
  return out;
}

std::vector<int> LogRegModel::predict(const SparseRows& x) const {
  Eigen::VectorXd s = decision(x);
  std::vector<int> out(static_cast<std::size_t>(s.size()));
  for (Eigen::Index i = 0; i < s.size(); ++i) out[static_cast<std::size_t>(i)] = s[i] > 0 ? 1 : 0;
  return out;
}

SoftmaxModel train_softmax(const Eigen::MatrixXd& x, const std::vector<int>& y,
                           const TrainOptions& opts) {
  if (static_cast<std::size_t>(x.rows()) != y.size()) {
    throw TrainingError("feature rows and labels differ in length");
  }
  if (y.empty()) throw TrainingError("no training examples");
  check_finite(x);
  SoftmaxModel m;
  std::map<int, int> column;
  for (int v : y) column.emplace(v, 0);
  for (auto& [label, col] : column) {
    col = static_cast<int>(m.classes.size());
    m.classes.push_back(label);
  }
  standardize_fit(x, m.mean, m.scale);
  const Eigen::Index d = x.cols();
  const auto k = static_cast<Eigen::Index>(m.classes.size());
  if (k == 1) {
    m.weights = Eigen::MatrixXd::Zero(d, 1);
    m.bias = Eigen::VectorXd::Zero(1);
    return m;
  }
  const Eigen::MatrixXd z = standardize_apply(x, m.mean, m.scale);
  Eigen::MatrixXd onehot = Eigen::MatrixXd::Zero(z.rows(), k);
  for (std::size_t i = 0; i < y.size(); ++i) onehot(static_cast<Eigen::Index>(i), column[y[i]]) = 1;

  Objective f = [&](const Eigen::VectorXd& p, Eigen::VectorXd& g) {
    Eigen::Map<const Eigen::MatrixXd> w(p.data(), d, k);
    Eigen::Map<const Eigen::VectorXd> b(p.data() + d * k, k);
    Eigen::MatrixXd s = z * w;
    s.rowwise() += b.transpose();
    double loss = 0.5 * opts.l2_lambda * w.squaredNorm();
    for (Eigen::Index i = 0; i < s.rows(); ++i) {
      const double mx = s.row(i).maxCoeff();
      Eigen::RowVectorXd e = (s.row(i).array() - mx).exp();
      const double sum = e.sum();
      loss += mx + std::log(sum) - s.row(i).dot(onehot.row(i));
      s.row(i) = e / sum;
    }
    s -= onehot;
    g.resize(p.size());
    Eigen::Map<Eigen::MatrixXd> gw(g.data(), d, k);
    gw = z.transpose() * s + opts.l2_lambda * w;
    g.tail(k) = s.colwise().sum().transpose();
    return loss;
  };
  LbfgsOptions lo;
  lo.max_iterations = opts.iterations;
  lo.grad_tol = opts.grad_tol;
  LbfgsResult res = lbfgs_minimize(f, Eigen::VectorXd::Zero(d * k + k), lo);
  m.weights = Eigen::Map<const Eigen::MatrixXd>(res.x.data(), d, k);
  m.bias = res.x.tail(k);
  m.iterations = res.iterations;
  m.grad_norm = res.grad_norm;
  return m;
}

std::vector<int> SoftmaxModel::predict(const Eigen::MatrixXd& x) const {
  Eigen::MatrixXd s = standardize_apply(x, mean, scale) * weights;
  s.rowwise() += bias.transpose();
  std::vector<int> out(static_cast<std::size_t>(s.rows()));
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    Eigen::Index best = 0;
    s.row(i).maxCoeff(&best);
    out[static_cast<std::size_t>(i)] = classes[static_cast<std::size_t>(best)];
  }
  return out;
}

double accuracy(const std::vector<int>& predicted, const std::vector<int>& truth) {
  if (predicted.size() != truth.size() || truth.empty()) {
    throw std::invalid_argument("accuracy: size mismatch or empty input");
  }
  std::size_t ok = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) ok += predicted[i] == truth[i];
  return static_cast<double>(ok) / static_cast<double>(truth.size());
}

}  // namespace leaklab
