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

#include "leaklab/mitigation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace leaklab {
namespace {

double lower_tail(double log_alpha, double alpha, std::int64_t a) {
  return std::exp(static_cast<double>(a) * log_alpha - std::log1p(alpha));
}

}  // namespace

void check_dp_params(double eps, double delta) {
  if (!(eps > 0.0) || !std::isfinite(eps)) throw std::invalid_argument("eps must be positive");
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("delta must lie in (0, 1)");
}

std::int64_t dummy_shift(double eps, double delta) {
  check_dp_params(eps, delta);
  const double alpha = std::exp(-eps);
  const double log_alpha = -eps;
  double guess = std::ceil(std::log(delta * (1.0 + alpha)) / log_alpha);
  std::int64_t a = std::max<std::int64_t>(0, static_cast<std::int64_t>(guess));
  // The closed form can land one off after rounding; settle it exactly.
  while (a > 0 && lower_tail(log_alpha, alpha, a - 1) <= delta) --a;
  while (lower_tail(log_alpha, alpha, a) > delta) ++a;
  return a;
}

DummySampler::DummySampler(double eps, double delta)
    : eps_(eps), delta_(delta), alpha_(std::exp(-eps)), shift_(dummy_shift(eps, delta)) {}

std::int64_t DummySampler::sample(Rng& rng) const {
  const std::int64_t z = rng.geometric(alpha_) - rng.geometric(alpha_);
  return std::max<std::int64_t>(0, shift_ + z);
}

double DummySampler::pmf(std::int64_t m) const {
  if (m < 0) return 0.0;
  if (m == 0) return lower_tail(-eps_, alpha_, shift_);
  const double c = (1.0 - alpha_) / (1.0 + alpha_);
  return c * std::exp(-eps_ * static_cast<double>(std::llabs(m - shift_)));
}

std::int64_t DummySampler::support_end() const {
  return shift_ + static_cast<std::int64_t>(std::ceil(50.0 / eps_));
}

std::int64_t sample_dummy_count(double eps, double delta, Rng& rng) {
  return DummySampler(eps, delta).sample(rng);
}

bool verify_dummy_dp(const DummySampler& sampler, double eps, double delta) {
  if (eps < 0.0 || delta < 0.0) return false;
  const std::int64_t end = sampler.support_end() + 1;
  const std::size_t n = static_cast<std::size_t>(end) + 1;
  std::vector<double> p(n), q(n);
  for (std::size_t x = 0; x < n; ++x) {
    p[x] = sampler.pmf(static_cast<std::int64_t>(x));
    q[x] = sampler.pmf(static_cast<std::int64_t>(x) - 1);
  }
  const double e = std::exp(eps);
  auto holds = [&](double a, double b) {
    return a <= e * b + delta + 1e-12 * std::max(1.0, a);
  };
  double p_low = 0, q_low = 0;
  for (std::size_t t = 0; t < n; ++t) {
    p_low += p[t];
    q_low += q[t];
    if (!holds(p_low, q_low) || !holds(q_low, p_low)) return false;
  }
  double p_up = 0, q_up = 0;
  for (std::size_t t = n; t-- > 0;) {
    p_up += p[t];
    q_up += q[t];
    if (!holds(p_up, q_up) || !holds(q_up, p_up)) return false;
  }
  return true;
}

bool verify_dummy_dp(double eps, double delta) {
  return verify_dummy_dp(DummySampler(eps, delta), eps, delta);
}

double dummy_hockey_stick(const DummySampler& sampler, double eps) {
  const std::int64_t end = sampler.support_end() + 1;
  const double e = std::exp(eps);
  double pq = 0, qp = 0;
  for (std::int64_t x = 0; x <= end; ++x) {
    const double p = sampler.pmf(x);
    const double q = sampler.pmf(x - 1);
    pq += std::max(0.0, p - e * q);
    qp += std::max(0.0, q - e * p);
  }
  return std::max(pq, qp);
}

double stability_threshold(double eps, double delta) {
  check_dp_params(eps, delta);
  return 1.0 + std::log(1.0 / (2.0 * delta)) / eps;
}

std::map<std::string, double> noise_and_threshold(const std::map<std::string, std::int64_t>& counts,
                                                  double eps, double delta, Rng& rng) {
  const double t = stability_threshold(eps, delta);
  std::map<std::string, double> out;
  for (const auto& [key, count] : counts) {
    const double noisy = static_cast<double>(count) + rng.laplace(1.0 / eps);
    if (noisy >= t) out.emplace(key, noisy);
  }
  return out;
}

}  // namespace leaklab
