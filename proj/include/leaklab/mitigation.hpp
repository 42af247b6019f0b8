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

#ifndef LEAKLAB_MITIGATION_HPP_
#define LEAKLAB_MITIGATION_HPP_

#include <cstdint>
#include <map>
#include <string>

#include "leaklab/rng.hpp"

namespace leaklab {

// Smallest A >= 0 with alpha^A / (1 + alpha) <= delta, alpha = e^-eps: the
// mass a two-sided geometric puts at or below -A.
std::int64_t dummy_shift(double eps, double delta);

// Number of dummies m = max(0, A + Z), Z two-sided geometric with
// Pr[Z = z] proportional to alpha^|z|.
class DummySampler {
 public:
  DummySampler(double eps, double delta);

  std::int64_t sample(Rng& rng) const;
  double pmf(std::int64_t m) const;
  // Upper end of the enumerated support, A + ceil(50 / eps).
  std::int64_t support_end() const;

  double eps() const { return eps_; }
  double delta() const { return delta_; }
  double alpha() const { return alpha_; }
  std::int64_t shift() const { return shift_; }

 private:
  double eps_;
  double delta_;
  double alpha_;
  std::int64_t shift_;
};

std::int64_t sample_dummy_count(double eps, double delta, Rng& rng);

// Brute-force check that loop lengths k + m and k + 1 + m are (eps, delta)
// indistinguishable: every lower and upper threshold event, both directions.
bool verify_dummy_dp(const DummySampler& sampler, double eps, double delta);
bool verify_dummy_dp(double eps, double delta);

// Smallest delta for which the pair is (eps, delta)-indistinguishable over
// all events (hockey-stick divergence, maximized over both directions).
double dummy_hockey_stick(const DummySampler& sampler, double eps);

// T = 1 + ln(1 / (2 delta)) / eps.
double stability_threshold(double eps, double delta);

// Adds Laplace(1/eps) to every count and keeps the entries at or above T.
std::map<std::string, double> noise_and_threshold(const std::map<std::string, std::int64_t>& counts,
                                                  double eps, double delta, Rng& rng);

// Throws std::invalid_argument unless eps > 0 and 0 < delta < 1.
void check_dp_params(double eps, double delta);

}  // namespace leaklab

#endif  // LEAKLAB_MITIGATION_HPP_
