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

#ifndef LEAKLAB_RNG_HPP_
#define LEAKLAB_RNG_HPP_

#include <cstdint>
#include <random>
#include <string_view>

namespace leaklab {

// Seeded generator with platform-stable derived draws. std::mt19937_64 is
// fully specified by the standard; the distributions in <random> are not, so
// the conversions below are done by hand.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform in (0, 1).
  double uniform_open() {
    double u;
    do {
      u = uniform01();
    } while (u == 0.0);
    return u;
  }

  // Uniform integer in [0, n). Rejection sampling, no modulo bias.
  std::uint64_t below(std::uint64_t n);

  bool bernoulli(double p) { return uniform01() < p; }

  // Laplace(0, scale) by inverse CDF.
  double laplace(double scale);

  // Geometric on {0, 1, 2, ...} with Pr[k] = (1 - alpha) alpha^k.
  std::int64_t geometric(double alpha);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

// Stable per-run seed derived from a base seed, an index and a purpose tag.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index, std::string_view tag = {});

// 64-bit FNV-1a; used wherever a stable, platform-independent hash is needed.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL);

}  // namespace leaklab

#endif  // LEAKLAB_RNG_HPP_
