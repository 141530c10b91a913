/**************************************************************************
* m2e
*
* Copyright m2e Authors. All Rights Reserved.
*
* Licensed under the Apache License, Version 2.0 (the "License");
* you may not use this file except in compliance with the License.
* You may obtain a copy of the License at
*
*     http://www.apache.org/licenses/LICENSE-2.0
*
* Unless required by applicable law or agreed to in writing, software
* distributed under the License is distributed on an "AS IS" BASIS,
* WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
* See the License for the specific language governing permissions and
* limitations under the License.
**************************************************************************/

#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <stdexcept>

namespace m2e {

// splitmix64 finalizer; full-period mixing of a 64-bit word.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Deterministic counter-based generator (splitmix64 core). Streams derived
// from (seed, path...) do not depend on how sibling streams are consumed, so
// parallel scheduling cannot change results. Not cryptographic.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(mix64(seed ^ 0xA02E1B5D43F292C7ULL)) {}

  // Child stream addressed by an integer path, e.g. derive(seed, {level, trial}).
  static Rng derive(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
    std::uint64_t h = mix64(seed ^ 0xA02E1B5D43F292C7ULL);
    for (std::uint64_t p : path) h = mix64(h ^ mix64(p));
    Rng r(0);
    r.state_ = h;
    return r;
  }

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Unbiased uniform integer in [0, n); n > 0.
  std::uint32_t below(std::uint32_t n) {
    if (n == 0) throw std::invalid_argument("Rng::below: empty range");
    // Lemire's multiply-shift with rejection.
    std::uint64_t x = next_u64() >> 32;
    __uint128_t m = static_cast<__uint128_t>(x) * n;
    auto lo = static_cast<std::uint64_t>(m & 0xFFFFFFFFULL);
    if (lo < n) {
      std::uint64_t threshold = (0x100000000ULL - n) % n;
      while (lo < threshold) {
        x = next_u64() >> 32;
        m = static_cast<__uint128_t>(x) * n;
        lo = static_cast<std::uint64_t>(m & 0xFFFFFFFFULL);
      }
    }
    return static_cast<std::uint32_t>(m >> 32);
  }

  // Zero-mean Gaussian via Box-Muller; consumes exactly two uniforms.
  double gaussian(double sigma = 1.0) {
    double u1 = 1.0 - uniform();  // (0, 1]
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    return sigma * r * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::uint64_t state_;
};

}  // namespace m2e
