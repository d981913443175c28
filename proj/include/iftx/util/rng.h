/*
 * Copyright 2026 The IFTX Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Seeded randomness with a fully specified algorithm.
//
// The standard distributions (uniform_int_distribution, normal_distribution,
// std::shuffle) are implementation-defined, so artifacts built on them would
// differ between standard libraries. Everything here is built directly on the
// mt19937_64 bit stream, which the standard pins down exactly.

#ifndef IFTX_UTIL_RNG_H_
#define IFTX_UTIL_RNG_H_

#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace iftx::util {

// splitmix64 finalizer; used to derive independent child seeds.
uint64_t MixSeed(uint64_t seed, uint64_t stream);

class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t NextU64() { return engine_(); }

  // Uniform in [0, n). n must be > 0.
  uint64_t UniformIndex(uint64_t n);

  // Uniform in [0, 1) with 53 random bits.
  double UniformDouble();

  // Standard normal via Box-Muller.
  double Normal();

  template <typename T>
  void Shuffle(std::span<T> items) {
    for (size_t i = items.size(); i > 1; --i) {
      const size_t j = static_cast<size_t>(UniformIndex(i));
      using std::swap;
      swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

}  // namespace iftx::util

#endif  // IFTX_UTIL_RNG_H_
