// Copyright 2026 The lrdwm Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef LRDWM_RNG_H_
#define LRDWM_RNG_H_

#include <cstdint>
#include <random>
#include <span>
#include <string_view>

namespace lrdwm {

inline constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

// SplitMix64 finalizer. Bit-exact definition lives in docs/hashing.md.
constexpr std::uint64_t Mix64(std::uint64_t x) {
  x ^= x >> 30;
  x *= 0xBF58476D1CE4E5B9ULL;
  x ^= x >> 27;
  x *= 0x94D049BB133111EBULL;
  x ^= x >> 31;
  return x;
}

// SplitMix64 stream. Used where outputs must be reproducible across
// languages (green-list permutations).
class SplitMix64 {
 public:
  explicit constexpr SplitMix64(std::uint64_t seed) : state_(seed) {}

  constexpr std::uint64_t Next() {
    state_ += kGoldenGamma;
    return Mix64(state_);
  }

  // floor(Next() * n / 2^64). Bias is at most n / 2^64.
  std::uint64_t Below(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(Next()) * n) >> 64);
  }

 private:
  std::uint64_t state_;
};

// General-purpose simulation RNG (schedules, sampling, attacks, corpora).
// Draws are built from raw mt19937_64 output so that sequences do not depend
// on the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t Next() { return engine_(); }

  // Uniform in [0, n), unbiased (Lemire's multiply-and-reject).
  std::uint64_t Below(std::uint64_t n);

  // Uniform double in [0, 1) with 53 random bits.
  double Uniform() {
    return static_cast<double>(Next() >> 11) * 0x1.0p-53;
  }

  template <typename T>
  void Shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = Below(i);
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

// Child seed for a named sub-stream: Mix64(parent ^ Mix64(fnv1a(label) +
// index * golden)). Every random quantity in an experiment is derived from
// one root seed through this function.
std::uint64_t DeriveSeed(std::uint64_t parent, std::string_view label,
                         std::uint64_t index = 0);

// 64-bit FNV-1a over raw bytes.
std::uint64_t Fnv1a64(std::span<const unsigned char> bytes,
                      std::uint64_t basis = 0xCBF29CE484222325ULL);
std::uint64_t Fnv1a64(std::string_view text);

}  // namespace lrdwm

#endif  // LRDWM_RNG_H_
