// Copyright 2026 The exemplar-forge Authors.
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

// Portable deterministic randomness. The standard <random> distributions are
// implementation-defined, so every draw that ends up in an artifact goes
// through the helpers here instead.

#ifndef EXFORGE_RNG_H_
#define EXFORGE_RNG_H_

#include <cstdint>
#include <string_view>

namespace exforge {

// Finalizer from SplitMix64; a bijection on 64-bit words.
constexpr std::uint64_t Mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// 64-bit FNV-1a.
constexpr std::uint64_t HashString(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Combines a seed with a value into a new, well-scrambled seed.
constexpr std::uint64_t DeriveSeed(std::uint64_t seed, std::uint64_t value) {
  return Mix64(Mix64(seed) ^ value);
}

constexpr std::uint64_t DeriveSeed(std::uint64_t seed, std::string_view tag) {
  return DeriveSeed(seed, HashString(tag));
}

// Maps 64 random bits to a double in [0, 1) using the top 53 bits.
constexpr double ToUnit(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

// SplitMix64 stream.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t Next() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double Uniform() { return ToUnit(Next()); }

  // Uniform integer in [0, n) by rejection; n must be positive.
  std::uint64_t Below(std::uint64_t n) {
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      const std::uint64_t r = Next();
      if (r >= threshold) return r % n;
    }
  }

  // Standard normal via Box-Muller (one value per call).
  double Normal();

 private:
  std::uint64_t state_;
};

}  // namespace exforge

#endif  // EXFORGE_RNG_H_
