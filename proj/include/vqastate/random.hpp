// Copyright 2026 The vqastate Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <string_view>

namespace vqastate {

// Counter-based random stream built on the SplitMix64 output function
// (Steele, Lea and Flood 2014). Draw i of the stream keyed by k is
// mix64(k + (i + 1) * 0x9E3779B97F4A7C15), so any draw can be computed
// independently of the others and results are identical on every platform.

inline constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// 64-bit FNV-1a, used to fold strings into stream keys.
constexpr std::uint64_t fnv1a64(std::string_view s) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  return h;
}

// Derives a child key; distinct (key, tag) pairs give unrelated streams.
constexpr std::uint64_t derive_key(std::uint64_t key, std::uint64_t tag) noexcept {
  return mix64(key ^ mix64(tag + kGoldenGamma));
}

class CounterStream {
 public:
  constexpr explicit CounterStream(std::uint64_t key) noexcept : key_(key) {}

  constexpr std::uint64_t bits(std::uint64_t counter) const noexcept {
    return mix64(key_ + (counter + 1) * kGoldenGamma);
  }

  // Uniform double in [0, 1) with 53 bits of resolution.
  constexpr double unit(std::uint64_t counter) const noexcept {
    return static_cast<double>(bits(counter) >> 11) * 0x1.0p-53;
  }

  // Uniform double in [-magnitude, magnitude].
  constexpr double symmetric(std::uint64_t counter,
                             double magnitude) const noexcept {
    return magnitude * (2.0 * unit(counter) - 1.0);
  }

  constexpr std::uint64_t key() const noexcept { return key_; }

 private:
  std::uint64_t key_;
};

}  // namespace vqastate
