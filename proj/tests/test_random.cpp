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

#include <doctest.h>

#include <set>

#include "vqastate/random.hpp"

using namespace vqastate;

// Reference outputs: SplitMix64 seeded with 0 (first draw), and FNV-1a 64 of
// "" and "a" from the published test vectors.
TEST_CASE("known vectors") {
  CHECK(CounterStream(0).bits(0) == 0xE220A8397B1DCDAFULL);
  CHECK(CounterStream(0).bits(1) == 0x6E789E6AA1B965F4ULL);
  CHECK(fnv1a64("") == 0xCBF29CE484222325ULL);
  CHECK(fnv1a64("a") == 0xAF63DC4C8601EC8CULL);
}

TEST_CASE("unit and symmetric ranges") {
  const CounterStream s(42);
  for (std::uint64_t i = 0; i < 10000; ++i) {
    const double u = s.unit(i);
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    const double v = s.symmetric(i, 0.1);
    CHECK(v >= -0.1);
    CHECK(v <= 0.1);
  }
}

TEST_CASE("derived keys are distinct") {
  std::set<std::uint64_t> keys;
  for (std::uint64_t k = 0; k < 8; ++k)
    for (std::uint64_t t = 0; t < 64; ++t) keys.insert(derive_key(k, t));
  CHECK(keys.size() == 8 * 64);
}
