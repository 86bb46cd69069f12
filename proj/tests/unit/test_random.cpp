/* Copyright 2026 The salmap Authors
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
 */

#include <algorithm>
#include <set>

#include "doctest.h"
#include "salmap/random.hpp"

using namespace salmap::rng;

TEST_CASE("philox4x32-10 known-answer vectors") {
  CHECK(philox4x32_10({0, 0, 0, 0}, {0, 0}) ==
        Counter{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(philox4x32_10({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
        Counter{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(philox4x32_10({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
        Counter{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("to_unit covers [0, 1)") {
  CHECK(to_unit(0, 0) == 0.0);
  CHECK(to_unit(0xffffffff, 0xffffffff) < 1.0);
  CHECK(to_unit(0xffffffff, 0xffffffff) > 0.999999);
}

TEST_CASE("counter draws are random access") {
  const CounterRng a(123), b(123), c(124);
  CHECK(a.uniform(5, 6, 7) == b.uniform(5, 6, 7));
  CHECK(a.uniform(5, 6, 7) != c.uniform(5, 6, 7));
  CHECK(a.uniform(5, 6, 7) != a.uniform(5, 7, 6));
}

TEST_CASE("derive_seed separates purposes") {
  CHECK(derive_seed(1, "a") == derive_seed(1, "a"));
  CHECK(derive_seed(1, "a") != derive_seed(1, "b"));
  CHECK(derive_seed(1, "a") != derive_seed(2, "a"));
}

TEST_CASE("stream is reproducible and roughly uniform") {
  Stream s(9, 0), t(9, 0), u(9, 1);
  std::vector<double> xs;
  for (int n = 0; n < 10000; ++n) {
    const double x = s.uniform();
    CHECK(x == t.uniform());
    xs.push_back(x);
  }
  CHECK(xs.front() != u.uniform());
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  CHECK(std::abs(mean - 0.5) < 0.02);

  std::set<std::uint64_t> seen;
  for (int n = 0; n < 500; ++n) {
    const auto k = s.below(7);
    CHECK(k < 7);
    seen.insert(k);
  }
  CHECK(seen.size() == 7);
  CHECK(s.below(1) == 0);
}
