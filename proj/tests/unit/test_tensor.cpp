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
#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "salmap/error.hpp"
#include "salmap/tensor.hpp"

using namespace salmap;

namespace {

std::vector<double> vec(std::span<const double> s) { return {s.begin(), s.end()}; }

Volume k2_fixture() {
  return Volume(2, 2, 2, {0, 2, 4, 6, 2, 2, 4, 2});
}

Volume random_volume(std::size_t k, std::size_t h, std::size_t w, unsigned seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  std::vector<double> v(k * h * w);
  for (double& x : v) x = u(gen);
  return Volume(k, h, w, std::move(v));
}

}  // namespace

TEST_CASE("containers reject bad shapes and non-finite values") {
  CHECK_THROWS_AS(Volume(0, 2, 2), ConfigError);
  CHECK_THROWS_AS(Volume(1, 2, 2, {1, 2, 3}), ConfigError);
  CHECK_THROWS_AS(Volume(1, 1, 2, {1, NAN}), NumericError);
  CHECK_THROWS_AS(RawGrid(1, 2, {INFINITY, 0}), NumericError);
  CHECK_THROWS_AS(SaliencyMap(1, 2, {0.5, 1.5}), ConfigError);
  CHECK_THROWS_AS(SaliencyMap(1, 2, {-0.1, 0.5}), ConfigError);
  CHECK(Volume(1, 1, 2, {0, 1}).non_negative());
  CHECK_FALSE(Volume(1, 1, 2, {0, -1}).non_negative());
}

TEST_CASE("channel_mean") {
  SUBCASE("two channels") {
    const RawGrid g = channel_mean(k2_fixture());
    CHECK(vec(g.values()) == std::vector<double>{1, 2, 4, 4});
  }
  SUBCASE("single channel is the identity") {
    const Volume v = random_volume(1, 3, 5, 7);
    CHECK(vec(channel_mean(v).values()) == vec(v.values()));
  }
  SUBCASE("constant volume") {
    const Volume v(2048, 3, 3, std::vector<double>(2048 * 9, 0.375));
    const RawGrid g = channel_mean(v);
    for (double x : g.values()) CHECK(x == 0.375);
  }
  SUBCASE("permutation invariance is exact") {
    const Volume v = random_volume(16, 4, 4, 3);
    std::vector<std::size_t> perm(16);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), std::mt19937_64(11));
    std::vector<double> p;
    for (std::size_t k : perm) p.insert(p.end(), v.channel(k).begin(), v.channel(k).end());
    const RawGrid a = channel_mean(v);
    const RawGrid b = channel_mean(Volume(16, 4, 4, p));
    CHECK(vec(a.values()) == vec(b.values()));
  }
  SUBCASE("mean of a repeated non-dyadic value is that value") {
    const Volume v(2048, 1, 2, std::vector<double>(4096, 0.1));
    const RawGrid g = channel_mean(v);
    for (double x : g.values()) CHECK(x == 0.1);
  }
}

TEST_CASE("minmax_normalize") {
  SUBCASE("direct formula") {
    const SaliencyMap s = minmax_normalize(RawGrid(2, 2, {1, 2, 4, 4}));
    CHECK(s(0, 0) == 0.0);
    CHECK(std::abs(s(0, 1) - 1.0 / 3.0) <= 1e-12);
    CHECK(s(1, 0) == 1.0);
    CHECK(s(1, 1) == 1.0);
  }
  SUBCASE("constant grid maps to zeros") {
    const SaliencyMap s = minmax_normalize(RawGrid(2, 2, {5, 5, 5, 5}));
    CHECK(s.all_zero());
  }
  SUBCASE("negative entries") {
    const SaliencyMap s = minmax_normalize(RawGrid(1, 2, {-1, 1}));
    CHECK(vec(s.values()) == std::vector<double>{0, 1});
  }
  SUBCASE("range and attained extremes on random grids") {
    std::mt19937_64 gen(5);
    std::normal_distribution<double> n(0.0, 1e3);
    for (int t = 0; t < 200; ++t) {
      std::vector<double> v(37);
      for (double& x : v) x = n(gen);
      const SaliencyMap s = minmax_normalize(RawGrid(1, 37, v));
      const auto [lo, hi] = std::minmax_element(s.values().begin(), s.values().end());
      CHECK(*lo == 0.0);
      CHECK(*hi == 1.0);
    }
  }
}

TEST_CASE("positive scale invariance of normalize after channel_mean") {
  const Volume v = random_volume(8, 5, 5, 9);
  const SaliencyMap ref = minmax_normalize(channel_mean(v));
  for (double c : {1e-3, 0.5, 7.0, 1e4}) {
    std::vector<double> scaled = vec(v.values());
    for (double& x : scaled) x *= c;
    const SaliencyMap s = minmax_normalize(channel_mean(Volume(8, 5, 5, scaled)));
    for (std::size_t n = 0; n < s.size(); ++n) CHECK(std::abs(s.values()[n] - ref.values()[n]) <= 1e-6);
  }
}

TEST_CASE("upsample_nearest") {
  SUBCASE("integer scale replicates blocks") {
    const SaliencyMap s(2, 2, {0, 1, 0.5, 0.25});
    const SaliencyMap u = upsample_nearest(s, 4, 4);
    for (std::size_t i = 0; i < 4; ++i) {
      for (std::size_t j = 0; j < 4; ++j) CHECK(u(i, j) == s(i / 2, j / 2));
    }
  }
  SUBCASE("1x1 to 3x3") {
    const SaliencyMap u = upsample_nearest(SaliencyMap(1, 1, {1}), 3, 3);
    for (double x : u.values()) CHECK(x == 1.0);
  }
  SUBCASE("7x7 to 224x224 index formula") {
    std::vector<double> v(49);
    for (std::size_t n = 0; n < 49; ++n) v[n] = static_cast<double>(n) / 48.0;
    const SaliencyMap s(7, 7, v);
    const SaliencyMap u = upsample_nearest(s, 224, 224);
    CHECK(u(100, 100) == s(3, 3));
    for (std::size_t i = 0; i < 224; i += 13) {
      for (std::size_t j = 0; j < 224; j += 7) CHECK(u(i, j) == s(i * 7 / 224, j * 7 / 224));
    }
  }
  SUBCASE("same size is the identity") {
    const SaliencyMap s = minmax_normalize(channel_mean(random_volume(3, 6, 9, 2)));
    CHECK(vec(upsample_nearest(s, 6, 9).values()) == vec(s.values()));
  }
  SUBCASE("downscaling is rejected") {
    CHECK_THROWS_AS(upsample_nearest(SaliencyMap(4, 4), 2, 4), ConfigError);
  }
}

TEST_CASE("upsample_bilinear") {
  SUBCASE("constant grid stays constant for any shift") {
    const RawGrid g(3, 3, std::vector<double>(9, 0.4));
    for (double s : {0.0, 0.3, 0.99}) {
      const RawGrid u = upsample_bilinear(g, 17, 11, s, 1.0 - s - 0.005);
      for (double x : u.values()) {
        CHECK(std::abs(x - 0.4) <= 1e-15);
      }
    }
  }
  SUBCASE("monotone column") {
    const RawGrid u = upsample_bilinear(RawGrid(2, 1, {0, 1}), 4, 1, 0.0, 0.0);
    for (std::size_t i = 1; i < 4; ++i) CHECK(u(i, 0) >= u(i - 1, 0));
    CHECK(u(0, 0) == 0.0);
    CHECK(u(3, 0) == 1.0);
  }
  SUBCASE("interior sample matches a hand two-axis lerp") {
    const RawGrid g(3, 3, {0.1, 0.7, 0.2, 0.9, 0.3, 0.5, 0.0, 0.8, 0.6});
    const std::size_t out = 12;
    const double si = 0.25, sj = 0.6;
    const RawGrid u = upsample_bilinear(g, out, out, si, sj);
    for (std::size_t i : {4u, 5u, 6u}) {
      for (std::size_t j : {3u, 5u}) {
        const double pi = (i + 0.5) * 3.0 / out - 0.5 + si;
        const double pj = (j + 0.5) * 3.0 / out - 0.5 + sj;
        const int i0 = static_cast<int>(std::floor(pi));
        const int j0 = static_cast<int>(std::floor(pj));
        REQUIRE(i0 >= 0);
        REQUIRE(i0 + 1 <= 2);
        REQUIRE(j0 >= 0);
        REQUIRE(j0 + 1 <= 2);
        const double ti = pi - i0, tj = pj - j0;
        const double a = g(i0, j0), b = g(i0, j0 + 1), c = g(i0 + 1, j0), d = g(i0 + 1, j0 + 1);
        const double expect = (1 - ti) * ((1 - tj) * a + tj * b) + ti * ((1 - tj) * c + tj * d);
        CHECK(std::abs(u(i, j) - expect) <= 1e-12);
      }
    }
  }
  SUBCASE("unit-range input stays in [0, 1]") {
    std::mt19937_64 gen(1);
    std::bernoulli_distribution b(0.5);
    std::vector<double> v(49);
    for (double& x : v) x = b(gen) ? 1.0 : 0.0;
    const RawGrid u = upsample_bilinear(RawGrid(7, 7, v), 64, 64, 0.7, 0.2);
    for (double x : u.values()) {
      CHECK(x >= 0.0);
      CHECK(x <= 1.0);
    }
  }
  SUBCASE("rejects downscaling and bad shifts") {
    CHECK_THROWS_AS(upsample_bilinear(RawGrid(4, 4), 3, 4, 0, 0), ConfigError);
    CHECK_THROWS_AS(upsample_bilinear(RawGrid(2, 2), 4, 4, 1.0, 0), ConfigError);
    CHECK_THROWS_AS(upsample_bilinear(RawGrid(2, 2), 4, 4, 0, -0.1), ConfigError);
  }
}
