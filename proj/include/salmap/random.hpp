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

// Counter-based random numbers (Philox4x32-10, Salmon et al. SC 2011).
// Every draw is a pure function of (key, counter), so results never depend
// on evaluation order or thread count.

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string_view>

namespace salmap::rng {

using Counter = std::array<std::uint32_t, 4>;
using Key = std::array<std::uint32_t, 2>;

Counter philox4x32_10(Counter counter, Key key);

/// Uniform double in [0, 1) from 53 bits of two words.
inline double to_unit(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 21) ^ (lo >> 11);
  return static_cast<double>(bits & ((std::uint64_t{1} << 53) - 1)) * 0x1.0p-53;
}

/// Mixes a purpose tag into a seed so that independent consumers of one
/// user-facing seed never share a stream.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view purpose);

/// Random access: draws addressed by a three-word coordinate.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

  Counter block(std::uint32_t a, std::uint32_t b, std::uint32_t c) const {
    return philox4x32_10({a, b, c, 0}, key_);
  }
  /// Uniform [0, 1) at coordinate (a, b, c).
  double uniform(std::uint32_t a, std::uint32_t b, std::uint32_t c) const {
    const Counter r = block(a, b, c);
    return to_unit(r[0], r[1]);
  }

 private:
  Key key_;
};

/// Sequential stream over a counter-based generator; satisfies
/// UniformRandomBitGenerator.
class Stream {
 public:
  using result_type = std::uint32_t;

  Stream(std::uint64_t seed, std::uint64_t stream_id)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        stream_{static_cast<std::uint32_t>(stream_id), static_cast<std::uint32_t>(stream_id >> 32)} {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return 0xffffffffu; }

  result_type operator()();
  /// Uniform [0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n); n >= 1.
  std::uint64_t below(std::uint64_t n);

 private:
  Key key_;
  std::array<std::uint32_t, 2> stream_;
  std::uint64_t block_index_ = 0;
  Counter buffer_{};
  std::size_t used_ = 4;
};

}  // namespace salmap::rng
