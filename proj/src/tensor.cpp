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

#include "salmap/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "salmap/error.hpp"

namespace salmap {

namespace {

void check_finite(std::span<const double> values, const char* what) {
  for (std::size_t n = 0; n < values.size(); ++n) {
    if (!std::isfinite(values[n])) {
      throw NumericError(std::string(what) + ": non-finite value at flat index " +
                         std::to_string(n));
    }
  }
}

void check_length(std::size_t expected, std::size_t actual, const char* what) {
  if (expected != actual) {
    throw ConfigError(std::string(what) + ": expected " + std::to_string(expected) +
                      " values, got " + std::to_string(actual));
  }
}

void check_dims(std::initializer_list<std::size_t> dims, const char* what) {
  for (std::size_t d : dims) {
    if (d == 0) throw ConfigError(std::string(what) + ": every dimension must be >= 1");
  }
}

}  // namespace

Volume::Volume(std::size_t channels, std::size_t height, std::size_t width)
    : Volume(channels, height, width, std::vector<double>(channels * height * width, 0.0)) {}

Volume::Volume(std::size_t channels, std::size_t height, std::size_t width,
               std::vector<double> values)
    : channels_(channels), height_(height), width_(width), values_(std::move(values)) {
  check_dims({channels, height, width}, "Volume");
  check_length(channels * height * width, values_.size(), "Volume");
  check_finite(values_, "Volume");
}

bool Volume::non_negative() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return v >= 0.0; });
}

RawGrid::RawGrid(std::size_t height, std::size_t width)
    : RawGrid(height, width, std::vector<double>(height * width, 0.0)) {}

RawGrid::RawGrid(std::size_t height, std::size_t width, std::vector<double> values)
    : height_(height), width_(width), values_(std::move(values)) {
  check_dims({height, width}, "RawGrid");
  check_length(height * width, values_.size(), "RawGrid");
  check_finite(values_, "RawGrid");
}

SaliencyMap::SaliencyMap(std::size_t height, std::size_t width)
    : SaliencyMap(height, width, std::vector<double>(height * width, 0.0)) {}

SaliencyMap::SaliencyMap(std::size_t height, std::size_t width, std::vector<double> values)
    : height_(height), width_(width), values_(std::move(values)) {
  check_dims({height, width}, "SaliencyMap");
  check_length(height * width, values_.size(), "SaliencyMap");
  check_finite(values_, "SaliencyMap");
  for (double v : values_) {
    if (v < 0.0 || v > 1.0) {
      throw ConfigError("SaliencyMap: value " + std::to_string(v) + " outside [0, 1]");
    }
  }
}

bool SaliencyMap::all_zero() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return v == 0.0; });
}

RawGrid channel_mean(const Volume& volume) {
  const std::size_t plane = volume.plane_size();
  const std::size_t k_count = volume.channels();
  std::vector<double> out(plane, 0.0);
  std::vector<double> column(k_count);
  for (std::size_t n = 0; n < plane; ++n) {
    for (std::size_t k = 0; k < k_count; ++k) column[k] = volume.channel(k)[n];
    // Summing in sorted order makes the result independent of channel order.
    std::sort(column.begin(), column.end());
    double sum = 0.0, carry = 0.0;
    for (double v : column) {
      const double t = sum + v;
      carry += std::abs(sum) >= std::abs(v) ? (sum - t) + v : (v - t) + sum;
      sum = t;
    }
    out[n] = (sum + carry) / static_cast<double>(k_count);
  }
  return RawGrid(volume.height(), volume.width(), std::move(out));
}

SaliencyMap minmax_normalize(const RawGrid& grid) {
  auto values = grid.values();
  auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  std::vector<double> out(values.size(), 0.0);
  if (hi > lo) {
    const double range = hi - lo;
    for (std::size_t n = 0; n < values.size(); ++n) {
      out[n] = (values[n] - lo) / range;
    }
    // Rounding can leave the extremes a hair off; pin them.
    out[static_cast<std::size_t>(lo_it - values.begin())] = 0.0;
    for (std::size_t n = 0; n < values.size(); ++n) {
      if (values[n] == hi) out[n] = 1.0;
      out[n] = std::clamp(out[n], 0.0, 1.0);
    }
  }
  return SaliencyMap(grid.height(), grid.width(), std::move(out));
}

SaliencyMap upsample_nearest(const SaliencyMap& map, std::size_t out_h, std::size_t out_w) {
  const std::size_t h = map.height();
  const std::size_t w = map.width();
  if (out_h < h || out_w < w) {
    throw ConfigError("upsample_nearest: target " + std::to_string(out_h) + "x" +
                      std::to_string(out_w) + " is smaller than source " + std::to_string(h) +
                      "x" + std::to_string(w));
  }
  std::vector<double> out(out_h * out_w);
  for (std::size_t i = 0; i < out_h; ++i) {
    const std::size_t si = i * h / out_h;
    for (std::size_t j = 0; j < out_w; ++j) {
      out[i * out_w + j] = map(si, j * w / out_w);
    }
  }
  return SaliencyMap(out_h, out_w, std::move(out));
}

RawGrid upsample_bilinear(const RawGrid& grid, std::size_t out_h, std::size_t out_w,
                          double shift_i, double shift_j) {
  const std::size_t h = grid.height();
  const std::size_t w = grid.width();
  if (out_h < h || out_w < w) {
    throw ConfigError("upsample_bilinear: target " + std::to_string(out_h) + "x" +
                      std::to_string(out_w) + " is smaller than source " + std::to_string(h) +
                      "x" + std::to_string(w));
  }
  if (!(shift_i >= 0.0 && shift_i < 1.0 && shift_j >= 0.0 && shift_j < 1.0)) {
    throw ConfigError("upsample_bilinear: shifts must lie in [0, 1)");
  }

  struct Tap {
    std::size_t lo;
    std::size_t hi;
    double t;
  };
  auto taps = [](std::size_t n_out, std::size_t n_in, double shift) {
    std::vector<Tap> result(n_out);
    const double scale = static_cast<double>(n_in) / static_cast<double>(n_out);
    const double last = static_cast<double>(n_in - 1);
    for (std::size_t o = 0; o < n_out; ++o) {
      double pos = (static_cast<double>(o) + 0.5) * scale - 0.5 + shift;
      pos = std::clamp(pos, 0.0, last);
      const auto lo = static_cast<std::size_t>(std::floor(pos));
      const std::size_t hi = std::min(lo + 1, n_in - 1);
      result[o] = {lo, hi, pos - static_cast<double>(lo)};
    }
    return result;
  };
  const auto rows = taps(out_h, h, shift_i);
  const auto cols = taps(out_w, w, shift_j);

  auto in = grid.values();
  const bool unit_range = std::all_of(in.begin(), in.end(),
                                      [](double v) { return v >= 0.0 && v <= 1.0; });
  std::vector<double> out(out_h * out_w);
  for (std::size_t i = 0; i < out_h; ++i) {
    const Tap& r = rows[i];
    for (std::size_t j = 0; j < out_w; ++j) {
      const Tap& c = cols[j];
      const double top = grid(r.lo, c.lo) + c.t * (grid(r.lo, c.hi) - grid(r.lo, c.lo));
      const double bottom = grid(r.hi, c.lo) + c.t * (grid(r.hi, c.hi) - grid(r.hi, c.lo));
      double v = top + r.t * (bottom - top);
      if (unit_range) v = std::clamp(v, 0.0, 1.0);
      out[i * out_w + j] = v;
    }
  }
  return RawGrid(out_h, out_w, std::move(out));
}

}  // namespace salmap
