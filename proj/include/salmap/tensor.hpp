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

#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace salmap {

/// A K x H x W block of real values, channel-major then row-major
/// (index = k*H*W + i*W + j). Used for activation volumes, gradient
/// volumes and multi-channel images. All values are finite.
class Volume {
 public:
  /// Zero-filled volume.
  Volume(std::size_t channels, std::size_t height, std::size_t width);
  /// Takes ownership of `values`; throws ConfigError on a size mismatch,
  /// NumericError on NaN/Inf.
  Volume(std::size_t channels, std::size_t height, std::size_t width,
         std::vector<double> values);

  std::size_t channels() const { return channels_; }
  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  std::size_t plane_size() const { return height_ * width_; }
  std::size_t size() const { return values_.size(); }

  double operator()(std::size_t k, std::size_t i, std::size_t j) const {
    return values_[(k * height_ + i) * width_ + j];
  }
  std::span<const double> values() const { return values_; }
  std::span<const double> channel(std::size_t k) const {
    return std::span<const double>(values_).subspan(k * plane_size(), plane_size());
  }

  /// True when every value is >= 0 (expected after a ReLU).
  bool non_negative() const;

  bool operator==(const Volume&) const = default;

 private:
  std::size_t channels_;
  std::size_t height_;
  std::size_t width_;
  std::vector<double> values_;
};

using ActivationVolume = Volume;

/// Unbounded H x W real grid, row-major. Finite values only.
class RawGrid {
 public:
  RawGrid(std::size_t height, std::size_t width);
  RawGrid(std::size_t height, std::size_t width, std::vector<double> values);

  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  std::size_t size() const { return values_.size(); }
  double operator()(std::size_t i, std::size_t j) const { return values_[i * width_ + j]; }
  std::span<const double> values() const { return values_; }

  bool operator==(const RawGrid&) const = default;

 private:
  std::size_t height_;
  std::size_t width_;
  std::vector<double> values_;
};

/// H x W attribution grid with every value in [0, 1].
///
/// Maps produced by minmax_normalize additionally attain 0 and 1 unless
/// identically zero; maps read back from disk are only range-checked.
class SaliencyMap {
 public:
  SaliencyMap(std::size_t height, std::size_t width);
  /// Throws ConfigError if any value lies outside [0, 1].
  SaliencyMap(std::size_t height, std::size_t width, std::vector<double> values);

  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  std::size_t size() const { return values_.size(); }
  double operator()(std::size_t i, std::size_t j) const { return values_[i * width_ + j]; }
  std::span<const double> values() const { return values_; }

  bool all_zero() const;
  RawGrid as_raw() const { return RawGrid(height_, width_, values_); }

  bool operator==(const SaliencyMap&) const = default;

 private:
  std::size_t height_;
  std::size_t width_;
  std::vector<double> values_;
};

/// Selects which convolutional layer to read activations from. With
/// post_activation the layer's block output (after ReLU and pooling) is
/// used, otherwise the raw convolution output.
struct CaptureConfig {
  std::size_t layer_index = 0;
  bool post_activation = true;
};

/// Per-position mean over channels.
RawGrid channel_mean(const Volume& volume);

/// (g - min) / (max - min); a constant grid maps to all zeros.
SaliencyMap minmax_normalize(const RawGrid& grid);

/// out[i,j] = map[floor(i*h/out_h), floor(j*w/out_w)]. Throws ConfigError
/// when asked to downscale.
SaliencyMap upsample_nearest(const SaliencyMap& map, std::size_t out_h, std::size_t out_w);

/// Bilinear interpolation with low-res cells as unit cells sampled at
/// their centres and edge clamping. The sampling lattice is translated by
/// (shift_i, shift_j) low-res cells, each in [0, 1). Inputs in [0, 1]
/// produce outputs in [0, 1].
RawGrid upsample_bilinear(const RawGrid& grid, std::size_t out_h, std::size_t out_w,
                          double shift_i, double shift_j);

}  // namespace salmap
