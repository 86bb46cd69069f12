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
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "salmap/tensor.hpp"

namespace salmap {

enum class Method { LaFAM, GradCAM, RELAX };

std::string to_string(Method method);
/// Accepts "lafam", "gradcam" and "relax"; throws ConfigError otherwise.
Method parse_method(const std::string& name);

enum class MaskUpsampling { Bilinear, Nearest };

struct MaskConfig {
  std::size_t count = 2048;
  std::size_t cells_h = 7;
  std::size_t cells_w = 7;
  double p = 0.5;
  std::uint64_t seed = 0;
  MaskUpsampling upsampling = MaskUpsampling::Bilinear;

  bool operator==(const MaskConfig&) const = default;
};

/// N random occlusion masks. Low-resolution grids are stored; the
/// full-resolution masks are a pure function of (grid, shift) and are
/// rebuilt on demand, which keeps large batches cheap to hold.
class OcclusionMaskBatch {
 public:
  OcclusionMaskBatch(MaskConfig config, std::size_t out_h, std::size_t out_w,
                     std::vector<std::vector<std::uint8_t>> low_res,
                     std::vector<std::pair<double, double>> shifts);

  const MaskConfig& config() const { return config_; }
  std::size_t count() const { return low_res_.size(); }
  std::size_t height() const { return out_h_; }
  std::size_t width() const { return out_w_; }

  /// Cell values in {0, 1}, row-major cells_h x cells_w.
  std::span<const std::uint8_t> low_res(std::size_t index) const { return low_res_[index]; }
  std::pair<double, double> shift(std::size_t index) const { return shifts_[index]; }
  /// Continuous mask in [0, 1] at output resolution.
  RawGrid full_res(std::size_t index) const;

  bool operator==(const OcclusionMaskBatch&) const = default;

 private:
  MaskConfig config_;
  std::size_t out_h_;
  std::size_t out_w_;
  std::vector<std::vector<std::uint8_t>> low_res_;
  std::vector<std::pair<double, double>> shifts_;
};

/// Bernoulli(p) cells drawn from a counter-based stream keyed by
/// (seed, mask index, cell index), plus one uniform sub-cell shift per
/// mask. Throws ConfigError unless 0 < p < 1 and count >= 1.
OcclusionMaskBatch sample_masks(const MaskConfig& config, std::size_t out_h, std::size_t out_w);

struct Provenance {
  std::size_t layer_index = 0;
  std::optional<std::size_t> class_index;        // gradcam
  std::optional<MaskConfig> masks;               // relax
};

struct AttributionResult {
  Method method = Method::LaFAM;
  SaliencyMap saliency;  // at input resolution
  RawGrid raw;           // before normalization, at capture (or input, for relax) resolution
  Provenance provenance;
};

/// Label- and gradient-free: normalize(channel mean) upsampled by nearest
/// neighbour to out_h x out_w.
AttributionResult lafam(const Volume& volume, std::size_t out_h, std::size_t out_w,
                        std::size_t layer_index = 0);

/// Grad-CAM: channel weights are spatial means of `grads`, the map is
/// ReLU(sum_k alpha_k A_k), then normalize and nearest upsample. Throws
/// ConfigError when the shapes disagree.
AttributionResult gradcam(const Volume& volume, const Volume& grads, std::size_t out_h,
                          std::size_t out_w, std::size_t layer_index = 0,
                          std::optional<std::size_t> class_index = std::nullopt);

/// u.v / (|u||v|), or 0 when either norm is below 1e-12.
double cosine_similarity(std::span<const double> u, std::span<const double> v);

/// Maps an input image to an embedding vector.
using Encoder = std::function<std::vector<double>(const Volume&)>;

struct RelaxConfig {
  double fill_value = 0.0;       // value of occluded pixels
  bool clamp_similarity = true;  // clamp cosine similarities at 0 from below
  std::size_t threads = 1;
};

/// RELAX: weights each mask by the cosine similarity between the
/// embeddings of the masked and the unmasked image. raw =
/// (1 / (N p)) sum_m s_m mask_m, reduced in fixed blocks with a pairwise
/// sum so the result does not depend on the thread count.
AttributionResult relax(const Volume& image, const Encoder& encoder,
                        const OcclusionMaskBatch& masks, const RelaxConfig& config = {});

/// Writes `<stem>.npy` (saliency, float64) and `<stem>.json` (provenance).
void save_result(const std::filesystem::path& stem, const AttributionResult& result);

}  // namespace salmap
