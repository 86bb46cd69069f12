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

#include "salmap/attribution.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <fstream>

#include "json.hpp"
#include "salmap/error.hpp"
#include "salmap/npy.hpp"
#include "salmap/parallel.hpp"
#include "salmap/random.hpp"

namespace salmap {

namespace {

// Masks per partial sum in RELAX; fixed so the reduction tree is too.
constexpr std::size_t kRelaxBlock = 64;

// Counter slot reserved for the per-mask shift draw.
constexpr std::uint32_t kShiftSlot = 0xffffffffu;

std::string to_string(MaskUpsampling u) { return u == MaskUpsampling::Bilinear ? "bilinear" : "nearest"; }

}  // namespace

std::string to_string(Method method) {
  switch (method) {
    case Method::LaFAM:
      return "lafam";
    case Method::GradCAM:
      return "gradcam";
    case Method::RELAX:
      return "relax";
  }
  return "unknown";
}

Method parse_method(const std::string& name) {
  if (name == "lafam") return Method::LaFAM;
  if (name == "gradcam") return Method::GradCAM;
  if (name == "relax") return Method::RELAX;
  throw ConfigError("unknown method '" + name + "' (expected lafam, gradcam or relax)");
}

OcclusionMaskBatch::OcclusionMaskBatch(MaskConfig config, std::size_t out_h, std::size_t out_w,
                                       std::vector<std::vector<std::uint8_t>> low_res,
                                       std::vector<std::pair<double, double>> shifts)
    : config_(config), out_h_(out_h), out_w_(out_w), low_res_(std::move(low_res)), shifts_(std::move(shifts)) {
  if (low_res_.empty() || low_res_.size() != shifts_.size()) {
    throw ConfigError("OcclusionMaskBatch: need at least one mask and one shift per mask");
  }
  for (const auto& grid : low_res_) {
    if (grid.size() != config_.cells_h * config_.cells_w) {
      throw ConfigError("OcclusionMaskBatch: low-res grid has the wrong size");
    }
  }
}

RawGrid OcclusionMaskBatch::full_res(std::size_t index) const {
  const auto& cells = low_res_.at(index);
  if (config_.upsampling == MaskUpsampling::Nearest) {
    std::vector<double> out(out_h_ * out_w_);
    for (std::size_t i = 0; i < out_h_; ++i) {
      const std::size_t ci = i * config_.cells_h / out_h_;
      for (std::size_t j = 0; j < out_w_; ++j) {
        out[i * out_w_ + j] = cells[ci * config_.cells_w + j * config_.cells_w / out_w_];
      }
    }
    return RawGrid(out_h_, out_w_, std::move(out));
  }
  RawGrid grid(config_.cells_h, config_.cells_w, std::vector<double>(cells.begin(), cells.end()));
  return upsample_bilinear(grid, out_h_, out_w_, shifts_[index].first, shifts_[index].second);
}

OcclusionMaskBatch sample_masks(const MaskConfig& config, std::size_t out_h, std::size_t out_w) {
  if (!(config.p > 0.0 && config.p < 1.0)) throw ConfigError("sample_masks: p must lie in (0, 1)");
  if (config.count == 0) throw ConfigError("sample_masks: need at least one mask");
  if (config.cells_h == 0 || config.cells_w == 0) throw ConfigError("sample_masks: empty cell grid");
  if (out_h < config.cells_h || out_w < config.cells_w) {
    throw ConfigError("sample_masks: output smaller than the cell grid");
  }
  const rng::CounterRng gen(config.seed);
  const std::size_t cells = config.cells_h * config.cells_w;
  std::vector<std::vector<std::uint8_t>> low_res(config.count, std::vector<std::uint8_t>(cells));
  std::vector<std::pair<double, double>> shifts(config.count);
  for (std::size_t m = 0; m < config.count; ++m) {
    const auto mi = static_cast<std::uint32_t>(m);
    for (std::size_t c = 0; c < cells; ++c) {
      low_res[m][c] = gen.uniform(mi, static_cast<std::uint32_t>(c), 0) < config.p ? 1 : 0;
    }
    const rng::Counter r = gen.block(mi, kShiftSlot, 0);
    shifts[m] = {rng::to_unit(r[0], r[1]), rng::to_unit(r[2], r[3])};
  }
  return OcclusionMaskBatch(config, out_h, out_w, std::move(low_res), std::move(shifts));
}

AttributionResult lafam(const Volume& volume, std::size_t out_h, std::size_t out_w,
                        std::size_t layer_index) {
  RawGrid mean = channel_mean(volume);
  SaliencyMap saliency = upsample_nearest(minmax_normalize(mean), out_h, out_w);
  return AttributionResult{Method::LaFAM, std::move(saliency), std::move(mean),
                           Provenance{layer_index, std::nullopt, std::nullopt}};
}

AttributionResult gradcam(const Volume& volume, const Volume& grads, std::size_t out_h,
                          std::size_t out_w, std::size_t layer_index,
                          std::optional<std::size_t> class_index) {
  if (volume.channels() != grads.channels() || volume.height() != grads.height() ||
      volume.width() != grads.width()) {
    throw ConfigError("gradcam: activation and gradient volumes differ in shape");
  }
  const std::size_t plane = volume.plane_size();
  std::vector<double> pre(plane, 0.0);
  for (std::size_t k = 0; k < volume.channels(); ++k) {
    auto g = grads.channel(k);
    double alpha = 0.0;
    for (double v : g) alpha += v;
    alpha /= static_cast<double>(plane);
    auto a = volume.channel(k);
    for (std::size_t n = 0; n < plane; ++n) pre[n] += alpha * a[n];
  }
  for (double& v : pre) v = std::max(v, 0.0);
  RawGrid raw(volume.height(), volume.width(), std::move(pre));
  SaliencyMap saliency = upsample_nearest(minmax_normalize(raw), out_h, out_w);
  return AttributionResult{Method::GradCAM, std::move(saliency), std::move(raw),
                           Provenance{layer_index, class_index, std::nullopt}};
}

double cosine_similarity(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) {
    throw ConfigError("cosine_similarity: length mismatch (" + std::to_string(u.size()) + " vs " +
                      std::to_string(v.size()) + ")");
  }
  double dot = 0.0, uu = 0.0, vv = 0.0;
  for (std::size_t n = 0; n < u.size(); ++n) {
    dot += u[n] * v[n];
    uu += u[n] * u[n];
    vv += v[n] * v[n];
  }
  const double nu = std::sqrt(uu);
  const double nv = std::sqrt(vv);
  if (nu < 1e-12 || nv < 1e-12) return 0.0;
  return std::clamp(dot / (nu * nv), -1.0, 1.0);
}

AttributionResult relax(const Volume& image, const Encoder& encoder, const OcclusionMaskBatch& masks,
                        const RelaxConfig& config) {
  if (masks.height() != image.height() || masks.width() != image.width()) {
    throw ConfigError("relax: masks are " + std::to_string(masks.height()) + "x" +
                      std::to_string(masks.width()) + " but the image is " +
                      std::to_string(image.height()) + "x" + std::to_string(image.width()));
  }
  const std::vector<double> reference = encoder(image);
  const std::size_t plane = image.plane_size();
  const std::size_t n_masks = masks.count();
  const std::size_t n_blocks = (n_masks + kRelaxBlock - 1) / kRelaxBlock;

  std::vector<std::vector<double>> partial(n_blocks);
  parallel_for(n_blocks, config.threads, [&](std::size_t b) {
    std::vector<double> acc(plane, 0.0);
    const std::size_t end = std::min(n_masks, (b + 1) * kRelaxBlock);
    std::vector<double> masked(image.size());
    for (std::size_t m = b * kRelaxBlock; m < end; ++m) {
      const RawGrid mask = masks.full_res(m);
      auto mv = mask.values();
      for (std::size_t k = 0; k < image.channels(); ++k) {
        auto src = image.channel(k);
        for (std::size_t n = 0; n < plane; ++n) {
          masked[k * plane + n] = src[n] * mv[n] + config.fill_value * (1.0 - mv[n]);
        }
      }
      const std::vector<double> embedding =
          encoder(Volume(image.channels(), image.height(), image.width(), masked));
      double s = cosine_similarity(reference, embedding);
      if (s == 0.0) {
        spdlog::debug("relax: mask {} has zero similarity (zero-norm embedding?)", m);
      }
      if (config.clamp_similarity) s = std::max(s, 0.0);
      for (std::size_t n = 0; n < plane; ++n) acc[n] += s * mv[n];
    }
    partial[b] = std::move(acc);
  });

  std::vector<double> sum = tree_reduce(std::move(partial), [](const std::vector<double>& a,
                                                               const std::vector<double>& b) {
    std::vector<double> out(a.size());
    for (std::size_t n = 0; n < a.size(); ++n) out[n] = a[n] + b[n];
    return out;
  });
  const double scale = 1.0 / (static_cast<double>(n_masks) * masks.config().p);
  for (double& v : sum) v *= scale;
  RawGrid raw(image.height(), image.width(), std::move(sum));
  SaliencyMap saliency = minmax_normalize(raw);
  return AttributionResult{Method::RELAX, std::move(saliency), std::move(raw),
                           Provenance{0, std::nullopt, masks.config()}};
}

void save_result(const std::filesystem::path& stem, const AttributionResult& result) {
  std::filesystem::path npy_path = stem;
  npy_path += ".npy";
  npy::write(npy_path, npy::from_grid(result.saliency));

  nlohmann::ordered_json j;
  j["method"] = to_string(result.method);
  j["height"] = result.saliency.height();
  j["width"] = result.saliency.width();
  if (result.method != Method::RELAX) j["layer"] = result.provenance.layer_index;
  if (result.provenance.class_index) j["class"] = *result.provenance.class_index;
  if (result.provenance.masks) {
    const MaskConfig& m = *result.provenance.masks;
    j["seed"] = m.seed;
    j["masks"] = {{"count", m.count},
                  {"cells_h", m.cells_h},
                  {"cells_w", m.cells_w},
                  {"p", m.p},
                  {"upsampling", to_string(m.upsampling)}};
  }
  std::filesystem::path json_path = stem;
  json_path += ".json";
  std::ofstream out(json_path, std::ios::trunc);
  if (!out) throw IoError("cannot create " + json_path.string());
  out << j.dump(2) << "\n";
  if (!out) throw IoError("write failed for " + json_path.string());
}

}  // namespace salmap
