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

// Synthetic scenes with exact ground-truth masks, plus image, mask and
// manifest I/O.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "salmap/metrics.hpp"
#include "salmap/tensor.hpp"

namespace salmap::data {

enum class Shape { Disc, Square, Triangle };
enum class Texture { Solid, HStripes, VStripes, Checker, Dots };

inline constexpr std::size_t kDefaultClassCount = 13;

/// Class c is shape c % 3 with texture c / 3.
Shape class_shape(std::size_t label);
Texture class_texture(std::size_t label);
/// e.g. "disc/solid".
std::string class_descriptor(std::size_t label);

struct SceneConfig {
  std::size_t image_size = 64;
  double noise_level = 0.3;  // amplitude of uniform pixel noise, in [0, 1)
  std::vector<std::size_t> classes;  // allowed labels; empty means all kDefaultClassCount
  double min_area = 0.05;    // object area fraction bounds
  double max_area = 0.40;
  bool two_objects = false;  // place a second object of a different class
};

struct SceneSample {
  Volume image;            // 1 x S x S, values in [0, 1]
  std::size_t label = 0;   // class of the first-placed object
  BinaryMask gt_mask;      // first object only
  BinaryMask union_mask;   // every object
  std::vector<std::uint8_t> class_map;  // 0 background, label + 1 per object pixel
  std::vector<std::size_t> labels;      // in placement order
  std::uint64_t seed = 0;
  std::string descriptor;
};

/// Deterministic per seed. Throws ConfigError when image_size < 16, the
/// noise level is outside [0, 1), or no object fits the area bounds.
SceneSample generate_scene(std::uint64_t seed, const SceneConfig& config);

struct MaskRecord {
  std::string mask_path;
  std::set<std::size_t> classes;
  std::map<std::size_t, std::size_t> pixel_counts;
};

/// Builds a record from a class map (0 background, label + 1 elsewhere).
MaskRecord make_mask_record(std::string mask_path, std::span<const std::uint8_t> class_map);

/// Keeps records with exactly one class, in order.
std::vector<MaskRecord> filter_single_class(const std::vector<MaskRecord>& records);

/// 8-bit interleaved raster.
struct Image8 {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 1;  // 1 or 3
  std::vector<std::uint8_t> pixels;
};

/// Throws IoError on unreadable/corrupt files or 16-bit images.
Image8 read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const Image8& image);

/// round(255 v) with halves rounded up; v is clamped to [0, 1].
std::uint8_t quantize(double v);

/// 8-bit grayscale or RGB PNG, scaled to [0, 1], as a C x H x W volume.
Volume load_image(const std::filesystem::path& path);
void save_image_png(const std::filesystem::path& path, const Volume& image);
void save_saliency_png(const std::filesystem::path& path, const SaliencyMap& s);
/// PNG (nonzero -> 1) or .npy (nonzero -> 1), chosen by extension.
BinaryMask load_mask(const std::filesystem::path& path);
void save_mask_png(const std::filesystem::path& path, const BinaryMask& m);

/// One line of the JSON-lines dataset manifest. Paths are relative to
/// the manifest's directory.
struct ManifestEntry {
  std::string id;
  std::string split;  // "train" or "eval"
  std::string image;
  std::string mask;
  std::string class_map;
  std::size_t label = 0;
  std::uint64_t seed = 0;
  std::vector<std::size_t> classes;
  std::string descriptor;
};

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries);

}  // namespace salmap::data
