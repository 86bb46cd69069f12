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

#include "salmap/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <optional>

#include "json.hpp"
#include "salmap/error.hpp"
#include "salmap/npy.hpp"
#include "salmap/random.hpp"

namespace salmap::data {

namespace {

constexpr double kBackground = 0.1;
constexpr int kMaxPlacementAttempts = 200;
constexpr int kMaxSceneAttempts = 20;

struct Placement {
  Shape shape;
  double cy, cx, r;
};

// Area of the shape in units of r^2.
double area_coefficient(Shape shape) {
  switch (shape) {
    case Shape::Disc:
      return std::numbers::pi;
    case Shape::Square:
      return 4.0;
    case Shape::Triangle:
      return 2.0;
  }
  return 1.0;
}

bool inside(const Placement& p, double y, double x) {
  const double dy = y - p.cy;
  const double dx = x - p.cx;
  switch (p.shape) {
    case Shape::Disc:
      return dy * dy + dx * dx <= p.r * p.r;
    case Shape::Square:
      return std::abs(dy) <= p.r && std::abs(dx) <= p.r;
    case Shape::Triangle:
      // apex at the top, base of width 2r at the bottom
      return dy >= -p.r && dy <= p.r && std::abs(dx) <= (dy + p.r) / 2.0;
  }
  return false;
}

// Object intensity for a texture, always in [0.6, 1.0].
double texture_value(Texture texture, std::size_t i, std::size_t j) {
  switch (texture) {
    case Texture::Solid:
      return 0.85;
    case Texture::HStripes:
      return (i / 3) % 2 == 0 ? 1.0 : 0.6;
    case Texture::VStripes:
      return (j / 3) % 2 == 0 ? 1.0 : 0.6;
    case Texture::Checker:
      return ((i / 4) + (j / 4)) % 2 == 0 ? 1.0 : 0.6;
    case Texture::Dots:
      return (i % 4 < 2 && j % 4 < 2) ? 1.0 : 0.6;
  }
  return 0.85;
}

std::vector<std::uint8_t> rasterize(const Placement& p, std::size_t size) {
  std::vector<std::uint8_t> mask(size * size, 0);
  for (std::size_t i = 0; i < size; ++i) {
    for (std::size_t j = 0; j < size; ++j) {
      if (inside(p, static_cast<double>(i) + 0.5, static_cast<double>(j) + 0.5)) mask[i * size + j] = 1;
    }
  }
  return mask;
}

// Draws a placement whose rasterized area lies in the configured bounds
// and which does not touch `occupied` (when given).
std::optional<std::vector<std::uint8_t>> place(rng::Stream& stream, Shape shape, const SceneConfig& config,
                                const std::vector<std::uint8_t>* occupied) {
  const auto size = static_cast<double>(config.image_size);
  const double pixels = size * size;
  // Aim inside the bounds so rasterization error rarely forces a redraw.
  const double span = config.max_area - config.min_area;
  const double lo = config.min_area + (config.two_objects ? 0.05 : 0.2) * span;
  // Two objects must both fit without touching, so keep them small.
  const double hi = config.two_objects ? config.min_area + 0.3 * span : config.max_area - 0.2 * span;
  for (int attempt = 0; attempt < kMaxPlacementAttempts; ++attempt) {
    const double target = stream.uniform(lo, hi);
    const double r = std::sqrt(target * pixels / area_coefficient(shape));
    if (2.0 * r + 2.0 > size) continue;
    const double cy = stream.uniform(r + 1.0, size - r - 1.0);
    const double cx = stream.uniform(r + 1.0, size - r - 1.0);
    std::vector<std::uint8_t> mask = rasterize(Placement{shape, cy, cx, r}, config.image_size);
    const auto area = static_cast<double>(std::count(mask.begin(), mask.end(), 1)) / pixels;
    if (area < config.min_area || area > config.max_area) continue;
    if (occupied) {
      bool overlap = false;
      for (std::size_t n = 0; n < mask.size() && !overlap; ++n) overlap = mask[n] && (*occupied)[n];
      if (overlap) continue;
    }
    return mask;
  }
  return std::nullopt;
}

}  // namespace

Shape class_shape(std::size_t label) { return static_cast<Shape>(label % 3); }

Texture class_texture(std::size_t label) { return static_cast<Texture>((label / 3) % 5); }

std::string class_descriptor(std::size_t label) {
  static const char* shapes[] = {"disc", "square", "triangle"};
  static const char* textures[] = {"solid", "hstripes", "vstripes", "checker", "dots"};
  return std::string(shapes[label % 3]) + "/" + textures[(label / 3) % 5];
}

SceneSample generate_scene(std::uint64_t seed, const SceneConfig& config) {
  if (config.image_size < 16) throw ConfigError("generate_scene: image_size must be >= 16");
  if (!(config.noise_level >= 0.0 && config.noise_level < 1.0)) {
    throw ConfigError("generate_scene: noise_level must lie in [0, 1)");
  }
  if (!(config.min_area > 0.0 && config.min_area < config.max_area && config.max_area < 1.0)) {
    throw ConfigError("generate_scene: need 0 < min_area < max_area < 1");
  }
  std::vector<std::size_t> classes = config.classes;
  if (classes.empty()) {
    for (std::size_t c = 0; c < kDefaultClassCount; ++c) classes.push_back(c);
  }
  if (config.two_objects && classes.size() < 2) {
    throw ConfigError("generate_scene: two-object scenes need at least two classes");
  }

  rng::Stream stream(rng::derive_seed(seed, "dataset.scene"), 0);
  const std::size_t size = config.image_size;
  const std::size_t label = classes[stream.below(classes.size())];
  std::vector<std::size_t> labels{label};
  if (config.two_objects) {
    std::size_t second = label;
    while (second == label) second = classes[stream.below(classes.size())];
    labels.push_back(second);
  }

  std::vector<std::uint8_t> class_map;
  std::vector<std::uint8_t> first_mask;
  std::vector<double> pixels;
  std::vector<std::uint8_t> occupied;
  bool placed = false;
  // A large first object can leave no room for the second; start over.
  for (int scene = 0; scene < kMaxSceneAttempts && !placed; ++scene) {
    class_map.assign(size * size, 0);
    pixels.assign(size * size, kBackground);
    occupied.assign(size * size, 0);
    placed = true;
    for (std::size_t n = 0; n < labels.size() && placed; ++n) {
      const auto mask = place(stream, class_shape(labels[n]), config, n == 0 ? nullptr : &occupied);
      if (!mask) {
        placed = false;
        break;
      }
      for (std::size_t p = 0; p < mask->size(); ++p) {
        if (!(*mask)[p]) continue;
        occupied[p] = 1;
        class_map[p] = static_cast<std::uint8_t>(labels[n] + 1);
        pixels[p] = texture_value(class_texture(labels[n]), p / size, p % size);
      }
      if (n == 0) first_mask = *mask;
    }
  }
  if (!placed) {
    throw ConfigError("generate_scene: could not place " + std::to_string(labels.size()) +
                      " shape(s) within the area bounds on a " + std::to_string(size) + "x" +
                      std::to_string(size) + " canvas");
  }

  if (config.noise_level > 0.0) {
    rng::Stream noise(rng::derive_seed(seed, "dataset.noise"), 0);
    for (double& v : pixels) v = std::clamp(v + config.noise_level * (noise.uniform() - 0.5), 0.0, 1.0);
  }

  std::string descriptor = class_descriptor(labels[0]);
  for (std::size_t n = 1; n < labels.size(); ++n) descriptor += "+" + class_descriptor(labels[n]);
  return SceneSample{Volume(1, size, size, std::move(pixels)),
                     label,
                     BinaryMask(size, size, std::move(first_mask)),
                     BinaryMask(size, size, occupied),
                     std::move(class_map),
                     std::move(labels),
                     seed,
                     std::move(descriptor)};
}

MaskRecord make_mask_record(std::string mask_path, std::span<const std::uint8_t> class_map) {
  MaskRecord record;
  record.mask_path = std::move(mask_path);
  for (std::uint8_t v : class_map) {
    if (v == 0) continue;
    record.classes.insert(v - 1u);
    ++record.pixel_counts[v - 1u];
  }
  return record;
}

std::vector<MaskRecord> filter_single_class(const std::vector<MaskRecord>& records) {
  std::vector<MaskRecord> out;
  std::copy_if(records.begin(), records.end(), std::back_inserter(out),
               [](const MaskRecord& r) { return r.classes.size() == 1; });
  return out;
}

std::uint8_t quantize(double v) {
  return static_cast<std::uint8_t>(std::floor(255.0 * std::clamp(v, 0.0, 1.0) + 0.5));
}

Volume load_image(const std::filesystem::path& path) {
  const Image8 img = read_png(path);
  const std::size_t plane = img.height * img.width;
  std::vector<double> values(img.channels * plane);
  for (std::size_t p = 0; p < plane; ++p) {
    for (std::size_t c = 0; c < img.channels; ++c) {
      values[c * plane + p] = img.pixels[p * img.channels + c] / 255.0;
    }
  }
  return Volume(img.channels, img.height, img.width, std::move(values));
}

void save_image_png(const std::filesystem::path& path, const Volume& image) {
  if (image.channels() != 1 && image.channels() != 3) {
    throw ConfigError("save_image_png: need 1 or 3 channels, got " + std::to_string(image.channels()));
  }
  Image8 img{image.height(), image.width(), image.channels(), {}};
  const std::size_t plane = image.plane_size();
  img.pixels.resize(image.size());
  for (std::size_t p = 0; p < plane; ++p) {
    for (std::size_t c = 0; c < img.channels; ++c) {
      img.pixels[p * img.channels + c] = quantize(image.channel(c)[p]);
    }
  }
  write_png(path, img);
}

void save_saliency_png(const std::filesystem::path& path, const SaliencyMap& s) {
  Image8 img{s.height(), s.width(), 1, {}};
  img.pixels.reserve(s.size());
  for (double v : s.values()) img.pixels.push_back(quantize(v));
  write_png(path, img);
}

BinaryMask load_mask(const std::filesystem::path& path) {
  if (path.extension() == ".npy") {
    const npy::Array a = npy::read(path);
    const RawGrid g = npy::to_grid(a);
    std::vector<std::uint8_t> v(g.size());
    for (std::size_t n = 0; n < v.size(); ++n) v[n] = g.values()[n] != 0.0 ? 1 : 0;
    return BinaryMask(g.height(), g.width(), std::move(v));
  }
  Image8 img = read_png(path);
  if (img.channels != 1) throw IoError("load_mask: " + path.string() + " is not grayscale");
  return BinaryMask(img.height, img.width, std::move(img.pixels));
}

void save_mask_png(const std::filesystem::path& path, const BinaryMask& m) {
  Image8 img{m.height(), m.width(), 1, {}};
  img.pixels.reserve(m.size());
  for (std::uint8_t v : m.values()) img.pixels.push_back(v ? 255 : 0);
  write_png(path, img);
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  std::vector<ManifestEntry> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      ManifestEntry e;
      e.id = j.at("id").get<std::string>();
      e.split = j.at("split").get<std::string>();
      e.image = j.at("image").get<std::string>();
      e.mask = j.at("mask").get<std::string>();
      e.class_map = j.value("class_map", std::string());
      e.label = j.at("label").get<std::size_t>();
      e.seed = j.at("seed").get<std::uint64_t>();
      e.classes = j.at("classes").get<std::vector<std::size_t>>();
      e.descriptor = j.value("descriptor", std::string());
      entries.push_back(std::move(e));
    } catch (const nlohmann::json::exception& err) {
      throw IoError("manifest " + path.string() + " line " + std::to_string(line_no) + ": " +
                    err.what());
    }
  }
  return entries;
}

void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot create manifest " + path.string());
  for (const ManifestEntry& e : entries) {
    nlohmann::ordered_json j;
    j["id"] = e.id;
    j["split"] = e.split;
    j["image"] = e.image;
    j["mask"] = e.mask;
    j["class_map"] = e.class_map;
    j["label"] = e.label;
    j["seed"] = e.seed;
    j["classes"] = e.classes;
    j["descriptor"] = e.descriptor;
    out << j.dump() << "\n";
  }
  if (!out) throw IoError("write failed for manifest " + path.string());
}

}  // namespace salmap::data
