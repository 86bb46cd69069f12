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

#include <png.h>

#include <cstring>

#include "salmap/dataset.hpp"
#include "salmap/error.hpp"

namespace salmap::data {

namespace {

struct ImageGuard {
  png_image image;
  ImageGuard() {
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
  }
  ~ImageGuard() { png_image_free(&image); }
  ImageGuard(const ImageGuard&) = delete;
  ImageGuard& operator=(const ImageGuard&) = delete;
};

}  // namespace

Image8 read_png(const std::filesystem::path& path) {
  ImageGuard guard;
  png_image& image = guard.image;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw IoError("read_png: " + path.string() + ": " + image.message);
  }
  if (image.format & PNG_FORMAT_FLAG_LINEAR) {
    throw IoError("read_png: " + path.string() + ": unsupported bit depth (only 8-bit PNGs)");
  }
  const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
  const bool alpha = (image.format & PNG_FORMAT_FLAG_ALPHA) != 0;
  // Keep alpha if present and drop it below, so nothing gets composited.
  image.format = color ? (alpha ? PNG_FORMAT_RGBA : PNG_FORMAT_RGB)
                       : (alpha ? PNG_FORMAT_GA : PNG_FORMAT_GRAY);
  const std::size_t stored = PNG_IMAGE_SAMPLE_CHANNELS(image.format);
  std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    throw IoError("read_png: " + path.string() + ": " + image.message);
  }

  Image8 out;
  out.height = image.height;
  out.width = image.width;
  out.channels = color ? 3 : 1;
  const std::size_t n = out.height * out.width;
  out.pixels.resize(n * out.channels);
  for (std::size_t p = 0; p < n; ++p) {
    for (std::size_t c = 0; c < out.channels; ++c) out.pixels[p * out.channels + c] = buffer[p * stored + c];
  }
  return out;
}

void write_png(const std::filesystem::path& path, const Image8& img) {
  if (img.channels != 1 && img.channels != 3) throw ConfigError("write_png: need 1 or 3 channels");
  if (img.pixels.size() != img.height * img.width * img.channels) {
    throw ConfigError("write_png: pixel buffer does not match the image size");
  }
  ImageGuard guard;
  png_image& image = guard.image;
  image.width = static_cast<png_uint_32>(img.width);
  image.height = static_cast<png_uint_32>(img.height);
  image.format = img.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&image, path.c_str(), 0, img.pixels.data(), 0, nullptr)) {
    throw IoError("write_png: " + path.string() + ": " + image.message);
  }
}

}  // namespace salmap::data
