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

// Reader/writer for the NumPy .npy array format (little-endian f4/f8,
// C order). Arrays written by numpy.save load directly and our output
// loads with numpy.load.

#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "salmap/error.hpp"
#include "salmap/tensor.hpp"

namespace salmap::npy {

enum class DType { Float32, Float64 };

enum class ErrorKind {
  Io,
  MalformedHeader,
  UnsupportedDtype,
  UnsupportedLayout,
  ShapeMismatch,
};

class Error : public IoError {
 public:
  Error(ErrorKind kind, const std::string& what) : IoError(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

/// A dense array as stored on disk. Values are widened to double; a
/// float32 payload survives read -> write unchanged because every float
/// is exactly representable as a double.
struct Array {
  DType dtype = DType::Float64;
  std::vector<std::size_t> shape;
  std::vector<double> data;

  std::size_t element_count() const;
  bool operator==(const Array&) const = default;
};

/// Header text exactly as numpy writes it for version 1.0, including the
/// space padding and trailing newline.
std::string format_header(DType dtype, const std::vector<std::size_t>& shape);

Array read(std::istream& in);
Array read(const std::filesystem::path& path);
void write(std::ostream& out, const Array& array);
void write(const std::filesystem::path& path, const Array& array);

/// Accepts shape (K, H, W), (1, K, H, W) or (H, W) (as K = 1).
Volume to_volume(const Array& array);
/// Accepts shape (H, W), or (1, H, W).
RawGrid to_grid(const Array& array);

Array from_volume(const Volume& volume, DType dtype = DType::Float64);
Array from_grid(std::size_t height, std::size_t width, std::span<const double> values,
                DType dtype = DType::Float64);
inline Array from_grid(const RawGrid& grid, DType dtype = DType::Float64) {
  return from_grid(grid.height(), grid.width(), grid.values(), dtype);
}
inline Array from_grid(const SaliencyMap& map, DType dtype = DType::Float64) {
  return from_grid(map.height(), map.width(), map.values(), dtype);
}

}  // namespace salmap::npy
