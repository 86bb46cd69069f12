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

#include "salmap/npy.hpp"

#include <array>
#include <bit>
#include <cctype>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string_view>

namespace salmap::npy {

static_assert(std::endian::native == std::endian::little,
              "payload codec assumes a little-endian host");

namespace {

constexpr std::array<char, 6> kMagic = {'\x93', 'N', 'U', 'M', 'P', 'Y'};
constexpr std::size_t kAlign = 64;
// numpy reserves room so the leading axis can grow in place.
constexpr std::size_t kGrowthAxisMaxDigits = 21;

[[noreturn]] void fail(ErrorKind kind, const std::string& msg) { throw Error(kind, msg); }

std::size_t dtype_size(DType dtype) { return dtype == DType::Float32 ? 4 : 8; }

const char* dtype_descr(DType dtype) { return dtype == DType::Float32 ? "<f4" : "<f8"; }

std::string shape_repr(const std::vector<std::size_t>& shape) {
  std::string s = "(";
  for (std::size_t n = 0; n < shape.size(); ++n) {
    if (n > 0) s += ", ";
    s += std::to_string(shape[n]);
  }
  if (shape.size() == 1) s += ",";
  s += ")";
  return s;
}

// Minimal reader for the Python-literal dict numpy writes.
class HeaderParser {
 public:
  explicit HeaderParser(std::string_view text) : text_(text) {}

  void parse() {
    skip_ws();
    expect('{');
    while (true) {
      skip_ws();
      if (peek() == '}') {
        ++pos_;
        break;
      }
      const std::string key = parse_string();
      skip_ws();
      expect(':');
      skip_ws();
      if (key == "descr") {
        descr = parse_string();
      } else if (key == "fortran_order") {
        fortran_order = parse_bool();
      } else if (key == "shape") {
        shape = parse_tuple();
      } else {
        fail(ErrorKind::MalformedHeader, "npy header: unknown key '" + key + "'");
      }
      skip_ws();
      if (peek() == ',') ++pos_;
    }
    skip_ws();
    if (pos_ != text_.size()) fail(ErrorKind::MalformedHeader, "npy header: trailing characters");
    if (!descr || !fortran_order || !shape) {
      fail(ErrorKind::MalformedHeader, "npy header: missing descr, fortran_order or shape");
    }
  }

  std::optional<std::string> descr;
  std::optional<bool> fortran_order;
  std::optional<std::vector<std::size_t>> shape;

 private:
  char peek() const {
    if (pos_ >= text_.size()) fail(ErrorKind::MalformedHeader, "npy header: unexpected end");
    return text_[pos_];
  }
  void expect(char c) {
    if (peek() != c) {
      fail(ErrorKind::MalformedHeader, std::string("npy header: expected '") + c + "'");
    }
    ++pos_;
  }
  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }
  std::string parse_string() {
    const char quote = peek();
    if (quote != '\'' && quote != '"') fail(ErrorKind::MalformedHeader, "npy header: expected string");
    ++pos_;
    const std::size_t end = text_.find(quote, pos_);
    if (end == std::string_view::npos) fail(ErrorKind::MalformedHeader, "npy header: unterminated string");
    std::string s(text_.substr(pos_, end - pos_));
    pos_ = end + 1;
    return s;
  }
  bool parse_bool() {
    if (text_.substr(pos_, 4) == "True") {
      pos_ += 4;
      return true;
    }
    if (text_.substr(pos_, 5) == "False") {
      pos_ += 5;
      return false;
    }
    fail(ErrorKind::MalformedHeader, "npy header: expected True or False");
  }
  std::vector<std::size_t> parse_tuple() {
    expect('(');
    std::vector<std::size_t> dims;
    while (true) {
      skip_ws();
      if (peek() == ')') {
        ++pos_;
        return dims;
      }
      if (!std::isdigit(static_cast<unsigned char>(peek()))) {
        fail(ErrorKind::MalformedHeader, "npy header: bad shape entry");
      }
      std::size_t value = 0;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        value = value * 10 + static_cast<std::size_t>(text_[pos_] - '0');
        ++pos_;
      }
      dims.push_back(value);
      skip_ws();
      if (peek() == ',') ++pos_;
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

void read_exact(std::istream& in, char* dst, std::size_t n, ErrorKind kind, const char* what) {
  in.read(dst, static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) fail(kind, std::string("npy: truncated ") + what);
}

}  // namespace

std::size_t Array::element_count() const {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string format_header(DType dtype, const std::vector<std::size_t>& shape) {
  std::string header = "{'descr': '";
  header += dtype_descr(dtype);
  header += "', 'fortran_order': False, 'shape': ";
  header += shape_repr(shape);
  header += ", }";
  if (!shape.empty()) {
    header.append(kGrowthAxisMaxDigits - std::to_string(shape.front()).size(), ' ');
  }
  const std::size_t used = kMagic.size() + 2 + 2 + header.size() + 1;
  header.append(kAlign - used % kAlign, ' ');
  header += '\n';
  return header;
}

Array read(std::istream& in) {
  std::array<char, 8> prefix{};
  in.read(prefix.data(), prefix.size());
  if (in.gcount() != static_cast<std::streamsize>(prefix.size()) ||
      std::memcmp(prefix.data(), kMagic.data(), kMagic.size()) != 0) {
    fail(ErrorKind::MalformedHeader, "npy: bad magic bytes");
  }
  const auto major = static_cast<unsigned char>(prefix[6]);
  std::size_t header_len = 0;
  if (major == 1) {
    std::array<unsigned char, 2> len{};
    read_exact(in, reinterpret_cast<char*>(len.data()), len.size(), ErrorKind::MalformedHeader,
               "header length");
    header_len = len[0] | (static_cast<std::size_t>(len[1]) << 8);
  } else if (major == 2 || major == 3) {
    std::array<unsigned char, 4> len{};
    read_exact(in, reinterpret_cast<char*>(len.data()), len.size(), ErrorKind::MalformedHeader,
               "header length");
    for (int b = 3; b >= 0; --b) header_len = (header_len << 8) | len[static_cast<std::size_t>(b)];
  } else {
    fail(ErrorKind::MalformedHeader, "npy: unsupported format version " + std::to_string(major));
  }

  std::string header(header_len, '\0');
  read_exact(in, header.data(), header_len, ErrorKind::MalformedHeader, "header");
  HeaderParser parser(header);
  parser.parse();

  Array array;
  if (*parser.descr == "<f4") {
    array.dtype = DType::Float32;
  } else if (*parser.descr == "<f8") {
    array.dtype = DType::Float64;
  } else {
    fail(ErrorKind::UnsupportedDtype, "npy: unsupported element type '" + *parser.descr + "'");
  }
  if (*parser.fortran_order) fail(ErrorKind::UnsupportedLayout, "npy: Fortran order not supported");
  array.shape = *parser.shape;

  const std::size_t count = array.element_count();
  const std::size_t bytes = count * dtype_size(array.dtype);
  std::vector<char> payload(bytes);
  in.read(payload.data(), static_cast<std::streamsize>(bytes));
  if (static_cast<std::size_t>(in.gcount()) != bytes) {
    fail(ErrorKind::ShapeMismatch, "npy: header declares " + std::to_string(count) +
                                       " elements but payload holds " +
                                       std::to_string(in.gcount() / static_cast<std::streamsize>(
                                                                        dtype_size(array.dtype))));
  }

  array.data.resize(count);
  if (array.dtype == DType::Float32) {
    for (std::size_t n = 0; n < count; ++n) {
      float f;
      std::memcpy(&f, payload.data() + 4 * n, 4);
      array.data[n] = f;
    }
  } else {
    std::memcpy(array.data.data(), payload.data(), bytes);
  }
  return array;
}

Array read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "npy: cannot open " + path.string());
  Array array = read(in);
  // Stream must end exactly where the payload does.
  if (in.peek() != std::char_traits<char>::eof()) {
    fail(ErrorKind::ShapeMismatch, "npy: trailing bytes after payload in " + path.string());
  }
  return array;
}

void write(std::ostream& out, const Array& array) {
  if (array.data.size() != array.element_count()) {
    fail(ErrorKind::ShapeMismatch, "npy: shape declares " + std::to_string(array.element_count()) +
                                       " elements, data holds " + std::to_string(array.data.size()));
  }
  const std::string header = format_header(array.dtype, array.shape);
  out.write(kMagic.data(), kMagic.size());
  const char version[2] = {1, 0};
  out.write(version, 2);
  const char len[2] = {static_cast<char>(header.size() & 0xff),
                       static_cast<char>((header.size() >> 8) & 0xff)};
  out.write(len, 2);
  out.write(header.data(), static_cast<std::streamsize>(header.size()));

  if (array.dtype == DType::Float32) {
    std::vector<float> buf(array.data.begin(), array.data.end());
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size() * sizeof(float)));
  } else {
    out.write(reinterpret_cast<const char*>(array.data.data()),
              static_cast<std::streamsize>(array.data.size() * sizeof(double)));
  }
  if (!out) fail(ErrorKind::Io, "npy: write failed");
}

void write(const std::filesystem::path& path, const Array& array) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "npy: cannot create " + path.string());
  write(out, array);
}

Volume to_volume(const Array& array) {
  const auto& s = array.shape;
  if (s.size() == 3) return Volume(s[0], s[1], s[2], array.data);
  if (s.size() == 4 && s[0] == 1) return Volume(s[1], s[2], s[3], array.data);
  if (s.size() == 2) return Volume(1, s[0], s[1], array.data);
  fail(ErrorKind::ShapeMismatch, "npy: expected a (K, H, W) activation volume, got shape " +
                                     shape_repr(s));
}

RawGrid to_grid(const Array& array) {
  const auto& s = array.shape;
  if (s.size() == 2) return RawGrid(s[0], s[1], array.data);
  if (s.size() == 3 && s[0] == 1) return RawGrid(s[1], s[2], array.data);
  fail(ErrorKind::ShapeMismatch, "npy: expected an (H, W) grid, got shape " + shape_repr(s));
}

Array from_volume(const Volume& volume, DType dtype) {
  return Array{dtype,
               {volume.channels(), volume.height(), volume.width()},
               {volume.values().begin(), volume.values().end()}};
}

Array from_grid(std::size_t height, std::size_t width, std::span<const double> values,
                DType dtype) {
  return Array{dtype, {height, width}, {values.begin(), values.end()}};
}

}  // namespace salmap::npy
