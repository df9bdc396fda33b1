// Copyright 2026 The fsreloc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <png.h>

#include <cmath>
#include <cstdio>
#include <memory>

#include "fsreloc/error.hpp"
#include "fsreloc/image.hpp"

namespace fsreloc {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using File = std::unique_ptr<std::FILE, FileCloser>;

File open_file(const std::filesystem::path& path, const char* mode) {
  File f(std::fopen(path.c_str(), mode));
  if (!f) {
    throw Error(mode[0] == 'r' ? ErrorCode::MissingFile : ErrorCode::InvalidArgument,
                "cannot open " + path.string());
  }
  return f;
}

[[noreturn]] void png_fail(png_structp png, png_const_charp msg) {
  (void)png;
  throw Error(ErrorCode::BadFormat, std::string("png: ") + msg);
}

void png_warn(png_structp, png_const_charp) {}

struct Decoded {
  int width = 0;
  int height = 0;
  int channels = 0;
  int bit_depth = 0;
  std::vector<std::uint8_t> bytes;  // 16-bit samples are big-endian
};

// Decodes to 8-bit RGB (color) or 16-bit gray (depth), normalizing palette,
// gray and alpha variants.
Decoded decode(const std::filesystem::path& path, bool want_depth) {
  File f = open_file(path, "rb");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_fail, png_warn);
  png_infop info = png_create_info_struct(png);
  Decoded d;
  try {
    png_init_io(png, f.get());
    png_read_info(png, info);
    const int color = png_get_color_type(png, info);
    const int depth = png_get_bit_depth(png, info);
    if (want_depth) {
      if (color != PNG_COLOR_TYPE_GRAY || depth != 16) {
        throw Error(ErrorCode::BadFormat, path.string() + ": depth must be 16-bit gray");
      }
    } else {
      if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
      if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) {
        png_set_gray_to_rgb(png);
      }
      if (depth == 16) png_set_strip_16(png);
      if (depth < 8) png_set_packing(png);
      if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    }
    png_read_update_info(png, info);
    d.width = static_cast<int>(png_get_image_width(png, info));
    d.height = static_cast<int>(png_get_image_height(png, info));
    d.channels = png_get_channels(png, info);
    d.bit_depth = png_get_bit_depth(png, info);
    const std::size_t row_bytes = png_get_rowbytes(png, info);
    d.bytes.resize(row_bytes * static_cast<std::size_t>(d.height));
    std::vector<png_bytep> rows(static_cast<std::size_t>(d.height));
    for (int y = 0; y < d.height; ++y) rows[y] = d.bytes.data() + row_bytes * y;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
  } catch (...) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw;
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return d;
}

void encode(const std::filesystem::path& path, int width, int height, int color_type,
            int bit_depth, const std::vector<std::uint8_t>& bytes, std::size_t row_bytes) {
  File f = open_file(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_fail, png_warn);
  png_infop info = png_create_info_struct(png);
  try {
    png_init_io(png, f.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height),
                 bit_depth, color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<png_bytep> rows(static_cast<std::size_t>(height));
    for (int y = 0; y < height; ++y) {
      rows[y] = const_cast<png_bytep>(bytes.data() + row_bytes * y);
    }
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
  } catch (...) {
    png_destroy_write_struct(&png, &info);
    throw;
  }
  png_destroy_write_struct(&png, &info);
}

}  // namespace

RgbImage read_rgb_png(const std::filesystem::path& path) {
  Decoded d = decode(path, false);
  if (d.channels != 3 || d.bit_depth != 8) {
    throw Error(ErrorCode::BadFormat, path.string() + ": unsupported color layout");
  }
  RgbImage img;
  img.width = d.width;
  img.height = d.height;
  img.data = std::move(d.bytes);
  return img;
}

void write_rgb_png(const std::filesystem::path& path, const RgbImage& image) {
  require(image.data.size() == static_cast<std::size_t>(image.width) * image.height * 3,
          "write_rgb_png: size mismatch");
  encode(path, image.width, image.height, PNG_COLOR_TYPE_RGB, 8, image.data,
         static_cast<std::size_t>(image.width) * 3);
}

DepthMap read_depth_png(const std::filesystem::path& path) {
  Decoded d = decode(path, true);
  DepthMap depth(d.width, d.height);
  for (std::size_t i = 0; i < depth.meters.size(); ++i) {
    const std::uint16_t mm =
        static_cast<std::uint16_t>((d.bytes[2 * i] << 8) | d.bytes[2 * i + 1]);
    depth.meters[i] = (mm == 0 || mm == kInvalidDepthMm) ? 0.0f : static_cast<float>(mm) / 1000.0f;
  }
  return depth;
}

void write_depth_png(const std::filesystem::path& path, const DepthMap& depth) {
  require(depth.meters.size() == static_cast<std::size_t>(depth.width) * depth.height,
          "write_depth_png: size mismatch");
  std::vector<std::uint8_t> bytes(depth.meters.size() * 2);
  for (std::size_t i = 0; i < depth.meters.size(); ++i) {
    const float m = depth.meters[i];
    std::uint16_t mm = kInvalidDepthMm;
    if (m > 0.0f && std::isfinite(m)) {
      const double r = std::round(static_cast<double>(m) * 1000.0);
      if (r >= 1.0 && r < kInvalidDepthMm) mm = static_cast<std::uint16_t>(r);
    }
    bytes[2 * i] = static_cast<std::uint8_t>(mm >> 8);
    bytes[2 * i + 1] = static_cast<std::uint8_t>(mm & 0xff);
  }
  encode(path, depth.width, depth.height, PNG_COLOR_TYPE_GRAY, 16, bytes,
         static_cast<std::size_t>(depth.width) * 2);
}

}  // namespace fsreloc
