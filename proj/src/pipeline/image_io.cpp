// Copyright 2026 The audiosplat Authors
// SPDX-License-Identifier: Apache-2.0
#include "asp/image_io.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <memory>
#include <sstream>

#include "asp/binary_io.hpp"
#include "asp/error.hpp"

namespace asp::io {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using File = std::unique_ptr<std::FILE, FileCloser>;

void image_dims(const NdArray& image, std::size_t& h, std::size_t& w, std::size_t& c) {
  if (image.rank() == 2) {
    h = image.dim(0), w = image.dim(1), c = 1;
  } else if (image.rank() == 3) {
    h = image.dim(0), w = image.dim(1), c = image.dim(2);
  } else {
    throw ShapeError("image must be (H, W) or (H, W, C), got " + shape_string(image.shape()));
  }
}

}  // namespace

void write_float_image(const std::filesystem::path& path, const NdArray& image) {
  std::size_t h, w, c;
  image_dims(image, h, w, c);
  const std::string header =
      "ASPIMG1 " + std::to_string(w) + " " + std::to_string(h) + " " + std::to_string(c) + "\n";
  ByteWriter out;
  out.bytes(header.data(), header.size());
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t i = 0; i < h * w; ++i) out.f32(static_cast<float>(image.storage()[i * c + ch]));
  write_file_atomic(path, out.buffer());
}

NdArray read_float_image(const std::filesystem::path& path) {
  std::vector<char> data = read_file(path);
  const auto nl = std::find(data.begin(), data.end(), '\n');
  if (nl == data.end()) throw ValidationError(path.string() + ": missing float image header");
  std::istringstream header(std::string(data.begin(), nl));
  std::string magic;
  std::size_t w = 0, h = 0, c = 0;
  header >> magic >> w >> h >> c;
  if (magic != "ASPIMG1" || !header || w == 0 || h == 0 || c == 0) {
    throw ValidationError(path.string() + ": bad float image header");
  }
  ByteReader in(std::vector<char>(nl + 1, data.end()), path.string());
  NdArray image(c == 1 ? Shape{h, w} : Shape{h, w, c});
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t i = 0; i < h * w; ++i) image.data()[i * c + ch] = in.f32();
  if (!in.at_end()) throw ValidationError(path.string() + ": trailing bytes after float image");
  return image;
}

void write_png(const std::filesystem::path& path, const NdArray& image) {
  std::size_t h, w, c;
  image_dims(image, h, w, c);
  if (c != 1 && c != 3) throw ShapeError("write_png: expected 1 or 3 channels");
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    File f(std::fopen(tmp.c_str(), "wb"));
    if (!f) throw ValidationError("cannot open " + tmp.string() + " for writing");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (!png || !info || setjmp(png_jmpbuf(png))) {
      png_destroy_write_struct(&png, &info);
      throw ValidationError("libpng failed writing " + path.string());
    }
    png_init_io(png, f.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), 8,
                 c == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<png_byte> row(w * c);
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t i = 0; i < w * c; ++i) {
        const double v = std::clamp(image.storage()[y * w * c + i], 0.0, 1.0);
        row[i] = static_cast<png_byte>(std::lround(v * 255.0));
      }
      png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
  }
  std::filesystem::rename(tmp, path);
}

NdArray read_png(const std::filesystem::path& path) {
  File f(std::fopen(path.c_str(), "rb"));
  if (!f) throw ValidationError("cannot open " + path.string());
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (!png || !info || setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw ValidationError(path.string() + ": not a readable PNG");
  }
  png_init_io(png, f.get());
  png_read_info(png, info);
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  png_set_packing(png);
  png_set_palette_to_rgb(png);
  png_set_expand_gray_1_2_4_to_8(png);
  png_read_update_info(png, info);
  const std::size_t w = png_get_image_width(png, info), h = png_get_image_height(png, info);
  const std::size_t c = png_get_channels(png, info);
  std::vector<png_byte> row(png_get_rowbytes(png, info));
  NdArray image(c == 1 ? Shape{h, w} : Shape{h, w, 3});
  for (std::size_t y = 0; y < h; ++y) {
    png_read_row(png, row.data(), nullptr);
    for (std::size_t x = 0; x < w; ++x)
      for (std::size_t ch = 0; ch < (c == 1 ? 1 : 3); ++ch)
        image.data()[(y * w + x) * (c == 1 ? 1 : 3) + ch] = row[x * c + ch] / 255.0;
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return image;
}

}  // namespace asp::io
