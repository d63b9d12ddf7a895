#pragma once

// Grayscale PNG read/write on top of libpng. Reads 1/2/4/8/16-bit gray
// images (no alpha, no palette); writes 8- or 16-bit gray.

#include <png.h>

#include <cmath>
#include <csetjmp>
#include <cstdint>
#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include "istd/error.hpp"
#include "istd/metrics.hpp"
#include "istd/tensor.hpp"

namespace istd {

struct GrayImage {
  int height = 0;
  int width = 0;
  int bit_depth = 8;                 // 8 or 16 after expansion
  std::vector<std::uint16_t> pixels; // row-major

  std::uint32_t max_value() const { return bit_depth == 16 ? 65535u : 255u; }
};

namespace detail {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] inline void png_error_fn(png_structp png, png_const_charp msg) {
  auto* text = static_cast<std::string*>(png_get_error_ptr(png));
  if (text) *text = msg;
  png_longjmp(png, 1);
}
inline void png_warning_fn(png_structp, png_const_charp) {}

}  // namespace detail

inline GrayImage read_png(const std::string& path) {
  detail::FilePtr file(std::fopen(path.c_str(), "rb"));
  if (!file) fail(ErrorKind::io, "cannot open '" + path + "'");
  unsigned char sig[8];
  if (std::fread(sig, 1, 8, file.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0)
    fail(ErrorKind::input, "'" + path + "' is not a PNG file");

  std::string err;
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, &err, detail::png_error_fn, detail::png_warning_fn);
  if (!png) fail(ErrorKind::io, "libpng init failed");
  png_infop info = png_create_info_struct(png);
  GrayImage img;
  std::vector<png_bytep> rows;
  std::vector<std::uint8_t> raw;
  volatile bool color = false;  // survives longjmp
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(ErrorKind::input, "cannot decode '" + path + "': " + err);
  }
  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  const auto color_type = png_get_color_type(png, info);
  int depth = png_get_bit_depth(png, info);
  if (color_type != PNG_COLOR_TYPE_GRAY) {
    color = true;
  } else {
    if (depth < 8) {
      png_set_expand_gray_1_2_4_to_8(png);
      depth = 8;
    }
    if (depth == 16) png_set_swap(png);  // host little-endian rows
    png_read_update_info(png, info);
    img.height = static_cast<int>(png_get_image_height(png, info));
    img.width = static_cast<int>(png_get_image_width(png, info));
    img.bit_depth = depth;
    const std::size_t stride = png_get_rowbytes(png, info);
    raw.resize(stride * img.height);
    rows.resize(img.height);
    for (int r = 0; r < img.height; ++r) rows[r] = raw.data() + stride * r;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
  }
  png_destroy_read_struct(&png, &info, nullptr);
  if (color) fail(ErrorKind::input, "'" + path + "' is not a grayscale PNG");

  img.pixels.resize(static_cast<std::size_t>(img.height) * img.width);
  const std::size_t stride = raw.size() / std::max(img.height, 1);
  for (int r = 0; r < img.height; ++r)
    for (int c = 0; c < img.width; ++c) {
      const std::uint8_t* row = raw.data() + stride * r;
      img.pixels[static_cast<std::size_t>(r) * img.width + c] =
          depth == 16 ? static_cast<std::uint16_t>(row[2 * c] | (row[2 * c + 1] << 8)) : row[c];
    }
  return img;
}

inline void write_png(const std::string& path, const GrayImage& img) {
  require(img.bit_depth == 8 || img.bit_depth == 16, "PNG output depth must be 8 or 16");
  detail::FilePtr file(std::fopen(path.c_str(), "wb"));
  if (!file) fail(ErrorKind::io, "cannot write '" + path + "'");
  std::string err;
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, &err, detail::png_error_fn, detail::png_warning_fn);
  if (!png) fail(ErrorKind::io, "libpng init failed");
  png_infop info = png_create_info_struct(png);

  const std::size_t stride = static_cast<std::size_t>(img.width) * (img.bit_depth / 8);
  std::vector<std::uint8_t> raw(stride * img.height);
  for (int r = 0; r < img.height; ++r)
    for (int c = 0; c < img.width; ++c) {
      const std::uint16_t v = img.pixels[static_cast<std::size_t>(r) * img.width + c];
      std::uint8_t* row = raw.data() + stride * r;
      if (img.bit_depth == 16) {
        row[2 * c] = static_cast<std::uint8_t>(v >> 8);  // PNG is big-endian
        row[2 * c + 1] = static_cast<std::uint8_t>(v & 0xFF);
      } else {
        row[c] = static_cast<std::uint8_t>(v);
      }
    }
  std::vector<png_bytep> rows(img.height);
  for (int r = 0; r < img.height; ++r) rows[r] = raw.data() + stride * r;

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    fail(ErrorKind::io, "cannot encode '" + path + "': " + err);
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width), static_cast<png_uint_32>(img.height),
               img.bit_depth, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

// Normalizes by the container maximum (255 or 65535).
inline Tensor to_tensor(const GrayImage& img) {
  Tensor t(img.height, img.width, 1);
  const double scale = 1.0 / img.max_value();
  for (std::size_t i = 0; i < img.pixels.size(); ++i)
    t.values()[i] = static_cast<float>(img.pixels[i] * scale);
  return t;
}

inline Mask to_mask(const GrayImage& img) {
  Mask m(img.height, img.width);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) m.bits[i] = img.pixels[i] != 0;
  return m;
}

// [0, 1] tensor to a 16-bit image, rounding to nearest.
inline GrayImage from_tensor16(const Tensor& t) {
  require(t.channels() == 1, "PNG export needs a single-channel tensor");
  GrayImage img{t.height(), t.width(), 16, std::vector<std::uint16_t>(t.pixels())};
  for (std::size_t i = 0; i < img.pixels.size(); ++i)
    img.pixels[i] = static_cast<std::uint16_t>(
        std::lround(std::clamp(static_cast<double>(t.values()[i]), 0.0, 1.0) * 65535.0));
  return img;
}

inline GrayImage from_mask(const Mask& m) {
  GrayImage img{m.height, m.width, 8, std::vector<std::uint16_t>(m.pixels())};
  for (std::size_t i = 0; i < img.pixels.size(); ++i) img.pixels[i] = m.bits[i] ? 255 : 0;
  return img;
}

}  // namespace istd
