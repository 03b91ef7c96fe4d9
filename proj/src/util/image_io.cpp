// SPDX-License-Identifier: Apache-2.0
#include "tivgan/util/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

#include "tivgan/errors.hpp"

namespace tivgan {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void png_error_fn(png_structp png, png_const_charp msg) {
  auto* what = static_cast<std::string*>(png_get_error_ptr(png));
  if (what) *what = msg;
  png_longjmp(png, 1);
}

void png_warning_fn(png_structp, png_const_charp) {}

}  // namespace

Image8 read_png(const std::filesystem::path& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw FormatError("cannot open image " + path.string());
  unsigned char sig[8];
  if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8))
    throw FormatError("not a PNG file: " + path.string());

  std::string err;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err, png_error_fn, png_warning_fn);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError("libpng initialisation failed for " + path.string());
  }
  Image8 img;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError("undecodable PNG " + path.string() + ": " + err);
  }
  png_init_io(png, fp.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  const auto color = png_get_color_type(png, info);
  if (png_get_bit_depth(png, info) == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  png_read_update_info(png, info);
  img.width = static_cast<int>(png_get_image_width(png, info));
  img.height = static_cast<int>(png_get_image_height(png, info));
  img.channels = png_get_channels(png, info);
  img.pixels.resize(static_cast<std::size_t>(img.width) * img.height * img.channels);
  rows.resize(static_cast<std::size_t>(img.height));
  for (int y = 0; y < img.height; ++y)
    rows[static_cast<std::size_t>(y)] = img.pixels.data() + static_cast<std::size_t>(y) * img.width * img.channels;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

void write_png(const std::filesystem::path& path, const Image8& image) {
  if (image.channels != 1 && image.channels != 3 && image.channels != 4)
    throw InvalidInput("write_png: unsupported channel count " + std::to_string(image.channels));
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw FormatError("cannot write image " + path.string());
  std::string err;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err, png_error_fn, png_warning_fn);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw FormatError("libpng initialisation failed for " + path.string());
  }
  std::vector<png_bytep> rows(static_cast<std::size_t>(image.height));
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw FormatError("failed writing PNG " + path.string() + ": " + err);
  }
  png_init_io(png, fp.get());
  const int color = image.channels == 1   ? PNG_COLOR_TYPE_GRAY
                    : image.channels == 3 ? PNG_COLOR_TYPE_RGB
                                          : PNG_COLOR_TYPE_RGBA;
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width), static_cast<png_uint_32>(image.height), 8, color,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < image.height; ++y)
    rows[static_cast<std::size_t>(y)] = const_cast<png_bytep>(
        image.pixels.data() + static_cast<std::size_t>(y) * image.width * image.channels);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

Image8 frame_to_image(std::span<const float> chw, int channels, int height, int width) {
  if (static_cast<std::size_t>(channels) * height * width != chw.size())
    throw InvalidInput("frame_to_image: frame size does not match dimensions");
  Image8 img{width, height, channels, {}};
  img.pixels.resize(chw.size());
  const std::size_t plane = static_cast<std::size_t>(height) * width;
  for (int c = 0; c < channels; ++c)
    for (std::size_t p = 0; p < plane; ++p) {
      const double v = std::clamp((static_cast<double>(chw[c * plane + p]) + 1.0) * 127.5, 0.0, 255.0);
      img.pixels[p * channels + c] = static_cast<std::uint8_t>(std::lround(v));
    }
  return img;
}

void image_to_frame(const Image8& image, int channels, int size, std::span<float> chw) {
  const std::size_t plane = static_cast<std::size_t>(size) * size;
  if (chw.size() != plane * channels) throw InvalidInput("image_to_frame: output buffer has wrong size");
  auto sample = [&](int x, int y, int c) -> double {
    const int src_c = image.channels >= 3 ? std::min(c, 2) : 0;
    return image.pixels[(static_cast<std::size_t>(y) * image.width + x) * image.channels + src_c];
  };
  const double sx = static_cast<double>(image.width) / size;
  const double sy = static_cast<double>(image.height) / size;
  for (int c = 0; c < channels; ++c)
    for (int y = 0; y < size; ++y)
      for (int x = 0; x < size; ++x) {
        double v;
        if (image.width == size && image.height == size) {
          v = sample(x, y, c);
        } else {
          const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, image.width - 1.0);
          const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, image.height - 1.0);
          const int x0 = static_cast<int>(fx), y0 = static_cast<int>(fy);
          const int x1 = std::min(x0 + 1, image.width - 1), y1 = std::min(y0 + 1, image.height - 1);
          const double ax = fx - x0, ay = fy - y0;
          v = (1 - ay) * ((1 - ax) * sample(x0, y0, c) + ax * sample(x1, y0, c)) +
              ay * ((1 - ax) * sample(x0, y1, c) + ax * sample(x1, y1, c));
        }
        chw[c * plane + static_cast<std::size_t>(y) * size + x] = static_cast<float>(v / 127.5 - 1.0);
      }
}

Image8 hstack(std::span<const Image8> images) {
  if (images.empty()) return {};
  Image8 out{0, images.front().height, images.front().channels, {}};
  for (const auto& im : images) {
    if (im.height != out.height || im.channels != out.channels)
      throw InvalidInput("hstack: images differ in height or channels");
    out.width += im.width;
  }
  out.pixels.resize(static_cast<std::size_t>(out.width) * out.height * out.channels);
  int x0 = 0;
  for (const auto& im : images) {
    for (int y = 0; y < im.height; ++y)
      std::copy_n(im.pixels.data() + static_cast<std::size_t>(y) * im.width * im.channels,
                  static_cast<std::size_t>(im.width) * im.channels,
                  out.pixels.data() + (static_cast<std::size_t>(y) * out.width + x0) * out.channels);
    x0 += im.width;
  }
  return out;
}

}  // namespace tivgan
