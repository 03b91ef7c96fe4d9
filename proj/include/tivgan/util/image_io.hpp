// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace tivgan {

/// 8-bit interleaved image (RGB when channels == 3).
struct Image8 {
  int width = 0;
  int height = 0;
  int channels = 3;
  std::vector<std::uint8_t> pixels;
};

Image8 read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const Image8& image);

/// Planar [C, H, W] frame in [-1, 1] -> 8-bit image (0 <-> -1, 255 <-> 1).
Image8 frame_to_image(std::span<const float> chw, int channels, int height, int width);

/// Bilinear resize to `size` x `size`, gray expanded / alpha dropped to
/// `channels`, scaled to [-1, 1], written planar into `chw`.
void image_to_frame(const Image8& image, int channels, int size, std::span<float> chw);

/// Side-by-side concatenation of equally tall images.
Image8 hstack(std::span<const Image8> images);

/// Animated, looping GIF89a with a fixed 6x6x6 color cube.
void write_gif(const std::filesystem::path& path, std::span<const Image8> frames, int delay_centiseconds = 10);

}  // namespace tivgan
