// SPDX-License-Identifier: Apache-2.0
// Minimal animated GIF89a encoder: fixed 216-color cube palette, LZW codes
// up to 12 bits with a clear code whenever the table fills.
#include <cmath>
#include <fstream>
#include <vector>

#include "tivgan/errors.hpp"
#include "tivgan/util/image_io.hpp"

namespace tivgan {

namespace {

class BitPacker {
 public:
  void write(std::uint32_t code, int bits) {
    acc_ |= code << used_;
    used_ += bits;
    while (used_ >= 8) {
      bytes_.push_back(static_cast<std::uint8_t>(acc_ & 0xff));
      acc_ >>= 8;
      used_ -= 8;
    }
  }
  std::vector<std::uint8_t> finish() {
    if (used_ > 0) bytes_.push_back(static_cast<std::uint8_t>(acc_ & 0xff));
    acc_ = 0;
    used_ = 0;
    return std::move(bytes_);
  }

 private:
  std::uint32_t acc_ = 0;
  int used_ = 0;
  std::vector<std::uint8_t> bytes_;
};

std::uint8_t palette_index(const Image8& im, std::size_t p) {
  auto level = [](int v) { return static_cast<int>(std::lround(v * 5.0 / 255.0)); };
  int r, g, b;
  if (im.channels >= 3) {
    r = im.pixels[p * im.channels];
    g = im.pixels[p * im.channels + 1];
    b = im.pixels[p * im.channels + 2];
  } else {
    r = g = b = im.pixels[p * im.channels];
  }
  return static_cast<std::uint8_t>(level(r) * 36 + level(g) * 6 + level(b));
}

std::vector<std::uint8_t> lzw_encode(const std::vector<std::uint8_t>& indices) {
  constexpr int kMinCodeSize = 8;
  constexpr std::uint32_t kClear = 1u << kMinCodeSize;
  std::vector<std::uint16_t> table(4096 * 256, 0);
  BitPacker out;
  int code_size = kMinCodeSize + 1;
  std::uint32_t max_code = kClear + 1;
  out.write(kClear, code_size);
  int cur = -1;
  for (std::uint8_t v : indices) {
    if (cur < 0) {
      cur = v;
    } else if (auto next = table[static_cast<std::size_t>(cur) * 256 + v]; next != 0) {
      cur = next;
    } else {
      out.write(static_cast<std::uint32_t>(cur), code_size);
      table[static_cast<std::size_t>(cur) * 256 + v] = static_cast<std::uint16_t>(++max_code);
      if (max_code >= (1u << code_size)) ++code_size;
      if (max_code == 4095) {
        out.write(kClear, code_size);
        std::fill(table.begin(), table.end(), 0);
        code_size = kMinCodeSize + 1;
        max_code = kClear + 1;
      }
      cur = v;
    }
  }
  out.write(static_cast<std::uint32_t>(cur), code_size);
  out.write(kClear, code_size);
  out.write(kClear + 1, kMinCodeSize + 1);
  return out.finish();
}

void put16(std::ofstream& os, int v) {
  os.put(static_cast<char>(v & 0xff));
  os.put(static_cast<char>((v >> 8) & 0xff));
}

}  // namespace

void write_gif(const std::filesystem::path& path, std::span<const Image8> frames, int delay_centiseconds) {
  if (frames.empty()) throw InvalidInput("write_gif: no frames");
  const int w = frames.front().width, h = frames.front().height;
  for (const auto& f : frames)
    if (f.width != w || f.height != h) throw InvalidInput("write_gif: frames differ in size");

  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot write " + path.string());
  os.write("GIF89a", 6);
  put16(os, w);
  put16(os, h);
  os.put(static_cast<char>(0xF7));  // global table, 8 bits/primary, 256 entries
  os.put(0);
  os.put(0);
  for (int i = 0; i < 256; ++i) {
    const int idx = i < 216 ? i : 0;
    for (int c : {idx / 36, (idx / 6) % 6, idx % 6}) os.put(static_cast<char>(c * 51));
  }
  // NETSCAPE2.0 loop-forever extension.
  const char loop[] = {'\x21', '\xFF', '\x0B', 'N', 'E', 'T', 'S', 'C', 'A', 'P', 'E',
                       '2',    '.',    '0',    '\x03', '\x01', '\x00', '\x00', '\x00'};
  os.write(loop, sizeof(loop));

  for (const auto& f : frames) {
    os.put(0x21);
    os.put(static_cast<char>(0xF9));
    os.put(4);
    os.put(0x04);  // dispose: leave in place
    put16(os, delay_centiseconds);
    os.put(0);
    os.put(0);

    os.put(0x2C);
    put16(os, 0);
    put16(os, 0);
    put16(os, w);
    put16(os, h);
    os.put(0);

    std::vector<std::uint8_t> idx(static_cast<std::size_t>(w) * h);
    for (std::size_t p = 0; p < idx.size(); ++p) idx[p] = palette_index(f, p);
    const auto data = lzw_encode(idx);
    os.put(8);
    for (std::size_t off = 0; off < data.size(); off += 255) {
      const auto n = std::min<std::size_t>(255, data.size() - off);
      os.put(static_cast<char>(n));
      os.write(reinterpret_cast<const char*>(data.data() + off), static_cast<std::streamsize>(n));
    }
    os.put(0);
  }
  os.put(0x3B);
  if (!os) throw FormatError("failed writing " + path.string());
}

}  // namespace tivgan
