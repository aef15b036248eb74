#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace specpipe {

// Row-major interleaved 8-bit image; channels = 1 (gray) or 3 (RGB).
struct ImageU8 {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t channels = 1;
  std::vector<std::uint8_t> pixels;

  std::size_t size() const { return width * height * channels; }
  std::uint8_t& at(std::size_t x, std::size_t y, std::size_t c) {
    return pixels[(y * width + x) * channels + c];
  }
  std::uint8_t at(std::size_t x, std::size_t y, std::size_t c) const {
    return pixels[(y * width + x) * channels + c];
  }
};

using TextChunks = std::vector<std::pair<std::string, std::string>>;

// Non-interlaced 8-bit PNG with one tEXt chunk per (keyword, value) pair.
std::vector<std::uint8_t> encode_png(const ImageU8& image,
                                     const TextChunks& text = {});

// Accepts what the encoder produces (8-bit gray or RGB, any filter types);
// tEXt chunks are appended to *text when given.
ImageU8 decode_png(const std::vector<std::uint8_t>& bytes,
                   TextChunks* text = nullptr);

void write_png_file(const std::string& path, const ImageU8& image,
                    const TextChunks& text = {});
ImageU8 read_png_file(const std::string& path, TextChunks* text = nullptr);

}  // namespace specpipe
