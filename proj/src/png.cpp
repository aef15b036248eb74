#include "specpipe/png.hpp"

#include <zlib.h>

#include <cstring>
#include <fstream>

#include "specpipe/error.hpp"

namespace specpipe {

namespace {

constexpr std::uint8_t kSignature[8] = {137, 80, 78, 71, 13, 10, 26, 10};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return (static_cast<std::uint32_t>(p[0]) << 24) |
         (static_cast<std::uint32_t>(p[1]) << 16) |
         (static_cast<std::uint32_t>(p[2]) << 8) | static_cast<std::uint32_t>(p[3]);
}

void append_chunk(std::vector<std::uint8_t>& out, const char type[4],
                  const std::uint8_t* data, std::size_t len) {
  put_u32(out, static_cast<std::uint32_t>(len));
  const std::size_t type_pos = out.size();
  out.insert(out.end(), type, type + 4);
  if (len > 0) out.insert(out.end(), data, data + len);
  std::uint32_t crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, out.data() + type_pos, static_cast<uInt>(4 + len));
  put_u32(out, crc);
}

std::vector<std::uint8_t> deflate_bytes(const std::vector<std::uint8_t>& raw) {
  uLongf bound = compressBound(static_cast<uLong>(raw.size()));
  std::vector<std::uint8_t> packed(bound);
  if (compress2(packed.data(), &bound, raw.data(),
                static_cast<uLong>(raw.size()), Z_BEST_SPEED) != Z_OK) {
    throw Error(ErrorCode::ConfigError, "deflate failed");
  }
  packed.resize(bound);
  return packed;
}

std::vector<std::uint8_t> inflate_bytes(const std::vector<std::uint8_t>& packed,
                                        std::size_t expected) {
  std::vector<std::uint8_t> raw(expected);
  uLongf got = static_cast<uLongf>(expected);
  const int rc = uncompress(raw.data(), &got, packed.data(),
                            static_cast<uLong>(packed.size()));
  if (rc != Z_OK || got != expected) {
    throw Error(ErrorCode::TruncatedFile, "PNG image data does not inflate cleanly");
  }
  return raw;
}

std::uint8_t paeth(std::uint8_t a, std::uint8_t b, std::uint8_t c) {
  const int p = int(a) + int(b) - int(c);
  const int pa = std::abs(p - int(a));
  const int pb = std::abs(p - int(b));
  const int pc = std::abs(p - int(c));
  if (pa <= pb && pa <= pc) return a;
  if (pb <= pc) return b;
  return c;
}

}  // namespace

std::vector<std::uint8_t> encode_png(const ImageU8& image, const TextChunks& text) {
  if (image.width == 0 || image.height == 0 ||
      (image.channels != 1 && image.channels != 3)) {
    throw Error(ErrorCode::ConfigError, "PNG encoder needs a non-empty 1- or 3-channel image");
  }
  if (image.pixels.size() != image.size()) {
    throw Error(ErrorCode::ShapeMismatch, "pixel buffer does not match image dimensions");
  }

  const std::size_t stride = image.width * image.channels;
  std::vector<std::uint8_t> raw;
  raw.reserve(image.height * (stride + 1));
  for (std::size_t y = 0; y < image.height; ++y) {
    raw.push_back(0);  // filter: None
    const std::uint8_t* row = image.pixels.data() + y * stride;
    raw.insert(raw.end(), row, row + stride);
  }
  const std::vector<std::uint8_t> idat = deflate_bytes(raw);

  std::vector<std::uint8_t> out;
  out.insert(out.end(), kSignature, kSignature + 8);

  std::uint8_t ihdr[13];
  ihdr[0] = static_cast<std::uint8_t>(image.width >> 24);
  ihdr[1] = static_cast<std::uint8_t>(image.width >> 16);
  ihdr[2] = static_cast<std::uint8_t>(image.width >> 8);
  ihdr[3] = static_cast<std::uint8_t>(image.width);
  ihdr[4] = static_cast<std::uint8_t>(image.height >> 24);
  ihdr[5] = static_cast<std::uint8_t>(image.height >> 16);
  ihdr[6] = static_cast<std::uint8_t>(image.height >> 8);
  ihdr[7] = static_cast<std::uint8_t>(image.height);
  ihdr[8] = 8;                                     // bit depth
  ihdr[9] = image.channels == 1 ? 0 : 2;           // gray / truecolor
  ihdr[10] = 0;                                    // compression
  ihdr[11] = 0;                                    // filter method
  ihdr[12] = 0;                                    // non-interlaced
  append_chunk(out, "IHDR", ihdr, 13);

  for (const auto& [key, value] : text) {
    if (key.empty() || key.size() > 79) {
      throw Error(ErrorCode::ConfigError, "tEXt keyword must be 1..79 bytes");
    }
    std::vector<std::uint8_t> body(key.begin(), key.end());
    body.push_back(0);
    body.insert(body.end(), value.begin(), value.end());
    append_chunk(out, "tEXt", body.data(), body.size());
  }

  append_chunk(out, "IDAT", idat.data(), idat.size());
  append_chunk(out, "IEND", nullptr, 0);
  return out;
}

ImageU8 decode_png(const std::vector<std::uint8_t>& bytes, TextChunks* text) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kSignature, 8) != 0) {
    throw Error(ErrorCode::UnsupportedEncoding, "not a PNG stream");
  }

  ImageU8 image;
  std::vector<std::uint8_t> idat;
  bool have_ihdr = false;
  std::size_t pos = 8;
  while (pos + 8 <= bytes.size()) {
    const std::uint32_t len = get_u32(bytes.data() + pos);
    if (pos + 12 + len > bytes.size()) {
      throw Error(ErrorCode::TruncatedFile, "PNG chunk overruns the stream");
    }
    char type[5] = {0};
    std::memcpy(type, bytes.data() + pos + 4, 4);
    const std::uint8_t* data = bytes.data() + pos + 8;

    if (std::strcmp(type, "IHDR") == 0) {
      if (len != 13) throw Error(ErrorCode::TruncatedFile, "bad IHDR length");
      image.width = get_u32(data);
      image.height = get_u32(data + 4);
      const std::uint8_t depth = data[8], color = data[9], interlace = data[12];
      if (depth != 8 || (color != 0 && color != 2) || interlace != 0) {
        throw Error(ErrorCode::UnsupportedEncoding,
                    "only 8-bit non-interlaced gray/RGB PNG is supported");
      }
      image.channels = color == 0 ? 1 : 3;
      have_ihdr = true;
    } else if (std::strcmp(type, "IDAT") == 0) {
      idat.insert(idat.end(), data, data + len);
    } else if (std::strcmp(type, "tEXt") == 0 && text != nullptr) {
      const std::uint8_t* sep =
          static_cast<const std::uint8_t*>(std::memchr(data, 0, len));
      if (sep != nullptr) {
        text->emplace_back(std::string(data, sep),
                           std::string(sep + 1, data + len));
      }
    } else if (std::strcmp(type, "IEND") == 0) {
      break;
    }
    pos += 12 + len;
  }
  if (!have_ihdr || idat.empty() || image.width == 0 || image.height == 0) {
    throw Error(ErrorCode::TruncatedFile, "PNG stream is missing IHDR or IDAT");
  }

  const std::size_t stride = image.width * image.channels;
  const std::size_t bpp = image.channels;
  const std::vector<std::uint8_t> raw =
      inflate_bytes(idat, image.height * (stride + 1));

  image.pixels.assign(image.height * stride, 0);
  std::vector<std::uint8_t> prev(stride, 0);
  for (std::size_t y = 0; y < image.height; ++y) {
    const std::uint8_t filter = raw[y * (stride + 1)];
    const std::uint8_t* src = raw.data() + y * (stride + 1) + 1;
    std::uint8_t* dst = image.pixels.data() + y * stride;
    for (std::size_t x = 0; x < stride; ++x) {
      const std::uint8_t left = x >= bpp ? dst[x - bpp] : 0;
      const std::uint8_t up = prev[x];
      const std::uint8_t ul = x >= bpp ? prev[x - bpp] : 0;
      std::uint8_t v = src[x];
      switch (filter) {
        case 0: break;
        case 1: v = static_cast<std::uint8_t>(v + left); break;
        case 2: v = static_cast<std::uint8_t>(v + up); break;
        case 3: v = static_cast<std::uint8_t>(v + (int(left) + int(up)) / 2); break;
        case 4: v = static_cast<std::uint8_t>(v + paeth(left, up, ul)); break;
        default:
          throw Error(ErrorCode::UnsupportedEncoding, "unknown PNG filter type");
      }
      dst[x] = v;
    }
    std::memcpy(prev.data(), dst, stride);
  }
  return image;
}

void write_png_file(const std::string& path, const ImageU8& image,
                    const TextChunks& text) {
  const std::vector<std::uint8_t> bytes = encode_png(image, text);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::MissingFile, "cannot open '" + path + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::TruncatedFile, "short write to '" + path + "'");
}

ImageU8 read_png_file(const std::string& path, TextChunks* text) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingFile, "cannot open '" + path + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_png(bytes, text);
}

}  // namespace specpipe
