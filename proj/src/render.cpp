#include "specpipe/render.hpp"

#include <algorithm>
#include <cmath>

#include "specpipe/error.hpp"

namespace specpipe {

const std::array<Rgb8, 256> kDefaultColormap = {{
    {68, 1, 84}, {68, 2, 86}, {69, 4, 87}, {69, 5, 89},
    {70, 7, 90}, {70, 8, 92}, {70, 10, 93}, {70, 11, 94},
    {71, 13, 96}, {71, 14, 97}, {71, 16, 99}, {71, 17, 100},
    {71, 19, 101}, {72, 20, 103}, {72, 22, 104}, {72, 23, 105},
    {72, 24, 106}, {72, 26, 108}, {72, 27, 109}, {72, 28, 110},
    {72, 29, 111}, {72, 31, 112}, {72, 32, 113}, {72, 33, 115},
    {72, 35, 116}, {72, 36, 117}, {72, 37, 118}, {72, 38, 119},
    {72, 40, 120}, {72, 41, 121}, {71, 42, 122}, {71, 44, 122},
    {71, 45, 123}, {71, 46, 124}, {71, 47, 125}, {70, 48, 126},
    {70, 50, 126}, {70, 51, 127}, {70, 52, 128}, {69, 53, 129},
    {69, 55, 129}, {69, 56, 130}, {68, 57, 131}, {68, 58, 131},
    {68, 59, 132}, {67, 61, 132}, {67, 62, 133}, {66, 63, 133},
    {66, 64, 134}, {66, 65, 134}, {65, 66, 135}, {65, 68, 135},
    {64, 69, 136}, {64, 70, 136}, {63, 71, 136}, {63, 72, 137},
    {62, 73, 137}, {62, 74, 137}, {62, 76, 138}, {61, 77, 138},
    {61, 78, 138}, {60, 79, 138}, {60, 80, 139}, {59, 81, 139},
    {59, 82, 139}, {58, 83, 139}, {58, 84, 140}, {57, 85, 140},
    {57, 86, 140}, {56, 88, 140}, {56, 89, 140}, {55, 90, 140},
    {55, 91, 141}, {54, 92, 141}, {54, 93, 141}, {53, 94, 141},
    {53, 95, 141}, {52, 96, 141}, {52, 97, 141}, {51, 98, 141},
    {51, 99, 141}, {50, 100, 142}, {50, 101, 142}, {49, 102, 142},
    {49, 103, 142}, {49, 104, 142}, {48, 105, 142}, {48, 106, 142},
    {47, 107, 142}, {47, 108, 142}, {46, 109, 142}, {46, 110, 142},
    {46, 111, 142}, {45, 112, 142}, {45, 113, 142}, {44, 114, 142},
    {44, 114, 142}, {44, 115, 142}, {43, 116, 142}, {43, 117, 142},
    {42, 118, 142}, {42, 119, 142}, {42, 120, 142}, {41, 121, 142},
    {41, 122, 142}, {41, 123, 142}, {40, 124, 142}, {40, 125, 142},
    {39, 126, 142}, {39, 127, 142}, {39, 128, 142}, {38, 129, 142},
    {38, 130, 142}, {38, 130, 142}, {37, 131, 142}, {37, 132, 142},
    {37, 133, 142}, {36, 134, 142}, {36, 135, 142}, {35, 136, 142},
    {35, 137, 142}, {35, 138, 141}, {34, 139, 141}, {34, 140, 141},
    {34, 141, 141}, {33, 142, 141}, {33, 143, 141}, {33, 144, 141},
    {33, 145, 140}, {32, 146, 140}, {32, 146, 140}, {32, 147, 140},
    {31, 148, 140}, {31, 149, 139}, {31, 150, 139}, {31, 151, 139},
    {31, 152, 139}, {31, 153, 138}, {31, 154, 138}, {30, 155, 138},
    {30, 156, 137}, {30, 157, 137}, {31, 158, 137}, {31, 159, 136},
    {31, 160, 136}, {31, 161, 136}, {31, 162, 135}, {31, 162, 135},
    {32, 163, 134}, {32, 164, 134}, {33, 165, 133}, {33, 166, 133},
    {34, 167, 133}, {34, 168, 132}, {35, 169, 131}, {36, 170, 131},
    {37, 171, 130}, {37, 172, 130}, {38, 173, 129}, {39, 173, 129},
    {40, 174, 128}, {41, 175, 127}, {42, 176, 127}, {44, 177, 126},
    {45, 178, 125}, {46, 179, 124}, {47, 180, 124}, {49, 181, 123},
    {50, 182, 122}, {52, 182, 121}, {53, 183, 121}, {55, 184, 120},
    {56, 185, 119}, {58, 186, 118}, {59, 187, 117}, {61, 188, 116},
    {63, 188, 115}, {64, 189, 114}, {66, 190, 113}, {68, 191, 112},
    {70, 192, 111}, {72, 193, 110}, {74, 193, 109}, {76, 194, 108},
    {78, 195, 107}, {80, 196, 106}, {82, 197, 105}, {84, 197, 104},
    {86, 198, 103}, {88, 199, 101}, {90, 200, 100}, {92, 200, 99},
    {94, 201, 98}, {96, 202, 96}, {99, 203, 95}, {101, 203, 94},
    {103, 204, 92}, {105, 205, 91}, {108, 205, 90}, {110, 206, 88},
    {112, 207, 87}, {115, 208, 86}, {117, 208, 84}, {119, 209, 83},
    {122, 209, 81}, {124, 210, 80}, {127, 211, 78}, {129, 211, 77},
    {132, 212, 75}, {134, 213, 73}, {137, 213, 72}, {139, 214, 70},
    {142, 214, 69}, {144, 215, 67}, {147, 215, 65}, {149, 216, 64},
    {152, 216, 62}, {155, 217, 60}, {157, 217, 59}, {160, 218, 57},
    {162, 218, 55}, {165, 219, 54}, {168, 219, 52}, {170, 220, 50},
    {173, 220, 48}, {176, 221, 47}, {178, 221, 45}, {181, 222, 43},
    {184, 222, 41}, {186, 222, 40}, {189, 223, 38}, {192, 223, 37},
    {194, 223, 35}, {197, 224, 33}, {200, 224, 32}, {202, 225, 31},
    {205, 225, 29}, {208, 225, 28}, {210, 226, 27}, {213, 226, 26},
    {216, 226, 25}, {218, 227, 25}, {221, 227, 24}, {223, 227, 24},
    {226, 228, 24}, {229, 228, 25}, {231, 228, 25}, {234, 229, 26},
    {236, 229, 27}, {239, 229, 28}, {241, 229, 29}, {244, 230, 30},
    {246, 230, 32}, {248, 230, 33}, {251, 231, 35}, {253, 231, 37},
}};

SpectrogramTensor normalize(const SpectrogramTensor& t, NormalizeMode mode,
                            double lo, double hi) {
  if (t.data.empty()) throw Error(ErrorCode::ShapeMismatch, "empty tensor");
  SpectrogramTensor out = t;
  double range_lo, range_hi;
  if (mode == NormalizeMode::PerImageMinMax) {
    const auto [mn, mx] = std::minmax_element(t.data.begin(), t.data.end());
    range_lo = *mn;
    range_hi = *mx;
    if (range_hi <= range_lo) {
      std::fill(out.data.begin(), out.data.end(), 0.0);
      out.db_floor = 0.0;
      out.db_ceil = 1.0;
      return out;
    }
  } else {
    range_lo = lo < hi ? lo : t.db_floor;
    range_hi = lo < hi ? hi : t.db_ceil;
    if (!(range_hi > range_lo)) {
      throw Error(ErrorCode::ConfigError, "fixed normalization range is degenerate");
    }
  }
  const double inv = 1.0 / (range_hi - range_lo);
  for (double& v : out.data) {
    v = std::clamp((v - range_lo) * inv, 0.0, 1.0);
  }
  out.db_floor = 0.0;
  out.db_ceil = 1.0;
  return out;
}

std::uint8_t quantize_u8(double v) {
  const double scaled = std::floor(v * 255.0 + 0.5);
  return static_cast<std::uint8_t>(std::clamp(scaled, 0.0, 255.0));
}

ImageU8 apply_colormap(const std::vector<double>& plane, std::size_t bands,
                       std::size_t frames, const std::array<Rgb8, 256>& map) {
  if (plane.size() != bands * frames) {
    throw Error(ErrorCode::ShapeMismatch, "plane size does not match bands x frames");
  }
  ImageU8 img;
  img.width = frames;
  img.height = bands;
  img.channels = 3;
  img.pixels.resize(img.size());
  for (std::size_t b = 0; b < bands; ++b) {
    const std::size_t row = bands - 1 - b;  // low frequencies at the bottom
    for (std::size_t f = 0; f < frames; ++f) {
      const Rgb8& c = map[quantize_u8(plane[b * frames + f])];
      img.at(f, row, 0) = c.r;
      img.at(f, row, 1) = c.g;
      img.at(f, row, 2) = c.b;
    }
  }
  return img;
}

ImageU8 tensor_to_image(const SpectrogramTensor& normalized,
                        const std::array<Rgb8, 256>& map) {
  const SpectrogramTensor& t = normalized;
  if (t.channels == 1) {
    return apply_colormap(t.data, t.bands, t.frames, map);
  }
  if (t.channels != 3) {
    throw Error(ErrorCode::ShapeMismatch, "tensor must have 1 or 3 channels");
  }
  ImageU8 img;
  img.width = t.frames;
  img.height = t.bands;
  img.channels = 3;
  img.pixels.resize(img.size());
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t b = 0; b < t.bands; ++b) {
      const std::size_t row = t.bands - 1 - b;
      for (std::size_t f = 0; f < t.frames; ++f) {
        img.at(f, row, c) = quantize_u8(t.at(c, b, f));
      }
    }
  }
  return img;
}

SpectrogramTensor colormap_tensor(const SpectrogramTensor& normalized,
                                  const std::array<Rgb8, 256>& map) {
  if (normalized.channels != 1) {
    throw Error(ErrorCode::ShapeMismatch, "colormap_tensor needs a 1-channel tensor");
  }
  SpectrogramTensor out;
  out.mode = normalized.mode;
  out.channels = 3;
  out.bands = normalized.bands;
  out.frames = normalized.frames;
  out.db_floor = 0.0;
  out.db_ceil = 1.0;
  const std::size_t plane = normalized.bands * normalized.frames;
  out.data.resize(3 * plane);
  for (std::size_t i = 0; i < plane; ++i) {
    const Rgb8& c = map[quantize_u8(normalized.data[i])];
    out.data[i] = c.r / 255.0;
    out.data[plane + i] = c.g / 255.0;
    out.data[2 * plane + i] = c.b / 255.0;
  }
  return out;
}

std::string image_filename(const std::string& clip_id, long start_ms,
                           SpectrogramMode mode) {
  return clip_id + "_" + std::to_string(start_ms) + "_" + to_string(mode) + ".png";
}

void export_png(const ImageU8& img, const std::string& path,
                const TextChunks& text) {
  write_png_file(path, img, text);
}

namespace {

void fill_rect(ImageU8& img, std::size_t x0, std::size_t y0, std::size_t x1,
               std::size_t y1, Rgb8 c) {
  for (std::size_t y = y0; y < y1 && y < img.height; ++y) {
    for (std::size_t x = x0; x < x1 && x < img.width; ++x) {
      img.at(x, y, 0) = c.r;
      img.at(x, y, 1) = c.g;
      img.at(x, y, 2) = c.b;
    }
  }
}

void draw_line(ImageU8& img, long x0, long y0, long x1, long y1, Rgb8 c) {
  const long dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
  const long dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
  long err = dx + dy;
  for (;;) {
    if (x0 >= 0 && y0 >= 0 && x0 < long(img.width) && y0 < long(img.height)) {
      img.at(std::size_t(x0), std::size_t(y0), 0) = c.r;
      img.at(std::size_t(x0), std::size_t(y0), 1) = c.g;
      img.at(std::size_t(x0), std::size_t(y0), 2) = c.b;
    }
    if (x0 == x1 && y0 == y1) break;
    const long e2 = 2 * err;
    if (e2 >= dy) { err += dy; x0 += sx; }
    if (e2 <= dx) { err += dx; y0 += sy; }
  }
}

}  // namespace

ImageU8 plot_roc(const std::vector<std::pair<double, double>>& points,
                 std::size_t side) {
  ImageU8 img;
  img.width = img.height = std::max<std::size_t>(side, 32);
  img.channels = 3;
  img.pixels.assign(img.size(), 255);
  const long s = long(img.width) - 1;
  const Rgb8 grid{220, 220, 220}, diag{180, 180, 180}, curve{48, 104, 170};
  for (int k = 1; k < 4; ++k) {
    const long p = s * k / 4;
    draw_line(img, p, 0, p, s, grid);
    draw_line(img, 0, p, s, p, grid);
  }
  draw_line(img, 0, s, s, 0, diag);
  draw_line(img, 0, 0, 0, s, Rgb8{0, 0, 0});
  draw_line(img, 0, s, s, s, Rgb8{0, 0, 0});
  auto px = [&](double fpr) { return long(std::lround(fpr * s)); };
  auto py = [&](double tpr) { return s - long(std::lround(tpr * s)); };
  for (std::size_t i = 1; i < points.size(); ++i) {
    draw_line(img, px(points[i - 1].first), py(points[i - 1].second),
              px(points[i].first), py(points[i].second), curve);
  }
  return img;
}

ImageU8 plot_confusion(long tp, long fn, long fp, long tn, std::size_t side) {
  ImageU8 img;
  img.width = img.height = std::max<std::size_t>(side, 32);
  img.channels = 3;
  img.pixels.assign(img.size(), 255);
  const long counts[4] = {tp, fn, fp, tn};  // row-major: truth Fail, truth Pass
  const long total = std::max(1L, tp + fn + fp + tn);
  const std::size_t half = img.width / 2;
  for (int cell = 0; cell < 4; ++cell) {
    const std::size_t cx = (cell % 2) * half;
    const std::size_t cy = (cell / 2) * half;
    const double frac = double(counts[cell]) / double(total);
    const Rgb8& c = kDefaultColormap[quantize_u8(frac)];
    fill_rect(img, cx + 1, cy + 1, cx + half - 1, cy + half - 1, c);
  }
  draw_line(img, long(half), 0, long(half), long(img.height) - 1, Rgb8{0, 0, 0});
  draw_line(img, 0, long(half), long(img.width) - 1, long(half), Rgb8{0, 0, 0});
  return img;
}

}  // namespace specpipe
