#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "specpipe/png.hpp"
#include "specpipe/spectrogram.hpp"

namespace specpipe {

struct Rgb8 {
  std::uint8_t r, g, b;
};

// 256-entry perceptually uniform map with strictly non-decreasing
// Rec.601 luminance.
extern const std::array<Rgb8, 256> kDefaultColormap;

enum class NormalizeMode { PerImageMinMax, FixedRange };

// Map a tensor into [0,1]. PerImageMinMax uses the tensor's own extremes
// (a constant tensor becomes all zeros); FixedRange clamps to
// [t.db_floor, t.db_ceil] and maps that interval affinely. `lo`/`hi`
// override the tensor's range when both are given (lo < hi).
SpectrogramTensor normalize(const SpectrogramTensor& t, NormalizeMode mode,
                            double lo = 0.0, double hi = 0.0);

// Quantize v in [0,1] to a byte, round half up.
std::uint8_t quantize_u8(double v);

// Single [0,1] plane (band-major, `bands` rows of `frames` values) to RGB.
// Row order is flipped so the lowest band lands on the bottom image row.
ImageU8 apply_colormap(const std::vector<double>& plane, std::size_t bands,
                       std::size_t frames,
                       const std::array<Rgb8, 256>& map = kDefaultColormap);

// Normalized tensor to an image: 1 channel goes through the colormap,
// 3 channels map to R/G/B planes directly (grayscale per channel).
ImageU8 tensor_to_image(const SpectrogramTensor& normalized,
                        const std::array<Rgb8, 256>& map = kDefaultColormap);

// Float twin of the colormap path: a 1-channel [0,1] tensor becomes a
// 3-channel tensor of table entries / 255, so the classifier sees the
// same representation the PNG shows. Band order is unchanged.
SpectrogramTensor colormap_tensor(const SpectrogramTensor& normalized,
                                  const std::array<Rgb8, 256>& map = kDefaultColormap);

// `{clip_id}_{start_ms}_{mode}.png`
std::string image_filename(const std::string& clip_id, long start_ms,
                           SpectrogramMode mode);

void export_png(const ImageU8& img, const std::string& path,
                const TextChunks& text = {});

// Minimal plotters (no text labels; see README).
ImageU8 plot_roc(const std::vector<std::pair<double, double>>& points,
                 std::size_t side = 256);
ImageU8 plot_confusion(long tp, long fn, long fp, long tn,
                       std::size_t side = 256);

}  // namespace specpipe
