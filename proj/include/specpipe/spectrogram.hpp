#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace specpipe {

enum class SpectrogramMode { MelSingle, MelMono3, Superlet };

const char* to_string(SpectrogramMode mode);
SpectrogramMode parse_spectrogram_mode(const std::string& text);

// channels x bands x frames, row-major (channel, band, frame). Values are
// decibels clamped at db_floor; db_ceil records the observed maximum so that
// renderers can normalize relative to it.
struct SpectrogramTensor {
  std::size_t channels = 0;
  std::size_t bands = 0;
  std::size_t frames = 0;
  std::vector<double> data;
  SpectrogramMode mode = SpectrogramMode::MelSingle;
  double db_floor = -80.0;
  double db_ceil = 0.0;

  static SpectrogramTensor zeros(std::size_t channels, std::size_t bands, std::size_t frames,
                                 SpectrogramMode mode) {
    SpectrogramTensor t;
    t.channels = channels;
    t.bands = bands;
    t.frames = frames;
    t.data.assign(channels * bands * frames, 0.0);
    t.mode = mode;
    return t;
  }

  double& at(std::size_t c, std::size_t b, std::size_t f) {
    return data[(c * bands + b) * frames + f];
  }
  double at(std::size_t c, std::size_t b, std::size_t f) const {
    return data[(c * bands + b) * frames + f];
  }
  // shape product; equals data.size() for a well-formed tensor
  std::size_t size() const { return channels * bands * frames; }
};

}  // namespace specpipe
