#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "specpipe/audio.hpp"
#include "specpipe/fft.hpp"
#include "specpipe/spectrogram.hpp"

namespace specpipe {

enum class WindowKind { Hann, Hamming };

// Periodic analysis window of the given length.
std::vector<double> make_window(WindowKind kind, std::size_t n);

// mel(f) = 2595 * log10(1 + f/700) (HTK convention) and its inverse.
double hz_to_mel(double hz);
double mel_to_hz(double mel);

struct ComplexSpectrogram {
  std::size_t n_fft = 0;
  std::size_t hop = 0;
  WindowKind window_kind = WindowKind::Hann;
  std::size_t n_bins = 0;    // n_fft/2 + 1
  std::size_t n_frames = 0;  // 1 + floor((n_samples - n_fft)/hop), no padding
  std::vector<cdouble> bins;  // row-major (bin, frame)

  cdouble at(std::size_t bin, std::size_t frame) const { return bins[bin * n_frames + frame]; }
  cdouble& at(std::size_t bin, std::size_t frame) { return bins[bin * n_frames + frame]; }
};

struct FilterbankMatrix {
  std::size_t n_mels = 0;
  std::size_t n_fft = 0;
  double fmin = 0.0;
  double fmax = 0.0;
  std::vector<double> weights;  // row-major (mel, bin), bins = n_fft/2 + 1

  double at(std::size_t mel, std::size_t bin) const {
    return weights[mel * (n_fft / 2 + 1) + bin];
  }
};

struct FftSetting {
  std::size_t n_fft = 2048;
  std::size_t hop = 512;

  bool operator==(const FftSetting&) const = default;
};

struct MelConfig {
  std::array<FftSetting, 3> settings{{{1024, 256}, {2048, 512}, {4096, 1024}}};
  std::size_t n_mels = 128;
  WindowKind window = WindowKind::Hann;
  double fmin = 0.0;
  double fmax = 0.0;  // 0 means sample_rate / 2
  double db_floor = -80.0;
};

// Frame t is the DFT of window ⊙ samples[t*hop .. t*hop + n_fft).
ComplexSpectrogram stft(const std::vector<double>& samples, std::size_t n_fft, std::size_t hop,
                        WindowKind window_kind);

// Triangular filters with n_mels + 2 break frequencies uniformly spaced on the
// mel scale; rows are peak-normalized to 1.
FilterbankMatrix mel_filterbank(std::size_t n_mels, std::size_t n_fft, int sample_rate,
                                double fmin, double fmax);

// 10*log10(fb · |X|^2 + 1e-10), clamped at db_floor.
SpectrogramTensor log_mel(const ComplexSpectrogram& spec, const FilterbankMatrix& fb,
                          double db_floor);

SpectrogramTensor mel_single(const AudioSegment& seg, const FftSetting& setting,
                             const MelConfig& cfg);

// Three log-mel planes at the configured FFT settings, each linearly
// interpolated along time to the middle setting's frame count and stacked as
// channels in config order.
SpectrogramTensor mel_mono3(const AudioSegment& seg, const MelConfig& cfg);

}  // namespace specpipe
