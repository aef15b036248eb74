#include "specpipe/stft_mel.hpp"

#include <algorithm>
#include <cmath>

#include "specpipe/error.hpp"

namespace specpipe {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kPowerEps = 1e-10;

// Linear interpolation of a (bands x src) plane to dst frames; endpoints map
// to endpoints.
std::vector<double> interp_time(const std::vector<double>& plane, std::size_t bands,
                                std::size_t src, std::size_t dst) {
  std::vector<double> out(bands * dst);
  for (std::size_t b = 0; b < bands; ++b) {
    for (std::size_t j = 0; j < dst; ++j) {
      double pos = dst > 1 && src > 1
                       ? static_cast<double>(j) * static_cast<double>(src - 1) /
                             static_cast<double>(dst - 1)
                       : 0.0;
      auto i0 = static_cast<std::size_t>(pos);
      std::size_t i1 = std::min(i0 + 1, src - 1);
      double frac = pos - static_cast<double>(i0);
      out[b * dst + j] = (1.0 - frac) * plane[b * src + i0] + frac * plane[b * src + i1];
    }
  }
  return out;
}

}  // namespace

std::vector<double> make_window(WindowKind kind, std::size_t n) {
  std::vector<double> w(n);
  const double a = kind == WindowKind::Hann ? 0.5 : 0.54;
  const double b = kind == WindowKind::Hann ? 0.5 : 0.46;
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = a - b * std::cos(2.0 * kPi * static_cast<double>(i) / static_cast<double>(n));
  }
  return w;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

ComplexSpectrogram stft(const std::vector<double>& samples, std::size_t n_fft, std::size_t hop,
                        WindowKind window_kind) {
  if (!is_power_of_two(n_fft)) {
    throw Error(ErrorCode::ConfigError, "n_fft must be a power of two");
  }
  if (hop == 0) throw Error(ErrorCode::ConfigError, "hop must be positive");
  if (samples.size() < n_fft) {
    throw Error(ErrorCode::InputTooShort, std::to_string(samples.size()) + " samples < n_fft " +
                                              std::to_string(n_fft));
  }

  ComplexSpectrogram out;
  out.n_fft = n_fft;
  out.hop = hop;
  out.window_kind = window_kind;
  out.n_bins = n_fft / 2 + 1;
  out.n_frames = 1 + (samples.size() - n_fft) / hop;
  out.bins.resize(out.n_bins * out.n_frames);

  const std::vector<double> window = make_window(window_kind, n_fft);
  std::vector<cdouble> frame(n_fft);
  for (std::size_t t = 0; t < out.n_frames; ++t) {
    const std::size_t start = t * hop;
    for (std::size_t i = 0; i < n_fft; ++i) {
      frame[i] = cdouble(samples[start + i] * window[i], 0.0);
    }
    fft(frame);
    for (std::size_t k = 0; k < out.n_bins; ++k) out.at(k, t) = frame[k];
  }
  return out;
}

FilterbankMatrix mel_filterbank(std::size_t n_mels, std::size_t n_fft, int sample_rate,
                                double fmin, double fmax) {
  if (n_mels < 2) throw Error(ErrorCode::ConfigError, "n_mels must be >= 2");
  const double nyquist = sample_rate / 2.0;
  if (fmax <= 0.0) fmax = nyquist;
  if (!(fmin >= 0.0 && fmin < fmax && fmax <= nyquist)) {
    throw Error(ErrorCode::ConfigError, "need 0 <= fmin < fmax <= sample_rate/2");
  }

  const std::size_t n_bins = n_fft / 2 + 1;
  const double mel_lo = hz_to_mel(fmin);
  const double mel_hi = hz_to_mel(fmax);
  std::vector<double> breaks(n_mels + 2);
  for (std::size_t i = 0; i < breaks.size(); ++i) {
    breaks[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) /
                                       static_cast<double>(n_mels + 1));
  }

  FilterbankMatrix fb;
  fb.n_mels = n_mels;
  fb.n_fft = n_fft;
  fb.fmin = fmin;
  fb.fmax = fmax;
  fb.weights.assign(n_mels * n_bins, 0.0);

  for (std::size_t m = 0; m < n_mels; ++m) {
    const double f0 = breaks[m], f1 = breaks[m + 1], f2 = breaks[m + 2];
    double peak = 0.0;
    for (std::size_t k = 0; k < n_bins; ++k) {
      const double fk = static_cast<double>(k) * sample_rate / static_cast<double>(n_fft);
      double w = 0.0;
      if (fk > f0 && fk < f1) {
        w = (fk - f0) / (f1 - f0);
      } else if (fk >= f1 && fk < f2) {
        w = (f2 - fk) / (f2 - f1);
      }
      fb.weights[m * n_bins + k] = w;
      peak = std::max(peak, w);
    }
    if (peak <= 0.0) {
      throw Error(ErrorCode::DegenerateBand,
                  "mel band " + std::to_string(m) + " covers no FFT bin; raise n_fft or lower n_mels");
    }
    for (std::size_t k = 0; k < n_bins; ++k) fb.weights[m * n_bins + k] /= peak;
  }
  return fb;
}

SpectrogramTensor log_mel(const ComplexSpectrogram& spec, const FilterbankMatrix& fb,
                          double db_floor) {
  if (fb.n_fft != spec.n_fft) {
    throw Error(ErrorCode::ShapeMismatch, "filterbank n_fft " + std::to_string(fb.n_fft) +
                                              " != spectrogram n_fft " + std::to_string(spec.n_fft));
  }

  const std::size_t n_bins = spec.n_bins;
  SpectrogramTensor out = SpectrogramTensor::zeros(1, fb.n_mels, spec.n_frames,
                                                   SpectrogramMode::MelSingle);
  out.db_floor = db_floor;

  std::vector<double> power(n_bins);
  double ceil = db_floor;
  for (std::size_t t = 0; t < spec.n_frames; ++t) {
    for (std::size_t k = 0; k < n_bins; ++k) power[k] = std::norm(spec.at(k, t));
    for (std::size_t m = 0; m < fb.n_mels; ++m) {
      double acc = 0.0;
      const double* row = &fb.weights[m * n_bins];
      for (std::size_t k = 0; k < n_bins; ++k) acc += row[k] * power[k];
      double db = 10.0 * std::log10(acc + kPowerEps);
      db = std::max(db, db_floor);
      out.at(0, m, t) = db;
      ceil = std::max(ceil, db);
    }
  }
  out.db_ceil = ceil;
  return out;
}

SpectrogramTensor mel_single(const AudioSegment& seg, const FftSetting& setting,
                             const MelConfig& cfg) {
  ComplexSpectrogram spec = stft(seg.samples, setting.n_fft, setting.hop, cfg.window);
  FilterbankMatrix fb = mel_filterbank(cfg.n_mels, setting.n_fft, seg.sample_rate, cfg.fmin,
                                       cfg.fmax);
  return log_mel(spec, fb, cfg.db_floor);
}

SpectrogramTensor mel_mono3(const AudioSegment& seg, const MelConfig& cfg) {
  std::array<SpectrogramTensor, 3> planes;
  for (std::size_t c = 0; c < 3; ++c) planes[c] = mel_single(seg, cfg.settings[c], cfg);

  const std::size_t frames = planes[1].frames;  // align to the middle setting
  SpectrogramTensor out =
      SpectrogramTensor::zeros(3, cfg.n_mels, frames, SpectrogramMode::MelMono3);
  out.db_floor = cfg.db_floor;
  double ceil = cfg.db_floor;
  for (std::size_t c = 0; c < 3; ++c) {
    std::vector<double> aligned =
        interp_time(planes[c].data, cfg.n_mels, planes[c].frames, frames);
    std::copy(aligned.begin(), aligned.end(), out.data.begin() + static_cast<std::ptrdiff_t>(
                                                                     c * cfg.n_mels * frames));
    ceil = std::max(ceil, *std::max_element(aligned.begin(), aligned.end()));
  }
  out.db_ceil = ceil;
  return out;
}

}  // namespace specpipe
