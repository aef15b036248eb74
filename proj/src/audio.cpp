#include "specpipe/audio.hpp"

#include <algorithm>
#include <cmath>

#include "specpipe/error.hpp"

namespace specpipe {

namespace {

constexpr double kPi = 3.14159265358979323846;

double sinc(double x) {
  if (std::abs(x) < 1e-12) return 1.0;
  return std::sin(kPi * x) / (kPi * x);
}

// Blackman window over [-half_width, half_width].
double blackman(double x, double half_width) {
  double r = x / half_width;
  if (std::abs(r) > 1.0) return 0.0;
  return 0.42 + 0.5 * std::cos(kPi * r) + 0.08 * std::cos(2.0 * kPi * r);
}

}  // namespace

AudioClip resample(const AudioClip& clip, int target_rate) {
  if (target_rate <= 0) throw Error(ErrorCode::ConfigError, "target sample rate must be positive");
  if (clip.sample_rate <= 0) throw Error(ErrorCode::ConfigError, "clip has no sample rate");
  if (target_rate == clip.sample_rate) return clip;

  const double ratio = static_cast<double>(target_rate) / clip.sample_rate;
  const std::size_t n_in = clip.samples.size();
  const auto n_out = static_cast<std::size_t>(std::llround(static_cast<double>(n_in) * ratio));

  // Anti-alias cutoff in units of the source Nyquist; the kernel stretches by
  // 1/cutoff when downsampling so it keeps 32 sinc zero crossings per side.
  const double cutoff = std::min(1.0, ratio);
  const double half_width = 32.0 / cutoff;

  AudioClip out;
  out.sample_rate = target_rate;
  out.source_id = clip.source_id;
  out.samples.resize(n_out);

  for (std::size_t i = 0; i < n_out; ++i) {
    const double center = static_cast<double>(i) / ratio;
    const long j0 = std::max<long>(0, static_cast<long>(std::ceil(center - half_width)));
    const long j1 =
        std::min<long>(static_cast<long>(n_in) - 1, static_cast<long>(std::floor(center + half_width)));
    double acc = 0.0;
    double weight_sum = 0.0;
    for (long j = j0; j <= j1; ++j) {
      const double x = center - static_cast<double>(j);
      const double w = cutoff * sinc(cutoff * x) * blackman(x, half_width);
      acc += w * clip.samples[static_cast<std::size_t>(j)];
      weight_sum += w;
    }
    // Normalizing by the in-range weight sum pins DC gain to exactly 1.
    out.samples[i] = weight_sum != 0.0 ? acc / weight_sum : 0.0;
  }
  return out;
}

std::vector<AudioSegment> segment(const AudioClip& clip, double window_s, double hop_s,
                                  PadPolicy pad_policy) {
  if (window_s <= 0.0 || hop_s <= 0.0 || hop_s > window_s) {
    throw Error(ErrorCode::ConfigError, "need window_s > 0 and 0 < hop_s <= window_s");
  }
  if (clip.sample_rate <= 0) throw Error(ErrorCode::ConfigError, "clip has no sample rate");

  const auto length = static_cast<std::size_t>(std::llround(window_s * clip.sample_rate));
  const std::size_t n = clip.samples.size();

  auto make_segment = [&](std::size_t start) {
    AudioSegment seg;
    seg.sample_rate = clip.sample_rate;
    seg.parent_clip_id = clip.source_id;
    seg.start_time = static_cast<double>(start) / clip.sample_rate;
    seg.samples.assign(length, 0.0);
    const std::size_t avail = start < n ? std::min(length, n - start) : 0;
    std::copy_n(clip.samples.begin() + static_cast<std::ptrdiff_t>(start), avail,
                seg.samples.begin());
    return seg;
  };

  std::vector<AudioSegment> segments;
  if (n < length) {
    segments.push_back(make_segment(0));
    return segments;
  }

  std::size_t k = 0;
  std::size_t last_end = 0;
  while (true) {
    const auto start = static_cast<std::size_t>(
        std::llround(static_cast<double>(k) * hop_s * clip.sample_rate));
    if (start + length > n) break;
    segments.push_back(make_segment(start));
    last_end = start + length;
    ++k;
  }
  if (pad_policy == PadPolicy::PadTail && last_end < n) {
    const auto start = static_cast<std::size_t>(
        std::llround(static_cast<double>(k) * hop_s * clip.sample_rate));
    segments.push_back(make_segment(start));
  }
  return segments;
}

}  // namespace specpipe
