#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace specpipe {

// Decoded mono waveform. Samples are in [-1, 1]; source_id carries the clip id
// (or file name) for provenance.
struct AudioClip {
  std::vector<double> samples;
  int sample_rate = 0;
  std::string source_id;

  double duration_s() const {
    return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
  }
};

struct AudioSegment {
  std::vector<double> samples;
  double start_time = 0.0;  // seconds
  int sample_rate = 0;
  std::string parent_clip_id;
};

enum class PadPolicy { DropTail, PadTail };

// Band-limited windowed-sinc resampling. Output length is
// round(n * target_rate / source_rate); a same-rate input is returned unchanged.
AudioClip resample(const AudioClip& clip, int target_rate);

// Fixed-length overlapping windows starting at 0, hop_s, 2*hop_s, ...
// Every segment of a run has exactly round(window_s * sample_rate) samples.
// A clip shorter than the window yields one zero-padded segment regardless of
// policy; PadTail additionally zero-pads one trailing segment when the last
// full window does not reach the end of the clip.
std::vector<AudioSegment> segment(const AudioClip& clip, double window_s, double hop_s,
                                  PadPolicy pad_policy = PadPolicy::DropTail);

}  // namespace specpipe
