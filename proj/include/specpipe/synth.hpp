#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "specpipe/manifest.hpp"

namespace specpipe {

enum class GeneratorKind { HarmonicVowel, NoisyVowel, Chirp, ToneBurst, NoiseBand };

const char* to_string(GeneratorKind kind);
GeneratorKind parse_generator_kind(const std::string& text);

struct ClassSpec {
  GeneratorKind kind = GeneratorKind::HarmonicVowel;
  double f0_lo = 100.0;   // fundamental range, Hz
  double f0_hi = 220.0;
  double jitter = 0.003;  // relative f0 perturbation
  double am_depth = 0.0;  // amplitude-modulation depth, 0 = clean
  double snr_db = 20.0;   // NoisyVowel only
};

struct CorpusSpec {
  std::size_t n_participants = 10;
  std::size_t clips_per_participant = 5;
  std::vector<ClassSpec> classes;  // participants cycle through these
  std::uint64_t seed = 42;
  int sample_rate = 16000;
  double clip_duration_s = 3.0;
};

// One clip's samples for a class, fully determined by the rng stream.
std::vector<double> synth_clip(const ClassSpec& cls, Task task, int sample_rate,
                               double duration_s, std::uint64_t seed);

// WAV files plus manifest.csv under out_dir; one class per participant,
// cycling through spec.classes. Labels: classes with am_depth >= 0.2 are
// "fail", the rest "pass". Tasks cycle through the five vowels.
Manifest generate(const CorpusSpec& spec, const std::string& out_dir);

// The fixed binary benchmark: 68 participants (40 enrolled before the
// 2023-01-24 cutoff, 28 after), 27 fail / 41 pass, five 3-second vowel
// clips each. Fail clips carry 20-45 Hz roughness (AM depth ~0.55) and
// 2.5% jitter; pass clips are clean (0.3% jitter).
Manifest generate_benchmark(const std::string& out_dir, std::uint64_t seed = 42,
                            std::size_t n_participants = 68);

// Multi-class pretraining corpus: one class per generator kind, labels
// all "pass", class identity carried by the task column.
Manifest generate_pretrain(const std::string& out_dir, std::uint64_t seed,
                           std::size_t n_participants,
                           std::size_t clips_per_participant);

// Modulation-depth oracle: short-window RMS envelope, depth estimated
// as (p95 - p5) / (p95 + p5) over the interior of the clip.
double measure_am_depth(const std::vector<double>& samples, int sample_rate);

}  // namespace specpipe
