#include "specpipe/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>

#include "specpipe/error.hpp"
#include "specpipe/rng.hpp"
#include "specpipe/wav.hpp"

namespace specpipe {

namespace {

constexpr double kTau = 2.0 * std::numbers::pi;

// Rough first/second formants per vowel, Hz.
struct Formants {
  double f1, f2;
};

Formants formants_for(Task task) {
  switch (task) {
    case Task::VowelA: return {730.0, 1090.0};
    case Task::VowelE: return {530.0, 1840.0};
    case Task::VowelI: return {270.0, 2290.0};
    case Task::VowelO: return {570.0, 840.0};
    case Task::VowelU: return {300.0, 870.0};
    default: return {500.0, 1500.0};
  }
}

double resonance(double f, double center, double bandwidth) {
  const double d = (f - center) / bandwidth;
  return 1.0 / (1.0 + d * d);
}

void peak_normalize(std::vector<double>& s, double peak) {
  double mx = 0.0;
  for (double v : s) mx = std::max(mx, std::abs(v));
  if (mx > 0.0) {
    const double g = peak / mx;
    for (double& v : s) v *= g;
  }
}

// Harmonic source with per-sample smoothed f0 perturbation and optional
// amplitude modulation; the shared phase track keeps harmonics coherent
// the way a glottal source would.
std::vector<double> render_vowel(const ClassSpec& cls, Task task, int fs,
                                 std::size_t n, Rng& rng) {
  const Formants fm = formants_for(task);
  const double f0 = rng.uniform(cls.f0_lo, cls.f0_hi);
  const std::size_t n_harm =
      static_cast<std::size_t>(std::floor(0.45 * fs / f0));

  std::vector<double> amp(n_harm), theta(n_harm);
  for (std::size_t k = 0; k < n_harm; ++k) {
    const double f = f0 * static_cast<double>(k + 1);
    amp[k] = (resonance(f, fm.f1, 130.0) + 0.7 * resonance(f, fm.f2, 180.0) + 0.05) /
             static_cast<double>(k + 1);
    theta[k] = rng.uniform(0.0, kTau);
  }

  // one-pole smoothed jitter stream scaled to the requested relative std
  const double alpha = std::exp(-kTau * 20.0 / fs);
  const double jitter_gain =
      cls.jitter / std::sqrt((1.0 - alpha) / (1.0 + alpha));
  const double am_rate = rng.uniform(20.0, 45.0);
  const double am_phase = rng.uniform(0.0, kTau);

  std::vector<double> s(n, 0.0);
  double phase = 0.0;
  double jitter_state = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    jitter_state = alpha * jitter_state + (1.0 - alpha) * rng.normal();
    const double f_inst = f0 * (1.0 + jitter_gain * jitter_state);
    phase += kTau * f_inst / fs;
    double v = 0.0;
    for (std::size_t k = 0; k < n_harm; ++k) {
      v += amp[k] * std::sin(static_cast<double>(k + 1) * phase + theta[k]);
    }
    const double t = static_cast<double>(i) / fs;
    const double env = 1.0 + cls.am_depth * std::sin(kTau * am_rate * t + am_phase);
    s[i] = v * env;
  }
  return s;
}

std::vector<double> render_chirp(int fs, std::size_t n, Rng& rng) {
  const double f_start = rng.uniform(200.0, 400.0);
  const double f_end = rng.uniform(2000.0, 4000.0);
  const double T = static_cast<double>(n) / fs;
  std::vector<double> s(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / fs;
    s[i] = std::sin(kTau * (f_start * t + (f_end - f_start) * t * t / (2.0 * T)));
  }
  return s;
}

std::vector<double> render_tone_burst(int fs, std::size_t n, Rng& rng) {
  const double f = rng.uniform(400.0, 2000.0);
  const double on_s = rng.uniform(0.06, 0.12);
  const double off_s = rng.uniform(0.06, 0.12);
  const double edge_s = 0.01;
  const double period = on_s + off_s;
  std::vector<double> s(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / fs;
    const double u = std::fmod(t, period);
    double gate = 0.0;
    if (u < on_s) {
      gate = 1.0;
      if (u < edge_s) gate = 0.5 - 0.5 * std::cos(std::numbers::pi * u / edge_s);
      else if (u > on_s - edge_s)
        gate = 0.5 - 0.5 * std::cos(std::numbers::pi * (on_s - u) / edge_s);
    }
    s[i] = gate * std::sin(kTau * f * t);
  }
  return s;
}

std::vector<double> render_noise_band(int fs, std::size_t n, Rng& rng) {
  const double f_lo = rng.uniform(500.0, 2000.0);
  const double f_hi = std::min(f_lo * rng.uniform(1.5, 3.0), 0.45 * fs);
  constexpr std::size_t kPartials = 120;
  std::vector<double> freq(kPartials), theta(kPartials);
  for (std::size_t k = 0; k < kPartials; ++k) {
    freq[k] = rng.uniform(f_lo, f_hi);
    theta[k] = rng.uniform(0.0, kTau);
  }
  std::vector<double> s(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / fs;
    double v = 0.0;
    for (std::size_t k = 0; k < kPartials; ++k) {
      v += std::sin(kTau * freq[k] * t + theta[k]);
    }
    s[i] = v;
  }
  return s;
}

void add_noise_at_snr(std::vector<double>& s, double snr_db, Rng& rng) {
  double power = 0.0;
  for (double v : s) power += v * v;
  power /= static_cast<double>(s.size());
  const double noise_std = std::sqrt(power / std::pow(10.0, snr_db / 10.0));
  for (double& v : s) v += noise_std * rng.normal();
}

Task vowel_cycle(std::size_t i) {
  static constexpr Task kVowels[5] = {Task::VowelA, Task::VowelE, Task::VowelI,
                                      Task::VowelO, Task::VowelU};
  return kVowels[i % 5];
}

std::string pad3(std::size_t v) {
  std::string s = std::to_string(v);
  while (s.size() < 3) s.insert(s.begin(), '0');
  return s;
}

std::string task_slug(Task task) {
  const std::string full = to_string(task);
  const auto us = full.rfind('_');
  return us == std::string::npos ? full : full.substr(us + 1);
}

ClipRecord write_clip(const std::filesystem::path& out_dir,
                      const std::string& participant_id, const ClassSpec& cls,
                      Task task, int repetition, int sample_rate,
                      double duration_s, std::uint64_t seed) {
  const std::vector<double> samples =
      synth_clip(cls, task, sample_rate, duration_s, seed);
  ClipRecord clip;
  clip.clip_id = participant_id + "_" + task_slug(task) + "_" + std::to_string(repetition);
  clip.file_path = clip.clip_id + ".wav";
  clip.task = task;
  clip.repetition_index = repetition;
  AudioClip audio{samples, sample_rate, clip.clip_id};
  write_wav_file(audio, out_dir / clip.file_path);
  return clip;
}

}  // namespace

const char* to_string(GeneratorKind kind) {
  switch (kind) {
    case GeneratorKind::HarmonicVowel: return "harmonic_vowel";
    case GeneratorKind::NoisyVowel: return "noisy_vowel";
    case GeneratorKind::Chirp: return "chirp";
    case GeneratorKind::ToneBurst: return "tone_burst";
    case GeneratorKind::NoiseBand: return "noise_band";
  }
  return "?";
}

GeneratorKind parse_generator_kind(const std::string& text) {
  if (text == "harmonic_vowel") return GeneratorKind::HarmonicVowel;
  if (text == "noisy_vowel") return GeneratorKind::NoisyVowel;
  if (text == "chirp") return GeneratorKind::Chirp;
  if (text == "tone_burst") return GeneratorKind::ToneBurst;
  if (text == "noise_band") return GeneratorKind::NoiseBand;
  throw Error(ErrorCode::ConfigError, "unknown generator kind '" + text + "'");
}

std::vector<double> synth_clip(const ClassSpec& cls, Task task, int sample_rate,
                               double duration_s, std::uint64_t seed) {
  if (sample_rate <= 0 || !(duration_s > 0.0)) {
    throw Error(ErrorCode::ConfigError, "need a positive sample rate and duration");
  }
  const std::size_t n =
      static_cast<std::size_t>(std::llround(duration_s * sample_rate));
  Rng rng(seed);
  std::vector<double> s;
  switch (cls.kind) {
    case GeneratorKind::HarmonicVowel:
      s = render_vowel(cls, task, sample_rate, n, rng);
      break;
    case GeneratorKind::NoisyVowel:
      s = render_vowel(cls, task, sample_rate, n, rng);
      add_noise_at_snr(s, cls.snr_db, rng);
      break;
    case GeneratorKind::Chirp:
      s = render_chirp(sample_rate, n, rng);
      break;
    case GeneratorKind::ToneBurst:
      s = render_tone_burst(sample_rate, n, rng);
      break;
    case GeneratorKind::NoiseBand:
      s = render_noise_band(sample_rate, n, rng);
      break;
  }
  peak_normalize(s, 0.7);
  return s;
}

Manifest generate(const CorpusSpec& spec, const std::string& out_dir) {
  if (spec.classes.empty()) {
    throw Error(ErrorCode::ConfigError, "corpus spec names no classes");
  }
  std::filesystem::create_directories(out_dir);
  const std::filesystem::path root(out_dir);

  Manifest m;
  Date date{2022, 6, 13};
  for (std::size_t p = 0; p < spec.n_participants; ++p) {
    const ClassSpec& cls = spec.classes[p % spec.classes.size()];
    ParticipantRecord rec;
    rec.participant_id = "P" + pad3(p + 1);
    rec.label = cls.am_depth >= 0.2 ? Label::Fail : Label::Pass;
    rec.enrollment_date = date;
    date = date.next_day();
    for (std::size_t c = 0; c < spec.clips_per_participant; ++c) {
      rec.clips.push_back(write_clip(root, rec.participant_id, cls,
                                     vowel_cycle(c), static_cast<int>(c / 5) + 1,
                                     spec.sample_rate, spec.clip_duration_s,
                                     derive_seed(spec.seed, p, c)));
    }
    m.participants.push_back(std::move(rec));
  }
  save_manifest_file(m, root / "manifest.csv");
  return m;
}

Manifest generate_benchmark(const std::string& out_dir, std::uint64_t seed,
                            std::size_t n_participants) {
  if (n_participants < 8) {
    throw Error(ErrorCode::ConfigError, "benchmark needs at least 8 participants");
  }
  std::filesystem::create_directories(out_dir);
  const std::filesystem::path root(out_dir);

  ClassSpec pass_cls;
  pass_cls.kind = GeneratorKind::HarmonicVowel;
  pass_cls.jitter = 0.003;
  pass_cls.am_depth = 0.0;
  ClassSpec fail_cls = pass_cls;
  fail_cls.jitter = 0.025;
  fail_cls.am_depth = 0.55;

  // Proportions follow the reference cohort: 40/68 enrolled in the first
  // window, 27/68 labeled fail, and the fail cases spread over both
  // windows (16 early, 11 late at n = 68).
  const std::size_t n_train = n_participants * 40 / 68;
  const std::size_t n_test = n_participants - n_train;
  const std::size_t n_fail = n_participants * 27 / 68;
  const std::size_t fail_train = n_fail * 16 / 27;
  const std::size_t fail_test = n_fail - fail_train;

  std::vector<Label> labels(n_participants, Label::Pass);
  {
    std::vector<std::size_t> train_idx(n_train), test_idx(n_test);
    for (std::size_t i = 0; i < n_train; ++i) train_idx[i] = i;
    for (std::size_t i = 0; i < n_test; ++i) test_idx[i] = n_train + i;
    Rng shuffler(derive_seed(seed, 9000));
    shuffler.shuffle(train_idx);
    shuffler.shuffle(test_idx);
    for (std::size_t i = 0; i < fail_train; ++i) labels[train_idx[i]] = Label::Fail;
    for (std::size_t i = 0; i < fail_test && i < test_idx.size(); ++i) {
      labels[test_idx[i]] = Label::Fail;
    }
  }

  // Enrollment: the first window runs 2022-06-13 to 2023-01-19 (220 days),
  // the second 2023-01-24 to 2023-03-04 (39 days); the split cutoff sits
  // between them. Participants spread evenly over their window so any
  // cohort size stays on the right side of the cutoff.
  const Date train_start{2022, 6, 13};
  const Date cutoff{2023, 1, 24};
  const Date test_start = cutoff;
  auto window_day = [](std::size_t i, std::size_t count, int span_days) {
    if (count <= 1) return 0;
    return static_cast<int>(i * static_cast<std::size_t>(span_days) / (count - 1));
  };

  Manifest m;
  m.split_cutoff = cutoff;
  for (std::size_t p = 0; p < n_participants; ++p) {
    const bool in_train = p < n_train;
    ParticipantRecord rec;
    rec.participant_id = "P" + pad3(p + 1);
    rec.label = labels[p];
    rec.enrollment_date =
        in_train ? train_start.plus_days(window_day(p, n_train, 220))
                 : test_start.plus_days(window_day(p - n_train, n_test, 39));
    const ClassSpec& cls = rec.label == Label::Fail ? fail_cls : pass_cls;
    for (std::size_t c = 0; c < 5; ++c) {
      rec.clips.push_back(write_clip(root, rec.participant_id, cls, vowel_cycle(c),
                                     1, 16000, 3.0, derive_seed(seed, p, c)));
    }
    m.participants.push_back(std::move(rec));
  }
  save_manifest_file(m, root / "manifest.csv");
  return m;
}

Manifest generate_pretrain(const std::string& out_dir, std::uint64_t seed,
                           std::size_t n_participants,
                           std::size_t clips_per_participant) {
  CorpusSpec spec;
  spec.n_participants = n_participants;
  spec.clips_per_participant = clips_per_participant;
  spec.seed = seed;
  spec.classes = {
      {GeneratorKind::HarmonicVowel, 100.0, 220.0, 0.003, 0.0, 20.0},
      {GeneratorKind::NoisyVowel, 100.0, 220.0, 0.003, 0.0, 6.0},
      {GeneratorKind::Chirp},
      {GeneratorKind::ToneBurst},
      {GeneratorKind::NoiseBand},
  };
  // Class identity rides on the task column: every clip of a participant
  // uses the vowel slot matching its generator class.
  std::filesystem::create_directories(out_dir);
  const std::filesystem::path root(out_dir);
  Manifest m;
  Date date{2022, 1, 1};
  for (std::size_t p = 0; p < spec.n_participants; ++p) {
    const std::size_t class_idx = p % spec.classes.size();
    const ClassSpec& cls = spec.classes[class_idx];
    ParticipantRecord rec;
    rec.participant_id = "S" + pad3(p + 1);
    rec.label = Label::Pass;
    rec.enrollment_date = date;
    date = date.next_day();
    for (std::size_t c = 0; c < spec.clips_per_participant; ++c) {
      rec.clips.push_back(write_clip(root, rec.participant_id, cls,
                                     vowel_cycle(class_idx),
                                     static_cast<int>(c) + 1, spec.sample_rate,
                                     spec.clip_duration_s,
                                     derive_seed(spec.seed, p, c)));
    }
    m.participants.push_back(std::move(rec));
  }
  save_manifest_file(m, root / "manifest.csv");
  return m;
}

double measure_am_depth(const std::vector<double>& samples, int sample_rate) {
  const std::size_t win = static_cast<std::size_t>(sample_rate / 100);  // 10 ms
  const std::size_t hop = win / 2;
  if (samples.size() < 2 * win || win == 0) {
    throw Error(ErrorCode::InputTooShort, "clip too short for envelope analysis");
  }
  std::vector<double> env;
  for (std::size_t start = 0; start + win <= samples.size(); start += hop) {
    double acc = 0.0;
    for (std::size_t i = 0; i < win; ++i) acc += samples[start + i] * samples[start + i];
    env.push_back(std::sqrt(acc / static_cast<double>(win)));
  }
  std::sort(env.begin(), env.end());
  const double lo = env[static_cast<std::size_t>(0.05 * (env.size() - 1))];
  const double hi = env[static_cast<std::size_t>(0.95 * (env.size() - 1))];
  if (hi + lo <= 0.0) return 0.0;
  return (hi - lo) / (hi + lo);
}

}  // namespace specpipe
