#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "specpipe/audio.hpp"
#include "specpipe/eval.hpp"
#include "specpipe/model.hpp"
#include "specpipe/render.hpp"
#include "specpipe/spectrogram.hpp"
#include "specpipe/stft_mel.hpp"
#include "specpipe/superlet.hpp"

namespace specpipe {

struct SegmentConfig {
  double window_s = 1.5;
  double hop_s = 1.5;
  PadPolicy pad = PadPolicy::PadTail;
  int target_rate = 16000;
};

// Superlet parameters in config form; the frequency grid is built from
// fmin/fmax/n_freqs at the segment sample rate (fmax 0 = 0.45 * rate).
struct SuperletParams {
  double fmin = 50.0;
  double fmax = 0.0;
  std::size_t n_freqs = 64;
  double base_cycles = 3.0;
  double order_min = 1.0;
  double order_max = 16.0;
  CycleMode cycle_mode = CycleMode::Multiplicative;
  double k_sd = 5.0;
  std::size_t time_hop = 256;
  double db_floor = -80.0;

  SuperletConfig build(int sample_rate) const;
};

struct PipelineConfig {
  std::string manifest_path;
  std::string audio_root;  // empty = manifest's directory
  std::string out_dir = "out";
  std::uint64_t seed = 42;
  SpectrogramMode mode = SpectrogramMode::MelSingle;
  std::string split_cutoff = "2023-01-24";
  SegmentConfig segment;
  MelConfig mel;
  std::size_t mel_primary = 1;  // which FFT setting feeds mel_rgb
  SuperletParams superlet;
  NormalizeMode normalize = NormalizeMode::FixedRange;
  double fixed_range_db = 80.0;  // FixedRange spans [ceil - this, ceil]
  std::vector<TrainStage> stages;  // empty = one default hybrid stage
  ModelConfig model;
  EvalOptions eval;
  std::string pretrain_manifest;  // enables the "pretrain" dataset id
  bool export_images = true;
  bool dump_tensors = false;
  bool cache = true;
  std::size_t jobs = 0;  // 0 = all available cores
};

// JSON with full defaults: an empty object is a valid config (apart from
// manifest_path, which run() requires). Unknown keys are rejected with
// the offending field named.
PipelineConfig parse_pipeline_config(const std::string& json_text);
std::string serialize_pipeline_config(const PipelineConfig& cfg);

std::uint64_t fnv1a64(const std::string& bytes);
// 16 hex digits over the canonical serialized config.
std::string config_hash(const PipelineConfig& cfg);

// Mode-specific preprocessing of one segment: spectrogram, normalize,
// and (for 1-channel modes) the colormap expansion to 3 channels.
SpectrogramTensor preprocess_segment(const AudioSegment& seg,
                                     const PipelineConfig& cfg);

struct PreparedClip {
  std::string clip_id;
  std::string participant_id;
  Label label = Label::Pass;
  int label_index = 0;  // training label (binary or class id)
  std::vector<SpectrogramTensor> segments;
  std::vector<double> start_times;
};

// Decode, resample, segment, and preprocess every clip of the manifest,
// honouring the tensor cache when enabled.
std::vector<PreparedClip> prepare_clips(const Manifest& manifest,
                                        const std::string& audio_root,
                                        const PipelineConfig& cfg);

struct RunResult {
  EvaluationReport report;
  std::string report_path;
  std::string checkpoint_path;
  std::string summary_path;
  TrainLog train_log;
};

RunResult run_pipeline(const PipelineConfig& cfg);

struct CompareRow {
  std::string mode;
  std::string config_hash;
  double auc = 0.0;
  double sensitivity = 0.0;
  double specificity = 0.0;
};

struct CompareTable {
  std::vector<CompareRow> rows;
  std::string csv;
  std::string text;
};

// Values are copied from the reports, never recomputed. Throws
// MissingRun for fewer than two readable reports and refuses to mix
// schema versions.
CompareTable compare_reports(const std::vector<std::string>& report_paths);

}  // namespace specpipe
