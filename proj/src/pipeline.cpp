#include "specpipe/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "specpipe/error.hpp"
#include "specpipe/log.hpp"
#include "specpipe/rng.hpp"
#include "specpipe/tensor_io.hpp"
#include "specpipe/wav.hpp"

namespace specpipe {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void check_keys(const json& obj, const std::vector<std::string>& allowed,
                const std::string& scope) {
  for (const auto& [key, value] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw Error(ErrorCode::ConfigError,
                  "unknown config field '" + (scope.empty() ? key : scope + "." + key) + "'");
    }
  }
}

template <typename T>
T field(const json& obj, const char* key, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::ConfigError, std::string("config field '") + key +
                                            "' has the wrong type");
  }
}

PadPolicy parse_pad(const std::string& text) {
  if (text == "pad_tail") return PadPolicy::PadTail;
  if (text == "drop_tail") return PadPolicy::DropTail;
  throw Error(ErrorCode::ConfigError,
              "segment.pad '" + text + "' (expected pad_tail|drop_tail)");
}

WindowKind parse_window(const std::string& text) {
  if (text == "hann") return WindowKind::Hann;
  if (text == "hamming") return WindowKind::Hamming;
  throw Error(ErrorCode::ConfigError,
              "mel.window '" + text + "' (expected hann|hamming)");
}

NormalizeMode parse_normalize(const std::string& text) {
  if (text == "fixed_range") return NormalizeMode::FixedRange;
  if (text == "per_image") return NormalizeMode::PerImageMinMax;
  throw Error(ErrorCode::ConfigError,
              "normalize '" + text + "' (expected fixed_range|per_image)");
}

TrainStage parse_stage(const json& sj, std::size_t index) {
  check_keys(sj, {"dataset", "epochs", "learning_rate", "batch_size", "lambda",
                  "margin", "freeze", "val_dataset"},
             "train.stages[" + std::to_string(index) + "]");
  TrainStage st;
  st.dataset_id = field<std::string>(sj, "dataset", "train");
  st.epochs = field<std::size_t>(sj, "epochs", 20);
  st.learning_rate = field<double>(sj, "learning_rate", 1e-3);
  st.batch_size = field<std::size_t>(sj, "batch_size", 16);
  st.lambda = field<double>(sj, "lambda", 0.5);
  st.margin = field<double>(sj, "margin", 1.0);
  st.freeze = field<std::vector<std::string>>(sj, "freeze", {});
  st.val_dataset_id = field<std::string>(sj, "val_dataset", "");
  return st;
}

json stage_to_json(const TrainStage& st) {
  return {{"dataset", st.dataset_id},
          {"epochs", st.epochs},
          {"learning_rate", st.learning_rate},
          {"batch_size", st.batch_size},
          {"lambda", st.lambda},
          {"margin", st.margin},
          {"freeze", st.freeze},
          {"val_dataset", st.val_dataset_id}};
}

// Round every cell to float32 so fresh computation and a cache
// round-trip produce the same numbers.
void round_f32(SpectrogramTensor& t) {
  for (double& v : t.data) v = static_cast<double>(static_cast<float>(v));
  t.db_floor = static_cast<double>(static_cast<float>(t.db_floor));
  t.db_ceil = static_cast<double>(static_cast<float>(t.db_ceil));
}

std::uint64_t hash_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingFile, "cannot open '" + path.string() + "'");
  std::uint64_t h = 14695981039346656037ULL;
  char buf[65536];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    const std::streamsize got = in.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ULL;
    }
    if (!in) break;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// The config slice that determines a clip's tensors.
json preprocessing_slice(const PipelineConfig& cfg) {
  json mel_settings = json::array();
  for (const FftSetting& s : cfg.mel.settings) {
    mel_settings.push_back({s.n_fft, s.hop});
  }
  json slice = {
      {"mode", to_string(cfg.mode)},
      {"segment",
       {{"window_s", cfg.segment.window_s},
        {"hop_s", cfg.segment.hop_s},
        {"pad", cfg.segment.pad == PadPolicy::PadTail ? "pad_tail" : "drop_tail"},
        {"target_rate", cfg.segment.target_rate}}},
      {"normalize", cfg.normalize == NormalizeMode::FixedRange ? "fixed_range" : "per_image"},
      {"fixed_range_db", cfg.fixed_range_db},
  };
  if (cfg.mode == SpectrogramMode::Superlet) {
    slice["superlet"] = {{"fmin", cfg.superlet.fmin},
                         {"fmax", cfg.superlet.fmax},
                         {"n_freqs", cfg.superlet.n_freqs},
                         {"base_cycles", cfg.superlet.base_cycles},
                         {"order_min", cfg.superlet.order_min},
                         {"order_max", cfg.superlet.order_max},
                         {"cycle_mode", to_string(cfg.superlet.cycle_mode)},
                         {"k_sd", cfg.superlet.k_sd},
                         {"time_hop", cfg.superlet.time_hop},
                         {"db_floor", cfg.superlet.db_floor}};
  } else {
    slice["mel"] = {{"settings", mel_settings},
                    {"n_mels", cfg.mel.n_mels},
                    {"window", cfg.mel.window == WindowKind::Hann ? "hann" : "hamming"},
                    {"fmin", cfg.mel.fmin},
                    {"fmax", cfg.mel.fmax},
                    {"db_floor", cfg.mel.db_floor},
                    {"primary", cfg.mel_primary}};
  }
  return slice;
}

int task_class_index(Task task) {
  switch (task) {
    case Task::VowelA: return 0;
    case Task::VowelE: return 1;
    case Task::VowelI: return 2;
    case Task::VowelO: return 3;
    case Task::VowelU: return 4;
    case Task::NihssSpeech: return 0;
    case Task::NihssSentence: return 1;
    case Task::NihssWord: return 2;
  }
  return 0;
}

struct ClipJob {
  const ParticipantRecord* participant;
  const ClipRecord* clip;
};

void run_jobs(std::size_t n, std::size_t jobs,
              const std::function<void(std::size_t)>& fn) {
  if (jobs <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::atomic<std::size_t> next{0};
  const std::size_t workers = std::min(jobs, n);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
          return;
        }
      }
    });
  }
  for (std::thread& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace

SuperletConfig SuperletParams::build(int sample_rate) const {
  SuperletConfig cfg;
  const double top = fmax > 0.0 ? fmax : 0.45 * sample_rate;
  cfg.freq_grid = SuperletConfig::log_grid(fmin, top, n_freqs);
  cfg.base_cycles = base_cycles;
  cfg.order_min = order_min;
  cfg.order_max = order_max;
  cfg.cycle_mode = cycle_mode;
  cfg.k_sd = k_sd;
  cfg.time_hop = time_hop;
  cfg.db_floor = db_floor;
  return cfg;
}

PipelineConfig parse_pipeline_config(const std::string& json_text) {
  json doc = json::parse(json_text, nullptr, false);
  if (doc.is_discarded()) {
    throw Error(ErrorCode::ConfigError, "config is not valid JSON");
  }
  if (!doc.is_object()) {
    throw Error(ErrorCode::ConfigError, "config root must be an object");
  }
  check_keys(doc, {"manifest", "audio_root", "out_dir", "seed", "mode",
                   "split_cutoff", "segment", "mel", "superlet", "normalize",
                   "fixed_range_db", "train", "eval", "pretrain_manifest",
                   "export_images", "dump_tensors", "cache", "jobs"},
             "");

  PipelineConfig cfg;
  cfg.manifest_path = field<std::string>(doc, "manifest", "");
  cfg.audio_root = field<std::string>(doc, "audio_root", "");
  cfg.out_dir = field<std::string>(doc, "out_dir", "out");
  cfg.seed = field<std::uint64_t>(doc, "seed", 42);
  cfg.mode = parse_spectrogram_mode(field<std::string>(doc, "mode", "mel_rgb"));
  cfg.split_cutoff = field<std::string>(doc, "split_cutoff", "2023-01-24");
  Date::parse(cfg.split_cutoff);  // validate early

  if (doc.contains("segment")) {
    const json& sj = doc.at("segment");
    check_keys(sj, {"window_s", "hop_s", "pad", "target_rate"}, "segment");
    cfg.segment.window_s = field<double>(sj, "window_s", 1.5);
    cfg.segment.hop_s = field<double>(sj, "hop_s", 1.5);
    cfg.segment.pad = parse_pad(field<std::string>(sj, "pad", "pad_tail"));
    cfg.segment.target_rate = field<int>(sj, "target_rate", 16000);
  }

  if (doc.contains("mel")) {
    const json& mj = doc.at("mel");
    check_keys(mj, {"settings", "n_mels", "window", "fmin", "fmax", "db_floor",
                    "primary"},
               "mel");
    if (mj.contains("settings")) {
      const auto raw = mj.at("settings").get<std::vector<std::vector<std::size_t>>>();
      if (raw.size() != 3) {
        throw Error(ErrorCode::ConfigError, "mel.settings needs exactly 3 [n_fft, hop] pairs");
      }
      for (std::size_t i = 0; i < 3; ++i) {
        if (raw[i].size() != 2) {
          throw Error(ErrorCode::ConfigError, "mel.settings entries are [n_fft, hop] pairs");
        }
        cfg.mel.settings[i] = {raw[i][0], raw[i][1]};
      }
    }
    cfg.mel.n_mels = field<std::size_t>(mj, "n_mels", 128);
    cfg.mel.window = parse_window(field<std::string>(mj, "window", "hann"));
    cfg.mel.fmin = field<double>(mj, "fmin", 0.0);
    cfg.mel.fmax = field<double>(mj, "fmax", 0.0);
    cfg.mel.db_floor = field<double>(mj, "db_floor", -80.0);
    cfg.mel_primary = field<std::size_t>(mj, "primary", 1);
    if (cfg.mel_primary >= 3) {
      throw Error(ErrorCode::ConfigError, "mel.primary must be 0, 1, or 2");
    }
  }

  if (doc.contains("superlet")) {
    const json& uj = doc.at("superlet");
    check_keys(uj, {"fmin", "fmax", "n_freqs", "base_cycles", "order_min",
                    "order_max", "cycle_mode", "k_sd", "time_hop", "db_floor"},
               "superlet");
    cfg.superlet.fmin = field<double>(uj, "fmin", 50.0);
    cfg.superlet.fmax = field<double>(uj, "fmax", 0.0);
    cfg.superlet.n_freqs = field<std::size_t>(uj, "n_freqs", 64);
    cfg.superlet.base_cycles = field<double>(uj, "base_cycles", 3.0);
    cfg.superlet.order_min = field<double>(uj, "order_min", 1.0);
    cfg.superlet.order_max = field<double>(uj, "order_max", 16.0);
    cfg.superlet.cycle_mode =
        parse_cycle_mode(field<std::string>(uj, "cycle_mode", "multiplicative"));
    cfg.superlet.k_sd = field<double>(uj, "k_sd", 5.0);
    cfg.superlet.time_hop = field<std::size_t>(uj, "time_hop", 256);
    cfg.superlet.db_floor = field<double>(uj, "db_floor", -80.0);
  }

  cfg.normalize = parse_normalize(field<std::string>(doc, "normalize", "fixed_range"));
  cfg.fixed_range_db = field<double>(doc, "fixed_range_db", 80.0);
  if (!(cfg.fixed_range_db > 0.0)) {
    throw Error(ErrorCode::ConfigError, "fixed_range_db must be positive");
  }

  if (doc.contains("train")) {
    const json& tj = doc.at("train");
    check_keys(tj, {"stages", "model"}, "train");
    if (tj.contains("stages")) {
      std::size_t i = 0;
      for (const json& sj : tj.at("stages")) cfg.stages.push_back(parse_stage(sj, i++));
    }
    if (tj.contains("model")) {
      const json& mj = tj.at("model");
      check_keys(mj, {"embed_dim", "conv_widths"}, "train.model");
      cfg.model.embed_dim = field<std::size_t>(mj, "embed_dim", 32);
      if (mj.contains("conv_widths")) {
        const auto w = mj.at("conv_widths").get<std::vector<std::size_t>>();
        if (w.size() != 3) {
          throw Error(ErrorCode::ConfigError, "train.model.conv_widths needs 3 entries");
        }
        std::copy(w.begin(), w.end(), cfg.model.conv_widths.begin());
      }
    }
  }

  if (doc.contains("eval")) {
    const json& ej = doc.at("eval");
    check_keys(ej, {"bootstrap_resamples", "ci_level"}, "eval");
    cfg.eval.bootstrap_resamples = field<std::size_t>(ej, "bootstrap_resamples", 2000);
    cfg.eval.ci_level = field<double>(ej, "ci_level", 0.95);
  }

  cfg.pretrain_manifest = field<std::string>(doc, "pretrain_manifest", "");
  cfg.export_images = field<bool>(doc, "export_images", true);
  cfg.dump_tensors = field<bool>(doc, "dump_tensors", false);
  cfg.cache = field<bool>(doc, "cache", true);
  cfg.jobs = field<std::size_t>(doc, "jobs", 0);
  return cfg;
}

std::string serialize_pipeline_config(const PipelineConfig& cfg) {
  json mel_settings = json::array();
  for (const FftSetting& s : cfg.mel.settings) mel_settings.push_back({s.n_fft, s.hop});
  json stages = json::array();
  for (const TrainStage& st : cfg.stages) stages.push_back(stage_to_json(st));

  json doc = {
      {"manifest", cfg.manifest_path},
      {"audio_root", cfg.audio_root},
      {"out_dir", cfg.out_dir},
      {"seed", cfg.seed},
      {"mode", to_string(cfg.mode)},
      {"split_cutoff", cfg.split_cutoff},
      {"segment",
       {{"window_s", cfg.segment.window_s},
        {"hop_s", cfg.segment.hop_s},
        {"pad", cfg.segment.pad == PadPolicy::PadTail ? "pad_tail" : "drop_tail"},
        {"target_rate", cfg.segment.target_rate}}},
      {"mel",
       {{"settings", mel_settings},
        {"n_mels", cfg.mel.n_mels},
        {"window", cfg.mel.window == WindowKind::Hann ? "hann" : "hamming"},
        {"fmin", cfg.mel.fmin},
        {"fmax", cfg.mel.fmax},
        {"db_floor", cfg.mel.db_floor},
        {"primary", cfg.mel_primary}}},
      {"superlet",
       {{"fmin", cfg.superlet.fmin},
        {"fmax", cfg.superlet.fmax},
        {"n_freqs", cfg.superlet.n_freqs},
        {"base_cycles", cfg.superlet.base_cycles},
        {"order_min", cfg.superlet.order_min},
        {"order_max", cfg.superlet.order_max},
        {"cycle_mode", to_string(cfg.superlet.cycle_mode)},
        {"k_sd", cfg.superlet.k_sd},
        {"time_hop", cfg.superlet.time_hop},
        {"db_floor", cfg.superlet.db_floor}}},
      {"normalize", cfg.normalize == NormalizeMode::FixedRange ? "fixed_range" : "per_image"},
      {"fixed_range_db", cfg.fixed_range_db},
      {"train",
       {{"stages", stages},
        {"model",
         {{"embed_dim", cfg.model.embed_dim},
          {"conv_widths", cfg.model.conv_widths}}}}},
      {"eval",
       {{"bootstrap_resamples", cfg.eval.bootstrap_resamples},
        {"ci_level", cfg.eval.ci_level}}},
      {"pretrain_manifest", cfg.pretrain_manifest},
      {"export_images", cfg.export_images},
      {"dump_tensors", cfg.dump_tensors},
      {"cache", cfg.cache},
      {"jobs", cfg.jobs},
  };
  return doc.dump(2) + "\n";
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string config_hash(const PipelineConfig& cfg) {
  // execution details (paths, jobs, caching, export toggles) do not
  // change the results, so they stay out of the hash
  json doc = json::parse(serialize_pipeline_config(cfg));
  for (const char* key : {"out_dir", "jobs", "cache", "export_images", "dump_tensors"}) {
    doc.erase(key);
  }
  return hex64(fnv1a64(doc.dump()));
}

SpectrogramTensor preprocess_segment(const AudioSegment& seg,
                                     const PipelineConfig& cfg) {
  SpectrogramTensor t;
  switch (cfg.mode) {
    case SpectrogramMode::MelSingle:
      t = mel_single(seg, cfg.mel.settings[cfg.mel_primary], cfg.mel);
      break;
    case SpectrogramMode::MelMono3:
      t = mel_mono3(seg, cfg.mel);
      break;
    case SpectrogramMode::Superlet:
      t = superlet_transform(seg.samples, seg.sample_rate,
                             cfg.superlet.build(seg.sample_rate));
      break;
  }

  SpectrogramTensor norm;
  if (cfg.normalize == NormalizeMode::PerImageMinMax || t.db_ceil <= t.db_floor) {
    // a tensor pinned to the floor (silence) degenerates to all zeros
    norm = normalize(t, NormalizeMode::PerImageMinMax);
  } else {
    norm = normalize(t, NormalizeMode::FixedRange, t.db_ceil - cfg.fixed_range_db,
                     t.db_ceil);
  }
  if (norm.channels == 1) norm = colormap_tensor(norm);
  round_f32(norm);
  return norm;
}

std::vector<PreparedClip> prepare_clips(const Manifest& manifest,
                                        const std::string& audio_root,
                                        const PipelineConfig& cfg) {
  std::vector<ClipJob> todo;
  for (const ParticipantRecord& part : manifest.participants) {
    for (const ClipRecord& clip : part.clips) {
      if (clip.excluded) continue;
      todo.push_back({&part, &clip});
    }
  }

  const std::string slice = preprocessing_slice(cfg).dump();
  const fs::path cache_dir = fs::path(cfg.out_dir) / "cache";
  if (cfg.cache) fs::create_directories(cache_dir);

  const std::size_t jobs =
      cfg.jobs > 0 ? cfg.jobs
                   : std::max<std::size_t>(1, std::thread::hardware_concurrency());
  std::vector<PreparedClip> prepared(todo.size());
  std::mutex cache_mutex;
  run_jobs(todo.size(), jobs, [&](std::size_t i) {
    const ClipJob& job = todo[i];
    PreparedClip& out = prepared[i];
    out.clip_id = job.clip->clip_id;
    out.participant_id = job.participant->participant_id;
    out.label = job.participant->label;
    out.label_index = job.participant->label == Label::Fail ? 1 : 0;

    const fs::path wav_path = fs::path(audio_root) / job.clip->file_path;
    std::string cache_key;
    if (cfg.cache) {
      cache_key = hex64(fnv1a64(hex64(hash_file(wav_path)) + slice + "v1"));
      const fs::path index_path = cache_dir / (cache_key + ".json");
      std::ifstream index_in(index_path);
      if (index_in) {
        json index = json::parse(index_in, nullptr, false);
        if (!index.is_discarded()) {
          const auto starts = index.at("start_times").get<std::vector<double>>();
          bool ok = true;
          std::vector<SpectrogramTensor> tensors;
          for (std::size_t k = 0; k < starts.size() && ok; ++k) {
            const fs::path part = cache_dir / (cache_key + "_" + std::to_string(k) + ".spt");
            if (!fs::exists(part)) ok = false;
            else tensors.push_back(read_tensor(part.string()));
          }
          if (ok) {
            out.start_times = starts;
            out.segments = std::move(tensors);
            return;
          }
        }
      }
    }

    AudioClip clip = decode_wav_file(wav_path);
    clip.source_id = job.clip->clip_id;
    clip = resample(clip, cfg.segment.target_rate);
    const std::vector<AudioSegment> segs =
        segment(clip, cfg.segment.window_s, cfg.segment.hop_s, cfg.segment.pad);
    for (const AudioSegment& seg : segs) {
      out.segments.push_back(preprocess_segment(seg, cfg));
      out.start_times.push_back(seg.start_time);
    }

    if (cfg.cache) {
      // identical clips share a cache key; serialize writes so concurrent
      // workers never interleave on the same files
      std::lock_guard<std::mutex> lock(cache_mutex);
      for (std::size_t k = 0; k < out.segments.size(); ++k) {
        write_tensor((cache_dir / (cache_key + "_" + std::to_string(k) + ".spt")).string(),
                     out.segments[k]);
      }
      json index = {{"clip_id", out.clip_id}, {"start_times", out.start_times}};
      std::ofstream index_out(cache_dir / (cache_key + ".json"));
      index_out << index.dump() << "\n";
    }
  });
  return prepared;
}

namespace {

Dataset dataset_from(const std::vector<PreparedClip>& clips, std::size_t n_classes) {
  Dataset ds;
  ds.n_classes = n_classes;
  for (const PreparedClip& clip : clips) {
    for (const SpectrogramTensor& t : clip.segments) {
      ds.samples.push_back({t, clip.label_index, clip.clip_id, clip.participant_id});
    }
  }
  return ds;
}

void require_clean(const Manifest& manifest, const std::string& root) {
  const ValidationReport vr = validate_manifest(manifest, root);
  if (vr.ok()) return;
  const ValidationIssue& first = vr.issues.front();
  ErrorCode code = ErrorCode::MissingFile;
  if (first.kind == IssueKind::UnreadableAudio) code = ErrorCode::UnsupportedEncoding;
  if (first.kind == IssueKind::ZeroLength) code = ErrorCode::ZeroSamples;
  throw Error(code, "manifest validation found " + std::to_string(vr.issues.size()) +
                        " issue(s); first: clip '" + first.clip_id + "': " + first.detail);
}

}  // namespace

RunResult run_pipeline(const PipelineConfig& cfg) {
  if (cfg.manifest_path.empty()) {
    throw Error(ErrorCode::ConfigError, "config field 'manifest' is required");
  }
  const std::string hash = config_hash(cfg);
  const fs::path out_dir(cfg.out_dir);
  fs::create_directories(out_dir);

  log_info("loading manifest " + cfg.manifest_path);
  Manifest manifest = load_manifest_file(cfg.manifest_path);
  const std::string audio_root =
      cfg.audio_root.empty() ? fs::path(cfg.manifest_path).parent_path().string()
                             : cfg.audio_root;
  require_clean(manifest, audio_root);

  const Date cutoff = manifest.split_cutoff.has_value()
                          ? *manifest.split_cutoff
                          : Date::parse(cfg.split_cutoff);
  SplitResult split = split_by_epoch(manifest, cutoff);
  log_info("split: " + std::to_string(split.train.participants.size()) + " train / " +
           std::to_string(split.test.participants.size()) + " test participants");

  const std::vector<PreparedClip> train_clips =
      prepare_clips(split.train, audio_root, cfg);
  const std::vector<PreparedClip> test_clips =
      prepare_clips(split.test, audio_root, cfg);

  std::map<std::string, Dataset> datasets;
  datasets["train"] = dataset_from(train_clips, 2);
  datasets["test"] = dataset_from(test_clips, 2);

  if (!cfg.pretrain_manifest.empty()) {
    Manifest pre = load_manifest_file(cfg.pretrain_manifest);
    const std::string pre_root = fs::path(cfg.pretrain_manifest).parent_path().string();
    require_clean(pre, pre_root);
    std::vector<PreparedClip> pre_clips = prepare_clips(pre, pre_root, cfg);
    for (PreparedClip& clip : pre_clips) {
      // class identity rides on the task column for the pretrain corpus
      int cls = 0;
      for (const ParticipantRecord& part : pre.participants) {
        if (part.participant_id != clip.participant_id) continue;
        for (const ClipRecord& rec : part.clips) {
          if (rec.clip_id == clip.clip_id) cls = task_class_index(rec.task);
        }
      }
      clip.label_index = cls;
    }
    datasets["pretrain"] = dataset_from(pre_clips, 5);
  }

  TrainConfig train_cfg;
  train_cfg.stages = cfg.stages.empty()
                         ? std::vector<TrainStage>{TrainStage{}}
                         : cfg.stages;
  if (cfg.stages.empty()) train_cfg.stages[0].dataset_id = "train";
  train_cfg.seed = cfg.seed;
  train_cfg.model = cfg.model;
  train_cfg.model.in_channels = 3;
  train_cfg.model.seed = cfg.seed;

  log_info("training " + std::to_string(train_cfg.stages.size()) + " stage(s) on mode " +
           to_string(cfg.mode));
  TrainResult trained = train(datasets, train_cfg);

  RunResult result;
  result.train_log = trained.log;
  result.checkpoint_path = (out_dir / "checkpoint.spck").string();
  {
    json meta = {{"config_hash", hash},
                 {"seed", cfg.seed},
                 {"mode", to_string(cfg.mode)},
                 {"stages", trained.log.stages.size()}};
    save_checkpoint(result.checkpoint_path, trained.params, meta.dump());
  }

  // clip probability = mean over its segments, participant by majority vote
  std::vector<ParticipantPrediction> parts;
  std::vector<LabeledId> truth;
  {
    std::map<std::string, std::vector<ClipVote>> votes_by_participant;
    for (const PreparedClip& clip : test_clips) {
      double prob = 0.0;
      for (const SpectrogramTensor& t : clip.segments) {
        prob += predict_clip(trained.params, t);
      }
      prob /= static_cast<double>(clip.segments.size());
      votes_by_participant[clip.participant_id].push_back(
          {clip.clip_id, prob >= 0.5 ? Label::Fail : Label::Pass, prob});
    }
    for (const ParticipantRecord& part : split.test.participants) {
      truth.push_back({part.participant_id, part.label});
      parts.push_back(aggregate_participant(
          part.participant_id, votes_by_participant[part.participant_id]));
    }
  }

  EvalOptions eval_options = cfg.eval;
  eval_options.seed = cfg.seed;
  result.report = evaluate_participants(parts, truth, eval_options, hash,
                                        to_string(cfg.mode));

  result.report_path = (out_dir / "report.json").string();
  {
    std::ofstream out(result.report_path);
    if (!out) throw Error(ErrorCode::MissingFile, "cannot write " + result.report_path);
    out << build_report(result.report);
  }
  {
    std::ofstream roc(out_dir / "roc.csv");
    roc << "fpr,tpr,threshold\n";
    for (const RocPoint& pt : result.report.roc.points) {
      roc << pt.fpr << "," << pt.tpr << ",";
      if (std::isinf(pt.threshold)) roc << "inf";
      else roc << pt.threshold;
      roc << "\n";
    }
  }

  if (cfg.export_images) {
    const fs::path image_dir = out_dir / "images";
    fs::create_directories(image_dir);
    const TextChunks text = {{"config_hash", hash}};
    auto export_clip = [&](const PreparedClip& clip) {
      for (std::size_t k = 0; k < clip.segments.size(); ++k) {
        const long start_ms = std::lround(clip.start_times[k] * 1000.0);
        const ImageU8 img = tensor_to_image(clip.segments[k]);
        export_png(img, (image_dir / image_filename(clip.clip_id, start_ms, cfg.mode)).string(),
                   text);
      }
    };
    for (const PreparedClip& clip : train_clips) export_clip(clip);
    for (const PreparedClip& clip : test_clips) export_clip(clip);
    {
      std::vector<std::pair<double, double>> pts;
      for (const RocPoint& pt : result.report.roc.points) pts.push_back({pt.fpr, pt.tpr});
      export_png(plot_roc(pts), (out_dir / "roc.png").string(), text);
      const ConfusionMatrix& cm = result.report.cm;
      export_png(plot_confusion(cm.tp, cm.fn, cm.fp, cm.tn),
                 (out_dir / "confusion.png").string(), text);
    }
  }

  if (cfg.dump_tensors) {
    const fs::path tensor_dir = out_dir / "tensors";
    fs::create_directories(tensor_dir);
    auto dump_clip = [&](const PreparedClip& clip) {
      for (std::size_t k = 0; k < clip.segments.size(); ++k) {
        const long start_ms = std::lround(clip.start_times[k] * 1000.0);
        const std::string name = clip.clip_id + "_" + std::to_string(start_ms) + "_" +
                                 to_string(cfg.mode) + ".spt";
        write_tensor((tensor_dir / name).string(), clip.segments[k]);
      }
    };
    for (const PreparedClip& clip : train_clips) dump_clip(clip);
    for (const PreparedClip& clip : test_clips) dump_clip(clip);
  }

  result.summary_path = (out_dir / "summary.json").string();
  {
    json stage_losses = json::array();
    for (const StageLog& st : trained.log.stages) {
      stage_losses.push_back({{"dataset", st.dataset_id}, {"epoch_loss", st.epoch_loss}});
    }
    const MetricSet& m = result.report.metric_set;
    json summary = {
        {"config_hash", hash},
        {"seed", cfg.seed},
        {"mode", to_string(cfg.mode)},
        {"train_participants", split.train.participants.size()},
        {"test_participants", split.test.participants.size()},
        {"auc", m.auc.has_value() ? json(*m.auc) : json(nullptr)},
        {"sensitivity", m.sensitivity.has_value() ? json(*m.sensitivity) : json(nullptr)},
        {"specificity", m.specificity.has_value() ? json(*m.specificity) : json(nullptr)},
        {"stages", stage_losses},
        {"report", "report.json"},
        {"checkpoint", "checkpoint.spck"},
    };
    std::ofstream out(result.summary_path);
    out << summary.dump(2) << "\n";
  }
  return result;
}

CompareTable compare_reports(const std::vector<std::string>& report_paths) {
  if (report_paths.size() < 2) {
    throw Error(ErrorCode::MissingRun, "compare needs at least two run reports");
  }
  CompareTable table;
  for (const std::string& path : report_paths) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::MissingRun, "missing run report '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    const EvaluationReport rep = parse_report(buf.str());
    CompareRow row;
    row.mode = rep.mode;
    row.config_hash = rep.config_hash;
    row.auc = rep.metric_set.auc.value_or(rep.roc.auc);
    row.sensitivity = rep.metric_set.sensitivity.value_or(std::nan(""));
    row.specificity = rep.metric_set.specificity.value_or(std::nan(""));
    table.rows.push_back(row);
  }

  auto cell = [](double v, const char* absent) {
    if (std::isnan(v)) return std::string(absent);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return std::string(buf);
  };
  std::ostringstream csv, text;
  csv << "mode,config_hash,auc,sensitivity,specificity\n";
  text << "mode        config_hash       auc     sensitivity  specificity\n";
  for (const CompareRow& row : table.rows) {
    csv << row.mode << "," << row.config_hash << "," << cell(row.auc, "") << ","
        << cell(row.sensitivity, "") << "," << cell(row.specificity, "") << "\n";
    char line[160];
    std::snprintf(line, sizeof(line), "%-10s  %s  %-6s  %-11s  %s\n", row.mode.c_str(),
                  row.config_hash.c_str(), cell(row.auc, "-").c_str(),
                  cell(row.sensitivity, "-").c_str(), cell(row.specificity, "-").c_str());
    text << line;
  }
  table.csv = csv.str();
  table.text = text.str();
  return table;
}

}  // namespace specpipe
