// specpipe: speech-screening spectrogram pipeline.
//
// Subcommands mirror the pipeline stages; `run` chains them all. Every
// artifact embeds the config hash so runs can be matched to settings.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "specpipe/error.hpp"
#include "specpipe/pipeline.hpp"
#include "specpipe/synth.hpp"
#include "specpipe/tensor_io.hpp"
#include "specpipe/wav.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace specpipe;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingFile, "cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// --config/--seed/--jobs/--out shared by every config-driven subcommand.
struct CommonOpts {
  std::string config_path;
  std::uint64_t seed = 0;
  std::size_t jobs = 0;
  std::string out;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* jobs_opt = nullptr;
  CLI::Option* out_opt = nullptr;

  void attach(CLI::App* sub) {
    sub->add_option("--config", config_path, "pipeline config (JSON)");
    seed_opt = sub->add_option("--seed", seed, "override the config seed");
    jobs_opt = sub->add_option("--jobs", jobs, "per-clip worker threads (0 = all cores)");
    out_opt = sub->add_option("--out", out, "override the output directory");
  }

  PipelineConfig resolve() const {
    PipelineConfig cfg = config_path.empty()
                             ? parse_pipeline_config("{}")
                             : parse_pipeline_config(read_file(config_path));
    if (seed_opt && seed_opt->count() > 0) cfg.seed = seed;
    if (jobs_opt && jobs_opt->count() > 0) cfg.jobs = jobs;
    if (out_opt && out_opt->count() > 0) cfg.out_dir = out;
    return cfg;
  }
};

void require_manifest(const PipelineConfig& cfg) {
  if (cfg.manifest_path.empty()) {
    throw Error(ErrorCode::ConfigError, "config field 'manifest' is required");
  }
}

std::string resolve_audio_root(const PipelineConfig& cfg) {
  return cfg.audio_root.empty() ? fs::path(cfg.manifest_path).parent_path().string()
                                : cfg.audio_root;
}

Manifest load_valid_manifest(const PipelineConfig& cfg, const std::string& root) {
  Manifest m = load_manifest_file(cfg.manifest_path);
  const ValidationReport vr = validate_manifest(m, root);
  if (!vr.ok()) {
    const ValidationIssue& first = vr.issues.front();
    ErrorCode code = ErrorCode::MissingFile;
    if (first.kind == IssueKind::UnreadableAudio) code = ErrorCode::UnsupportedEncoding;
    if (first.kind == IssueKind::ZeroLength) code = ErrorCode::ZeroSamples;
    throw Error(code, "manifest validation found " + std::to_string(vr.issues.size()) +
                          " issue(s); first: clip '" + first.clip_id + "': " + first.detail);
  }
  return m;
}

int cmd_generate(const std::string& out, std::uint64_t seed, bool pretrain,
                 std::size_t participants, std::size_t clips) {
  Manifest m = pretrain ? generate_pretrain(out, seed, participants, clips)
                        : generate_benchmark(out, seed, participants);
  const auto counts = m.label_counts();
  std::cout << "wrote " << m.participants.size() << " participants ("
            << counts.at(Label::Fail) << " fail / " << counts.at(Label::Pass)
            << " pass), " << m.clip_count() << " clips, to " << out
            << "/manifest.csv\n";
  return 0;
}

int cmd_segment(const CommonOpts& opts) {
  const PipelineConfig cfg = opts.resolve();
  require_manifest(cfg);
  const std::string root = resolve_audio_root(cfg);
  const Manifest m = load_valid_manifest(cfg, root);

  const fs::path seg_dir = fs::path(cfg.out_dir) / "segments";
  fs::create_directories(seg_dir);
  json index = {{"config_hash", config_hash(cfg)}, {"clips", json::array()}};
  std::size_t n_segments = 0;
  for (const ParticipantRecord& part : m.participants) {
    for (const ClipRecord& rec : part.clips) {
      if (rec.excluded) continue;
      AudioClip clip = decode_wav_file(fs::path(root) / rec.file_path);
      clip.source_id = rec.clip_id;
      clip = resample(clip, cfg.segment.target_rate);
      json entry = {{"clip_id", rec.clip_id},
                    {"participant_id", part.participant_id},
                    {"segments", json::array()}};
      for (const AudioSegment& seg : segment(clip, cfg.segment.window_s,
                                             cfg.segment.hop_s, cfg.segment.pad)) {
        const long start_ms = std::lround(seg.start_time * 1000.0);
        const std::string name = rec.clip_id + "_" + std::to_string(start_ms) + ".wav";
        AudioClip piece{seg.samples, seg.sample_rate, rec.clip_id};
        write_wav_file(piece, seg_dir / name);
        entry["segments"].push_back({{"file", name}, {"start_s", seg.start_time}});
        ++n_segments;
      }
      index["clips"].push_back(entry);
    }
  }
  std::ofstream out(seg_dir / "index.json");
  out << index.dump(2) << "\n";
  std::cout << "wrote " << n_segments << " segments to " << seg_dir.string() << "\n";
  return 0;
}

int cmd_spectrogram(const CommonOpts& opts) {
  const PipelineConfig cfg = opts.resolve();
  require_manifest(cfg);
  const std::string root = resolve_audio_root(cfg);
  const Manifest m = load_valid_manifest(cfg, root);
  const std::string hash = config_hash(cfg);

  const std::vector<PreparedClip> clips = prepare_clips(m, root, cfg);
  const fs::path out_dir(cfg.out_dir);
  const fs::path image_dir = out_dir / "images";
  const fs::path tensor_dir = out_dir / "tensors";
  if (cfg.export_images) fs::create_directories(image_dir);
  if (cfg.dump_tensors) fs::create_directories(tensor_dir);

  json index = {{"config_hash", hash},
                {"mode", to_string(cfg.mode)},
                {"clips", json::array()}};
  std::size_t n_tensors = 0;
  const TextChunks text = {{"config_hash", hash}};
  for (const PreparedClip& clip : clips) {
    json entry = {{"clip_id", clip.clip_id}, {"segments", json::array()}};
    for (std::size_t k = 0; k < clip.segments.size(); ++k) {
      const long start_ms = std::lround(clip.start_times[k] * 1000.0);
      const std::string stem = image_filename(clip.clip_id, start_ms, cfg.mode);
      if (cfg.export_images) {
        export_png(tensor_to_image(clip.segments[k]), (image_dir / stem).string(), text);
      }
      if (cfg.dump_tensors) {
        const std::string name = stem.substr(0, stem.size() - 4) + ".spt";
        write_tensor((tensor_dir / name).string(), clip.segments[k]);
      }
      entry["segments"].push_back({{"image", stem}, {"start_s", clip.start_times[k]}});
      ++n_tensors;
    }
    index["clips"].push_back(entry);
  }
  std::ofstream out(out_dir / "spectrograms.json");
  out << index.dump(2) << "\n";
  std::cout << "processed " << n_tensors << " segments (" << to_string(cfg.mode)
            << ") into " << out_dir.string() << "\n";
  return 0;
}

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

int cmd_train(const CommonOpts& opts) {
  const PipelineConfig cfg = opts.resolve();
  require_manifest(cfg);
  const std::string root = resolve_audio_root(cfg);
  const Manifest m = load_valid_manifest(cfg, root);
  const std::string hash = config_hash(cfg);

  const Date cutoff = m.split_cutoff.has_value() ? *m.split_cutoff
                                                 : Date::parse(cfg.split_cutoff);
  const SplitResult split = split_by_epoch(m, cutoff);

  std::map<std::string, Dataset> datasets;
  datasets["train"] = dataset_from(prepare_clips(split.train, root, cfg), 2);
  datasets["test"] = dataset_from(prepare_clips(split.test, root, cfg), 2);

  TrainConfig train_cfg;
  train_cfg.stages = cfg.stages.empty() ? std::vector<TrainStage>{TrainStage{}}
                                        : cfg.stages;
  if (cfg.stages.empty()) train_cfg.stages[0].dataset_id = "train";
  train_cfg.seed = cfg.seed;
  train_cfg.model = cfg.model;
  train_cfg.model.in_channels = 3;
  train_cfg.model.seed = cfg.seed;

  const TrainResult trained = train(datasets, train_cfg);

  fs::create_directories(cfg.out_dir);
  const std::string checkpoint = (fs::path(cfg.out_dir) / "checkpoint.spck").string();
  json meta = {{"config_hash", hash}, {"seed", cfg.seed}, {"mode", to_string(cfg.mode)}};
  save_checkpoint(checkpoint, trained.params, meta.dump());

  json log = {{"config_hash", hash}, {"seed", cfg.seed}, {"stages", json::array()}};
  for (const StageLog& st : trained.log.stages) {
    json sj = {{"dataset", st.dataset_id}, {"epoch_loss", st.epoch_loss}};
    if (st.val_accuracy.has_value()) sj["val_accuracy"] = *st.val_accuracy;
    log["stages"].push_back(sj);
  }
  std::ofstream out(fs::path(cfg.out_dir) / "train_log.json");
  out << log.dump(2) << "\n";

  const double last = trained.log.stages.empty() || trained.log.stages.back().epoch_loss.empty()
                          ? 0.0
                          : trained.log.stages.back().epoch_loss.back();
  std::cout << "trained " << trained.log.stages.size() << " stage(s); final epoch loss "
            << last << "; checkpoint " << checkpoint << "\n";
  return 0;
}

int cmd_evaluate(const CommonOpts& opts, const std::string& checkpoint_flag) {
  const PipelineConfig cfg = opts.resolve();
  require_manifest(cfg);
  const std::string root = resolve_audio_root(cfg);
  const Manifest m = load_valid_manifest(cfg, root);
  const std::string hash = config_hash(cfg);

  const std::string checkpoint =
      checkpoint_flag.empty() ? (fs::path(cfg.out_dir) / "checkpoint.spck").string()
                              : checkpoint_flag;
  const ModelParams params = load_checkpoint(checkpoint);

  const Date cutoff = m.split_cutoff.has_value() ? *m.split_cutoff
                                                 : Date::parse(cfg.split_cutoff);
  const SplitResult split = split_by_epoch(m, cutoff);
  const std::vector<PreparedClip> test_clips = prepare_clips(split.test, root, cfg);

  std::map<std::string, std::vector<ClipVote>> votes;
  for (const PreparedClip& clip : test_clips) {
    double prob = 0.0;
    for (const SpectrogramTensor& t : clip.segments) prob += predict_clip(params, t);
    prob /= static_cast<double>(clip.segments.size());
    votes[clip.participant_id].push_back(
        {clip.clip_id, prob >= 0.5 ? Label::Fail : Label::Pass, prob});
  }
  std::vector<ParticipantPrediction> parts;
  std::vector<LabeledId> truth;
  for (const ParticipantRecord& part : split.test.participants) {
    truth.push_back({part.participant_id, part.label});
    parts.push_back(aggregate_participant(part.participant_id, votes[part.participant_id]));
  }

  EvalOptions eval_options = cfg.eval;
  eval_options.seed = cfg.seed;
  const EvaluationReport report =
      evaluate_participants(parts, truth, eval_options, hash, to_string(cfg.mode));

  fs::create_directories(cfg.out_dir);
  const std::string report_path = (fs::path(cfg.out_dir) / "report.json").string();
  {
    std::ofstream out(report_path);
    out << build_report(report);
  }
  {
    std::ofstream roc(fs::path(cfg.out_dir) / "roc.csv");
    roc << "fpr,tpr,threshold\n";
    for (const RocPoint& pt : report.roc.points) {
      roc << pt.fpr << "," << pt.tpr << ",";
      if (std::isinf(pt.threshold)) roc << "inf";
      else roc << pt.threshold;
      roc << "\n";
    }
  }

  const MetricSet& ms = report.metric_set;
  std::cout << "auc " << (ms.auc ? std::to_string(*ms.auc) : "n/a") << ", sensitivity "
            << (ms.sensitivity ? std::to_string(*ms.sensitivity) : "n/a")
            << ", specificity "
            << (ms.specificity ? std::to_string(*ms.specificity) : "n/a") << "; report "
            << report_path << "\n";
  return 0;
}

int cmd_run(const CommonOpts& opts) {
  const PipelineConfig cfg = opts.resolve();
  const RunResult result = run_pipeline(cfg);
  const MetricSet& ms = result.report.metric_set;
  std::cout << "mode " << result.report.mode << ": auc "
            << (ms.auc ? std::to_string(*ms.auc) : "n/a") << ", sensitivity "
            << (ms.sensitivity ? std::to_string(*ms.sensitivity) : "n/a")
            << ", specificity "
            << (ms.specificity ? std::to_string(*ms.specificity) : "n/a") << "\n"
            << "report " << result.report_path << "\n";
  return 0;
}

int cmd_compare(const std::vector<std::string>& reports, const std::string& out) {
  const CompareTable table = compare_reports(reports);
  if (!out.empty()) {
    fs::create_directories(out);
    std::ofstream csv(fs::path(out) / "comparison.csv");
    csv << table.csv;
    std::ofstream text(fs::path(out) / "comparison.txt");
    text << table.text;
  }
  std::cout << table.text;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"speech screening pipeline: spectrograms, training, evaluation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "specpipe 1.0.0");

  // generate
  auto* gen = app.add_subcommand("generate", "synthesize a labelled WAV corpus + manifest");
  std::string gen_out = "corpus";
  std::uint64_t gen_seed = 42;
  bool gen_pretrain = false;
  std::size_t gen_participants = 0;
  std::size_t gen_clips = 5;
  gen->add_option("--out", gen_out, "corpus directory");
  gen->add_option("--seed", gen_seed, "generator seed");
  gen->add_flag("--pretrain", gen_pretrain, "multi-class pretraining corpus instead of the benchmark");
  auto* gen_n = gen->add_option("--participants", gen_participants, "participant count");
  gen->add_option("--clips", gen_clips, "clips per participant (pretrain only)");

  CommonOpts seg_opts, spec_opts, train_opts, eval_opts, run_opts;
  auto* seg = app.add_subcommand("segment", "decode, resample, and window clips to WAV segments");
  seg_opts.attach(seg);
  auto* spec = app.add_subcommand("spectrogram", "render per-segment spectrogram tensors/images");
  spec_opts.attach(spec);
  auto* tr = app.add_subcommand("train", "train the classifier on the pre-cutoff split");
  train_opts.attach(tr);
  auto* ev = app.add_subcommand("evaluate", "score the post-cutoff split with a checkpoint");
  eval_opts.attach(ev);
  std::string eval_checkpoint;
  ev->add_option("--checkpoint", eval_checkpoint, "checkpoint path (default <out>/checkpoint.spck)");
  auto* run = app.add_subcommand("run", "generate-to-report pipeline in one invocation");
  run_opts.attach(run);

  auto* cmp = app.add_subcommand("compare", "tabulate metrics across run reports");
  std::vector<std::string> cmp_reports;
  std::string cmp_out;
  cmp->add_option("reports", cmp_reports, "report.json paths from previous runs");
  cmp->add_option("--out", cmp_out, "also write comparison.csv/.txt here");

  try {
    app.parse(argc, argv);
    if (gen->parsed()) {
      const std::size_t n = gen_n->count() > 0 ? gen_participants
                                               : (gen_pretrain ? 10 : 68);
      return cmd_generate(gen_out, gen_seed, gen_pretrain, n, gen_clips);
    }
    if (seg->parsed()) return cmd_segment(seg_opts);
    if (spec->parsed()) return cmd_spectrogram(spec_opts);
    if (tr->parsed()) return cmd_train(train_opts);
    if (ev->parsed()) return cmd_evaluate(eval_opts, eval_checkpoint);
    if (run->parsed()) return cmd_run(run_opts);
    if (cmp->parsed()) return cmd_compare(cmp_reports, cmp_out);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    switch (e.category()) {
      case ErrorCategory::Config: return 1;
      case ErrorCategory::Data: return 2;
      case ErrorCategory::Numeric: return 3;
    }
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
