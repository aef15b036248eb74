#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "specpipe/spectrogram.hpp"

namespace specpipe {

struct ModelConfig {
  std::size_t in_channels = 3;
  std::array<std::size_t, 3> conv_widths{8, 16, 32};
  std::size_t embed_dim = 32;
  std::uint64_t seed = 42;

  bool operator==(const ModelConfig&) const = default;
};

// Named contiguous span inside the flat parameter vector.
struct ParamGroup {
  std::string name;
  std::size_t offset = 0;
  std::size_t size = 0;
};

// All weights live in one flat vector; `groups` gives the named layout
// (conv1..conv3 weight/bias, proj, head). Flat storage keeps the
// optimizer, finite-difference checks, freeze masks, and checkpoints
// trivial.
struct ModelParams {
  ModelConfig config;
  std::vector<double> values;
  std::vector<ParamGroup> groups;

  static ModelParams init(const ModelConfig& config);
  const ParamGroup& group(const std::string& name) const;  // throws ConfigError
};

struct ForwardResult {
  std::array<double, 2> logits{};  // index 0 = Pass, 1 = Fail
  std::vector<double> embedding;   // unit L2 norm
};

// Forward pass for one tensor; ShapeMismatch if channels disagree with
// the config. Works for any spatial size (global average pooling).
ForwardResult forward(const ModelParams& params, const SpectrogramTensor& x);

// softmax(logits)[Fail]
double predict_clip(const ModelParams& params, const SpectrogramTensor& x);

// w_c = N_total / (n_classes * N_c). Throws EmptyClass on a zero count.
std::vector<double> class_weights(const std::vector<std::size_t>& counts);

struct LossResult {
  double loss = 0.0;
  double ce = 0.0;
  double contrastive = 0.0;
  std::vector<std::array<double, 2>> dlogits;
  std::vector<std::vector<double>> dembeddings;
};

// L = lambda * CE_w + (1 - lambda) * L_con with gradients w.r.t. logits
// and embeddings. CE_w is the weight-normalised cross-entropy; L_con is
// the mean over unordered pairs of d^2 (same label) or max(0, m - d)^2
// (different labels). Labels must be < 2 whenever lambda > 0.
LossResult hybrid_loss(const std::vector<std::array<double, 2>>& logits,
                       const std::vector<std::vector<double>>& embeddings,
                       const std::vector<int>& labels,
                       const std::vector<double>& weights, double lambda,
                       double margin);

struct BatchGradient {
  double loss = 0.0;
  std::vector<double> grads;  // layout of ModelParams::values
};

// Forward + hybrid loss + full backward for one batch; the gradient of
// the batch loss with respect to every parameter.
BatchGradient batch_gradient(const ModelParams& params,
                             const std::vector<const SpectrogramTensor*>& inputs,
                             const std::vector<int>& labels,
                             const std::vector<double>& weights, double lambda,
                             double margin);

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t t = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static AdamState init(std::size_t n_params);
};

// Standard bias-corrected Adam update in place. `frozen` (same length as
// params, nonzero = skip) leaves masked parameters and their moments
// untouched. Throws NonFiniteGradient if any unmasked gradient is not
// finite.
void adam_step(std::vector<double>& params, const std::vector<double>& grads,
               AdamState& state, double lr,
               const std::vector<std::uint8_t>& frozen = {});

struct Sample {
  SpectrogramTensor tensor;
  int label = 0;
  std::string clip_id;
  std::string participant_id;
};

struct Dataset {
  std::vector<Sample> samples;
  std::size_t n_classes = 2;
};

struct TrainStage {
  std::string dataset_id;
  std::size_t epochs = 20;
  double learning_rate = 1e-3;
  std::size_t batch_size = 16;
  double lambda = 0.5;
  double margin = 1.0;
  std::vector<std::string> freeze;  // parameter group names
  std::string val_dataset_id;       // optional
};

struct TrainConfig {
  std::vector<TrainStage> stages;
  std::uint64_t seed = 42;
  ModelConfig model;
};

struct StageLog {
  std::string dataset_id;
  std::vector<double> epoch_loss;
  std::optional<double> val_accuracy;
};

struct TrainLog {
  std::vector<StageLog> stages;
};

struct TrainResult {
  ModelParams params;
  TrainLog log;
};

// Stages run in order on the named datasets; parameters carry across
// stages; gradient accumulation, shuffling, and init all derive from the
// config seed, so a fixed seed reproduces the run bit for bit.
TrainResult train(const std::map<std::string, Dataset>& datasets,
                  const TrainConfig& cfg);

// Versioned checkpoint: magic + header + JSON metadata + float32 blocks.
void save_checkpoint(const std::string& path, const ModelParams& params,
                     const std::string& meta_json);
ModelParams load_checkpoint(const std::string& path,
                            std::string* meta_json = nullptr);

}  // namespace specpipe
