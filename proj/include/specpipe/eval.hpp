#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "specpipe/manifest.hpp"

namespace specpipe {

struct ClipVote {
  std::string clip_id;
  Label predicted = Label::Pass;
  double prob_fail = 0.0;
};

struct ParticipantPrediction {
  std::string participant_id;
  std::vector<ClipVote> clip_votes;
  Label vote_label = Label::Pass;
  double mean_prob = 0.0;
};

struct ConfusionMatrix {
  long tp = 0, fn = 0, fp = 0, tn = 0;  // Fail is the positive class
  long total() const { return tp + fn + fp + tn; }
};

struct MetricSet {
  std::optional<double> sensitivity;
  std::optional<double> specificity;
  std::optional<double> precision;
  std::optional<double> f1;
  std::optional<double> accuracy;
  std::optional<double> auc;
  std::optional<std::pair<double, double>> auc_ci;
};

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
  double threshold = 0.0;
};

struct RocResult {
  std::vector<RocPoint> points;  // swept from the highest threshold down
  double auc = 0.0;              // trapezoid == Mann-Whitney
};

// Majority vote over a participant's clips; an exact tie goes to Fail
// (a screening tie escalates to the unsafe class). mean_prob averages
// the clip Fail-probabilities and is the participant's ROC score.
ParticipantPrediction aggregate_participant(const std::string& participant_id,
                                            std::vector<ClipVote> clip_votes);

struct LabeledId {
  std::string participant_id;
  Label label = Label::Pass;
};

// Counts with Fail positive; the two lists must hold exactly the same
// participant ids (any order). Throws IdMismatch otherwise.
ConfusionMatrix confusion(const std::vector<LabeledId>& predicted,
                          const std::vector<LabeledId>& truth);

// Ratio metrics from the matrix; 0/0 ratios come back unset rather
// than 0. AUC fields stay empty here.
MetricSet metrics(const ConfusionMatrix& cm);

// Threshold-sweep ROC over the unique scores plus the pairwise
// Mann-Whitney AUC (ties count one half). Needs both classes present.
RocResult roc_auc(const std::vector<double>& scores,
                  const std::vector<Label>& truth);

// Stratified percentile bootstrap for the AUC: positives and negatives
// resampled independently, nearest-rank percentile interval,
// deterministic under seed.
std::pair<double, double> bootstrap_ci(const std::vector<double>& scores,
                                       const std::vector<Label>& truth,
                                       std::size_t n_resamples, double level,
                                       std::uint64_t seed);

struct EvalOptions {
  std::size_t bootstrap_resamples = 2000;
  double ci_level = 0.95;
  std::uint64_t seed = 42;
};

struct EvaluationReport {
  std::vector<ParticipantPrediction> participants;
  std::vector<Label> truth;  // aligned with participants
  ConfusionMatrix cm;
  MetricSet metric_set;
  RocResult roc;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string mode;
};

// Full participant-level evaluation from clip predictions.
EvaluationReport evaluate_participants(
    const std::vector<ParticipantPrediction>& participants,
    const std::vector<LabeledId>& truth, const EvalOptions& options,
    const std::string& config_hash, const std::string& mode);

// JSON serialization; build_report output round-trips through
// parse_report.
std::string build_report(const EvaluationReport& report);
EvaluationReport parse_report(const std::string& json_text);

}  // namespace specpipe
