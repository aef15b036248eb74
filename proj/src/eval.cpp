#include "specpipe/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "json.hpp"
#include "specpipe/error.hpp"
#include "specpipe/rng.hpp"

namespace specpipe {

namespace {

using nlohmann::json;

// Mann-Whitney over all (positive, negative) pairs; ties count 0.5.
double mann_whitney_auc(const std::vector<double>& pos,
                        const std::vector<double>& neg) {
  double wins = 0.0;
  for (double p : pos) {
    for (double q : neg) {
      if (p > q) wins += 1.0;
      else if (p == q) wins += 0.5;
    }
  }
  return wins / (static_cast<double>(pos.size()) * static_cast<double>(neg.size()));
}

json metric_to_json(const std::optional<double>& v) {
  if (v.has_value()) return *v;
  return nullptr;
}

std::optional<double> metric_from_json(const json& v) {
  if (v.is_null()) return std::nullopt;
  return v.get<double>();
}

}  // namespace

ParticipantPrediction aggregate_participant(const std::string& participant_id,
                                            std::vector<ClipVote> clip_votes) {
  if (clip_votes.empty()) {
    throw Error(ErrorCode::EmptyGroup,
                "participant '" + participant_id + "' has no clip predictions");
  }
  ParticipantPrediction out;
  out.participant_id = participant_id;
  std::size_t fails = 0;
  double prob_sum = 0.0;
  for (const ClipVote& v : clip_votes) {
    fails += v.predicted == Label::Fail ? 1 : 0;
    prob_sum += v.prob_fail;
  }
  const std::size_t passes = clip_votes.size() - fails;
  out.vote_label = fails >= passes ? Label::Fail : Label::Pass;  // tie -> Fail
  out.mean_prob = prob_sum / static_cast<double>(clip_votes.size());
  out.clip_votes = std::move(clip_votes);
  return out;
}

ConfusionMatrix confusion(const std::vector<LabeledId>& predicted,
                          const std::vector<LabeledId>& truth) {
  if (predicted.size() != truth.size()) {
    throw Error(ErrorCode::IdMismatch, "prediction and truth lists differ in length");
  }
  std::map<std::string, Label> truth_by_id;
  for (const LabeledId& t : truth) {
    if (!truth_by_id.emplace(t.participant_id, t.label).second) {
      throw Error(ErrorCode::IdMismatch,
                  "duplicate participant '" + t.participant_id + "' in truth");
    }
  }
  ConfusionMatrix cm;
  std::size_t seen = 0;
  std::map<std::string, bool> used;
  for (const LabeledId& p : predicted) {
    const auto it = truth_by_id.find(p.participant_id);
    if (it == truth_by_id.end() || used[p.participant_id]) {
      throw Error(ErrorCode::IdMismatch,
                  "participant '" + p.participant_id + "' not matched in truth");
    }
    used[p.participant_id] = true;
    seen += 1;
    const bool pred_fail = p.label == Label::Fail;
    const bool true_fail = it->second == Label::Fail;
    if (true_fail && pred_fail) cm.tp += 1;
    else if (true_fail && !pred_fail) cm.fn += 1;
    else if (!true_fail && pred_fail) cm.fp += 1;
    else cm.tn += 1;
  }
  if (seen != truth.size()) {
    throw Error(ErrorCode::IdMismatch, "truth has participants missing from predictions");
  }
  return cm;
}

MetricSet metrics(const ConfusionMatrix& cm) {
  MetricSet m;
  auto ratio = [](long num, long den) -> std::optional<double> {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
  };
  m.sensitivity = ratio(cm.tp, cm.tp + cm.fn);
  m.specificity = ratio(cm.tn, cm.tn + cm.fp);
  m.precision = ratio(cm.tp, cm.tp + cm.fp);
  m.accuracy = ratio(cm.tp + cm.tn, cm.total());
  if (m.precision && m.sensitivity && (*m.precision + *m.sensitivity) > 0.0) {
    m.f1 = 2.0 * *m.precision * *m.sensitivity / (*m.precision + *m.sensitivity);
  }
  return m;
}

RocResult roc_auc(const std::vector<double>& scores,
                  const std::vector<Label>& truth) {
  if (scores.size() != truth.size()) {
    throw Error(ErrorCode::ShapeMismatch, "scores and truth differ in length");
  }
  std::vector<double> pos, neg;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    (truth[i] == Label::Fail ? pos : neg).push_back(scores[i]);
  }
  if (pos.empty() || neg.empty()) {
    throw Error(ErrorCode::SingleClassInput, "ROC needs both classes present");
  }

  // Sweep unique thresholds from high to low; predict Fail when
  // score >= threshold. Tied scores collapse into one step, which is
  // exactly what makes the trapezoid area equal the half-tie
  // Mann-Whitney statistic.
  std::vector<double> uniq = scores;
  std::sort(uniq.begin(), uniq.end(), std::greater<>());
  uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());

  RocResult out;
  const double np = static_cast<double>(pos.size());
  const double nn = static_cast<double>(neg.size());
  out.points.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
  for (double th : uniq) {
    long tp = 0, fp = 0;
    for (double p : pos) tp += p >= th ? 1 : 0;
    for (double q : neg) fp += q >= th ? 1 : 0;
    out.points.push_back({static_cast<double>(fp) / nn,
                          static_cast<double>(tp) / np, th});
  }

  double area = 0.0;
  for (std::size_t i = 1; i < out.points.size(); ++i) {
    const double dx = out.points[i].fpr - out.points[i - 1].fpr;
    area += dx * (out.points[i].tpr + out.points[i - 1].tpr) / 2.0;
  }
  out.auc = area;
  return out;
}

std::pair<double, double> bootstrap_ci(const std::vector<double>& scores,
                                       const std::vector<Label>& truth,
                                       std::size_t n_resamples, double level,
                                       std::uint64_t seed) {
  if (n_resamples < 100) {
    throw Error(ErrorCode::ConfigError, "need at least 100 bootstrap resamples");
  }
  if (!(level > 0.0) || !(level < 1.0)) {
    throw Error(ErrorCode::ConfigError, "confidence level must lie in (0, 1)");
  }
  std::vector<double> pos, neg;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    (truth[i] == Label::Fail ? pos : neg).push_back(scores[i]);
  }
  if (pos.empty() || neg.empty()) {
    throw Error(ErrorCode::SingleClassInput, "bootstrap needs both classes present");
  }

  std::vector<double> aucs(n_resamples);
  std::vector<double> rp(pos.size()), rn(neg.size());
  for (std::size_t r = 0; r < n_resamples; ++r) {
    Rng rng(derive_seed(seed, r));
    for (std::size_t i = 0; i < pos.size(); ++i) rp[i] = pos[rng.uniform_index(pos.size())];
    for (std::size_t i = 0; i < neg.size(); ++i) rn[i] = neg[rng.uniform_index(neg.size())];
    aucs[r] = mann_whitney_auc(rp, rn);
  }
  std::sort(aucs.begin(), aucs.end());

  const double tail = (1.0 - level) / 2.0;
  auto rank = [&aucs](double q) {
    const double k = std::ceil(q * static_cast<double>(aucs.size()));
    const std::size_t idx = k < 1.0 ? 0 : static_cast<std::size_t>(k) - 1;
    return aucs[std::min(idx, aucs.size() - 1)];
  };
  return {rank(tail), rank(1.0 - tail)};
}

EvaluationReport evaluate_participants(
    const std::vector<ParticipantPrediction>& participants,
    const std::vector<LabeledId>& truth, const EvalOptions& options,
    const std::string& config_hash, const std::string& mode) {
  EvaluationReport rep;
  rep.participants = participants;
  rep.config_hash = config_hash;
  rep.seed = options.seed;
  rep.mode = mode;

  std::map<std::string, Label> truth_by_id;
  for (const LabeledId& t : truth) truth_by_id[t.participant_id] = t.label;

  std::vector<LabeledId> predicted;
  std::vector<double> scores;
  std::vector<Label> truth_labels;
  predicted.reserve(participants.size());
  for (const ParticipantPrediction& p : participants) {
    const auto it = truth_by_id.find(p.participant_id);
    if (it == truth_by_id.end()) {
      throw Error(ErrorCode::IdMismatch,
                  "participant '" + p.participant_id + "' has no ground truth");
    }
    predicted.push_back({p.participant_id, p.vote_label});
    scores.push_back(p.mean_prob);
    truth_labels.push_back(it->second);
    rep.truth.push_back(it->second);
  }

  rep.cm = confusion(predicted, truth);
  rep.metric_set = metrics(rep.cm);
  rep.roc = roc_auc(scores, truth_labels);
  rep.metric_set.auc = rep.roc.auc;
  rep.metric_set.auc_ci = bootstrap_ci(scores, truth_labels,
                                       options.bootstrap_resamples,
                                       options.ci_level, options.seed);
  return rep;
}

std::string build_report(const EvaluationReport& report) {
  json doc;
  doc["schema_version"] = 1;
  doc["config_hash"] = report.config_hash;
  doc["seed"] = report.seed;
  doc["mode"] = report.mode;

  json parts = json::array();
  for (std::size_t i = 0; i < report.participants.size(); ++i) {
    const ParticipantPrediction& p = report.participants[i];
    json clips = json::array();
    for (const ClipVote& v : p.clip_votes) {
      clips.push_back({{"clip_id", v.clip_id},
                       {"predicted", to_string(v.predicted)},
                       {"prob_fail", v.prob_fail}});
    }
    parts.push_back({{"participant_id", p.participant_id},
                     {"truth", to_string(report.truth[i])},
                     {"vote", to_string(p.vote_label)},
                     {"mean_prob", p.mean_prob},
                     {"clips", clips}});
  }
  doc["participants"] = parts;

  doc["confusion"] = {{"tp", report.cm.tp}, {"fn", report.cm.fn},
                      {"fp", report.cm.fp}, {"tn", report.cm.tn}};
  const MetricSet& m = report.metric_set;
  doc["metrics"] = {{"sensitivity", metric_to_json(m.sensitivity)},
                    {"specificity", metric_to_json(m.specificity)},
                    {"precision", metric_to_json(m.precision)},
                    {"f1", metric_to_json(m.f1)},
                    {"accuracy", metric_to_json(m.accuracy)},
                    {"auc", metric_to_json(m.auc)}};
  if (m.auc_ci.has_value()) {
    doc["metrics"]["auc_ci"] = {m.auc_ci->first, m.auc_ci->second};
  } else {
    doc["metrics"]["auc_ci"] = nullptr;
  }

  json roc = json::array();
  for (const RocPoint& pt : report.roc.points) {
    roc.push_back({pt.fpr, pt.tpr,
                   std::isinf(pt.threshold) ? json(nullptr) : json(pt.threshold)});
  }
  doc["roc"] = {{"points", roc}, {"auc", report.roc.auc}};
  return doc.dump(2) + "\n";
}

EvaluationReport parse_report(const std::string& json_text) {
  json doc = json::parse(json_text, nullptr, false);
  if (doc.is_discarded()) {
    throw Error(ErrorCode::MalformedRow, "report is not valid JSON");
  }
  if (doc.value("schema_version", 0) != 1) {
    throw Error(ErrorCode::UnsupportedEncoding, "unknown report schema version");
  }
  EvaluationReport rep;
  rep.config_hash = doc.at("config_hash").get<std::string>();
  rep.seed = doc.at("seed").get<std::uint64_t>();
  rep.mode = doc.value("mode", "");

  for (const json& pj : doc.at("participants")) {
    ParticipantPrediction p;
    p.participant_id = pj.at("participant_id").get<std::string>();
    p.vote_label = parse_label(pj.at("vote").get<std::string>());
    p.mean_prob = pj.at("mean_prob").get<double>();
    for (const json& cj : pj.at("clips")) {
      p.clip_votes.push_back({cj.at("clip_id").get<std::string>(),
                              parse_label(cj.at("predicted").get<std::string>()),
                              cj.at("prob_fail").get<double>()});
    }
    rep.truth.push_back(parse_label(pj.at("truth").get<std::string>()));
    rep.participants.push_back(std::move(p));
  }

  const json& cj = doc.at("confusion");
  rep.cm = {cj.at("tp").get<long>(), cj.at("fn").get<long>(),
            cj.at("fp").get<long>(), cj.at("tn").get<long>()};

  const json& mj = doc.at("metrics");
  rep.metric_set.sensitivity = metric_from_json(mj.at("sensitivity"));
  rep.metric_set.specificity = metric_from_json(mj.at("specificity"));
  rep.metric_set.precision = metric_from_json(mj.at("precision"));
  rep.metric_set.f1 = metric_from_json(mj.at("f1"));
  rep.metric_set.accuracy = metric_from_json(mj.at("accuracy"));
  rep.metric_set.auc = metric_from_json(mj.at("auc"));
  if (!mj.at("auc_ci").is_null()) {
    rep.metric_set.auc_ci = {mj.at("auc_ci")[0].get<double>(),
                             mj.at("auc_ci")[1].get<double>()};
  }

  for (const json& rj : doc.at("roc").at("points")) {
    rep.roc.points.push_back(
        {rj[0].get<double>(), rj[1].get<double>(),
         rj[2].is_null() ? std::numeric_limits<double>::infinity()
                         : rj[2].get<double>()});
  }
  rep.roc.auc = doc.at("roc").at("auc").get<double>();
  return rep;
}

}  // namespace specpipe
