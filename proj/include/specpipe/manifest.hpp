#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "specpipe/date.hpp"

namespace specpipe {

// Participant-level screening outcome. Fail is the positive class throughout.
enum class Label { Pass, Fail };

enum class Task {
  NihssSpeech,
  NihssSentence,
  NihssWord,
  VowelA,
  VowelE,
  VowelI,
  VowelO,
  VowelU,
};

const char* to_string(Label label);
const char* to_string(Task task);
Label parse_label(const std::string& text);
Task parse_task(const std::string& text);

struct ClipRecord {
  std::string clip_id;
  std::string file_path;  // relative to the manifest's audio root
  Task task = Task::VowelA;
  int repetition_index = 0;
  bool excluded = false;  // quality-review exclusion is per clip

  bool operator==(const ClipRecord&) const = default;
};

struct ParticipantRecord {
  std::string participant_id;
  Label label = Label::Pass;
  Date enrollment_date;
  std::vector<ClipRecord> clips;

  bool operator==(const ParticipantRecord&) const = default;
};

struct Manifest {
  std::vector<ParticipantRecord> participants;
  std::optional<Date> split_cutoff;

  std::size_t clip_count() const;
  std::map<Label, std::size_t> label_counts() const;

  bool operator==(const Manifest&) const = default;
};

struct SplitResult {
  Manifest train;
  Manifest test;
};

enum class IssueKind { MissingFile, UnreadableAudio, ZeroLength };

struct ValidationIssue {
  std::string clip_id;
  IssueKind kind;
  std::string detail;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;
  bool ok() const { return issues.empty(); }
};

// CSV schema: participant_id,clip_id,file_path,task,repetition,label,enrollment_date
// with an optional eighth column `excluded` (0/1). Dates are ISO-8601; rows are
// grouped under their participant in first-appearance order. Participants whose
// enrollment date is on or after the split cutoff land in the test split.
Manifest parse_manifest(const std::string& csv_text);
std::string serialize_manifest(const Manifest& m);

// JSON mirror of the same schema.
Manifest parse_manifest_json(const std::string& json_text);
std::string serialize_manifest_json(const Manifest& m);

Manifest load_manifest_file(const std::filesystem::path& path);
void save_manifest_file(const Manifest& m, const std::filesystem::path& path);

// Strictly-before-cutoff participants go to train, the rest to test.
SplitResult split_by_epoch(const Manifest& m, const Date& cutoff);

ValidationReport validate_manifest(const Manifest& m, const std::filesystem::path& root);

}  // namespace specpipe
