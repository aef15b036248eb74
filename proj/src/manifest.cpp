#include "specpipe/manifest.hpp"

#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"
#include "specpipe/error.hpp"
#include "specpipe/wav.hpp"

namespace specpipe {

namespace {

constexpr const char* kHeader =
    "participant_id,clip_id,file_path,task,repetition,label,enrollment_date";

std::vector<std::string> split_csv_row(const std::string& line, std::size_t line_no) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"' && cur.empty()) {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (quoted) {
    throw Error(ErrorCode::MalformedRow, "unterminated quote on line " + std::to_string(line_no));
  }
  fields.push_back(cur);
  return fields;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += '"';
  return out;
}

struct RowData {
  std::string participant_id;
  ClipRecord clip;
  Label label;
  Date date;
};

Manifest build_from_rows(const std::vector<RowData>& rows) {
  Manifest m;
  std::unordered_map<std::string, std::size_t> participant_index;
  std::unordered_set<std::string> clip_ids;
  for (const RowData& row : rows) {
    if (!clip_ids.insert(row.clip.clip_id).second) {
      throw Error(ErrorCode::DuplicateClipId, row.clip.clip_id);
    }
    auto it = participant_index.find(row.participant_id);
    if (it == participant_index.end()) {
      participant_index.emplace(row.participant_id, m.participants.size());
      ParticipantRecord p;
      p.participant_id = row.participant_id;
      p.label = row.label;
      p.enrollment_date = row.date;
      p.clips.push_back(row.clip);
      m.participants.push_back(std::move(p));
    } else {
      ParticipantRecord& p = m.participants[it->second];
      if (p.label != row.label) {
        throw Error(ErrorCode::ConflictingLabel,
                    "participant " + row.participant_id + " has both labels");
      }
      if (p.enrollment_date != row.date) {
        throw Error(ErrorCode::ConflictingDate,
                    "participant " + row.participant_id + " has two enrollment dates");
      }
      p.clips.push_back(row.clip);
    }
  }
  return m;
}

}  // namespace

const char* to_string(Label label) { return label == Label::Fail ? "fail" : "pass"; }

const char* to_string(Task task) {
  switch (task) {
    case Task::NihssSpeech: return "speech";
    case Task::NihssSentence: return "sentence";
    case Task::NihssWord: return "word";
    case Task::VowelA: return "vowel_a";
    case Task::VowelE: return "vowel_e";
    case Task::VowelI: return "vowel_i";
    case Task::VowelO: return "vowel_o";
    case Task::VowelU: return "vowel_u";
  }
  return "?";
}

Label parse_label(const std::string& text) {
  if (text == "pass") return Label::Pass;
  if (text == "fail") return Label::Fail;
  throw Error(ErrorCode::UnknownLabel, "'" + text + "' (expected pass|fail)");
}

Task parse_task(const std::string& text) {
  if (text == "speech") return Task::NihssSpeech;
  if (text == "sentence") return Task::NihssSentence;
  if (text == "word") return Task::NihssWord;
  if (text == "vowel_a") return Task::VowelA;
  if (text == "vowel_e") return Task::VowelE;
  if (text == "vowel_i") return Task::VowelI;
  if (text == "vowel_o") return Task::VowelO;
  if (text == "vowel_u") return Task::VowelU;
  throw Error(ErrorCode::UnknownTask, "'" + text + "'");
}

std::size_t Manifest::clip_count() const {
  std::size_t n = 0;
  for (const auto& p : participants) n += p.clips.size();
  return n;
}

std::map<Label, std::size_t> Manifest::label_counts() const {
  std::map<Label, std::size_t> counts;
  for (const auto& p : participants) ++counts[p.label];
  return counts;
}

Manifest parse_manifest(const std::string& csv_text) {
  std::istringstream in(csv_text);
  std::string line;
  std::size_t line_no = 0;
  std::vector<RowData> rows;
  bool saw_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!saw_header) {
      auto fields = split_csv_row(line, line_no);
      std::string joined;
      for (std::size_t i = 0; i < fields.size() && i < 7; ++i) {
        if (i) joined += ',';
        joined += fields[i];
      }
      if (joined != kHeader) {
        throw Error(ErrorCode::MalformedRow, "header must be '" + std::string(kHeader) + "'");
      }
      saw_header = true;
      continue;
    }
    auto fields = split_csv_row(line, line_no);
    if (fields.size() != 7 && fields.size() != 8) {
      throw Error(ErrorCode::MalformedRow,
                  "line " + std::to_string(line_no) + " has " + std::to_string(fields.size()) +
                      " fields, expected 7 or 8");
    }
    RowData row;
    row.participant_id = fields[0];
    row.clip.clip_id = fields[1];
    row.clip.file_path = fields[2];
    row.clip.task = parse_task(fields[3]);
    try {
      row.clip.repetition_index = std::stoi(fields[4]);
    } catch (const std::exception&) {
      throw Error(ErrorCode::MalformedRow,
                  "line " + std::to_string(line_no) + ": repetition '" + fields[4] + "'");
    }
    row.label = parse_label(fields[5]);
    row.date = Date::parse(fields[6]);
    if (fields.size() == 8) {
      if (fields[7] != "0" && fields[7] != "1") {
        throw Error(ErrorCode::MalformedRow,
                    "line " + std::to_string(line_no) + ": excluded must be 0 or 1");
      }
      row.clip.excluded = fields[7] == "1";
    }
    if (row.participant_id.empty() || row.clip.clip_id.empty()) {
      throw Error(ErrorCode::MalformedRow, "line " + std::to_string(line_no) + ": empty id");
    }
    rows.push_back(std::move(row));
  }
  if (!saw_header) throw Error(ErrorCode::MalformedRow, "empty manifest");
  return build_from_rows(rows);
}

std::string serialize_manifest(const Manifest& m) {
  std::ostringstream out;
  bool any_excluded = false;
  for (const auto& p : m.participants) {
    for (const auto& c : p.clips) any_excluded |= c.excluded;
  }
  out << kHeader;
  if (any_excluded) out << ",excluded";
  out << '\n';
  for (const auto& p : m.participants) {
    for (const auto& c : p.clips) {
      out << csv_escape(p.participant_id) << ',' << csv_escape(c.clip_id) << ','
          << csv_escape(c.file_path) << ',' << to_string(c.task) << ',' << c.repetition_index
          << ',' << to_string(p.label) << ',' << p.enrollment_date.to_string();
      if (any_excluded) out << ',' << (c.excluded ? '1' : '0');
      out << '\n';
    }
  }
  return out.str();
}

Manifest parse_manifest_json(const std::string& json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedRow, std::string("manifest JSON: ") + e.what());
  }
  if (!doc.contains("rows") || !doc["rows"].is_array()) {
    throw Error(ErrorCode::MalformedRow, "manifest JSON needs a 'rows' array");
  }
  std::vector<RowData> rows;
  for (const auto& r : doc["rows"]) {
    RowData row;
    try {
      row.participant_id = r.at("participant_id").get<std::string>();
      row.clip.clip_id = r.at("clip_id").get<std::string>();
      row.clip.file_path = r.at("file_path").get<std::string>();
      row.clip.task = parse_task(r.at("task").get<std::string>());
      row.clip.repetition_index = r.at("repetition").get<int>();
      row.label = parse_label(r.at("label").get<std::string>());
      row.date = Date::parse(r.at("enrollment_date").get<std::string>());
      row.clip.excluded = r.value("excluded", false);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::MalformedRow, std::string("manifest JSON row: ") + e.what());
    }
    if (row.participant_id.empty() || row.clip.clip_id.empty()) {
      throw Error(ErrorCode::MalformedRow, "manifest JSON row: empty id");
    }
    rows.push_back(std::move(row));
  }
  return build_from_rows(rows);
}

std::string serialize_manifest_json(const Manifest& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& p : m.participants) {
    for (const auto& c : p.clips) {
      nlohmann::json r = {
          {"participant_id", p.participant_id},
          {"clip_id", c.clip_id},
          {"file_path", c.file_path},
          {"task", to_string(c.task)},
          {"repetition", c.repetition_index},
          {"label", to_string(p.label)},
          {"enrollment_date", p.enrollment_date.to_string()},
      };
      if (c.excluded) r["excluded"] = true;
      rows.push_back(std::move(r));
    }
  }
  return nlohmann::json{{"rows", rows}}.dump(2);
}

Manifest load_manifest_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  if (path.extension() == ".json") return parse_manifest_json(buf.str());
  return parse_manifest(buf.str());
}

void save_manifest_file(const Manifest& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  out << (path.extension() == ".json" ? serialize_manifest_json(m) : serialize_manifest(m));
  if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

SplitResult split_by_epoch(const Manifest& m, const Date& cutoff) {
  SplitResult result;
  for (const auto& p : m.participants) {
    if (p.enrollment_date < cutoff) {
      result.train.participants.push_back(p);
    } else {
      result.test.participants.push_back(p);
    }
  }
  if (result.train.participants.empty() || result.test.participants.empty()) {
    throw Error(ErrorCode::EmptySplit,
                "cutoff " + cutoff.to_string() + " leaves " +
                    std::to_string(result.train.participants.size()) + " train / " +
                    std::to_string(result.test.participants.size()) + " test participants");
  }
  result.train.split_cutoff = cutoff;
  result.test.split_cutoff = cutoff;
  return result;
}

ValidationReport validate_manifest(const Manifest& m, const std::filesystem::path& root) {
  ValidationReport report;
  for (const auto& p : m.participants) {
    for (const auto& c : p.clips) {
      std::filesystem::path full = root / c.file_path;
      std::error_code ec;
      if (!std::filesystem::exists(full, ec) || ec) {
        report.issues.push_back({c.clip_id, IssueKind::MissingFile, full.string()});
        continue;
      }
      if (std::filesystem::file_size(full, ec) == 0 || ec) {
        report.issues.push_back({c.clip_id, IssueKind::UnreadableAudio, "zero-byte file"});
        continue;
      }
      try {
        AudioClip clip = decode_wav_file(full);
        if (clip.samples.empty()) {
          report.issues.push_back({c.clip_id, IssueKind::ZeroLength, full.string()});
        }
      } catch (const Error& e) {
        report.issues.push_back({c.clip_id, IssueKind::UnreadableAudio, e.what()});
      }
    }
  }
  return report;
}

}  // namespace specpipe
