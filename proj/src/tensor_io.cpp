#include "specpipe/tensor_io.hpp"

#include <fstream>
#include <vector>

#include "json.hpp"
#include "specpipe/error.hpp"

namespace specpipe {

void write_tensor(const std::string& path, const SpectrogramTensor& t) {
  if (t.data.size() != t.size()) {
    throw Error(ErrorCode::ShapeMismatch, "tensor buffer does not match its shape");
  }
  {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::MissingFile, "cannot open '" + path + "' for writing");
    for (double v : t.data) {
      const float f = static_cast<float>(v);
      out.write(reinterpret_cast<const char*>(&f), 4);
    }
    if (!out) throw Error(ErrorCode::TruncatedFile, "short write to '" + path + "'");
  }
  nlohmann::json side = {
      {"mode", to_string(t.mode)},
      {"shape", {t.channels, t.bands, t.frames}},
      {"db_floor", t.db_floor},
      {"db_ceil", t.db_ceil},
  };
  std::ofstream meta(path + ".json");
  if (!meta) throw Error(ErrorCode::MissingFile, "cannot open '" + path + ".json'");
  meta << side.dump(2) << "\n";
}

SpectrogramTensor read_tensor(const std::string& path) {
  std::ifstream meta(path + ".json");
  if (!meta) throw Error(ErrorCode::MissingFile, "missing sidecar '" + path + ".json'");
  nlohmann::json side = nlohmann::json::parse(meta, nullptr, false);
  if (side.is_discarded()) {
    throw Error(ErrorCode::MalformedRow, "sidecar '" + path + ".json' is not valid JSON");
  }
  SpectrogramTensor t;
  t.mode = parse_spectrogram_mode(side.at("mode").get<std::string>());
  const auto shape = side.at("shape").get<std::vector<std::size_t>>();
  if (shape.size() != 3) {
    throw Error(ErrorCode::ShapeMismatch, "sidecar shape must have 3 entries");
  }
  t.channels = shape[0];
  t.bands = shape[1];
  t.frames = shape[2];
  t.db_floor = side.at("db_floor").get<double>();
  t.db_ceil = side.at("db_ceil").get<double>();

  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingFile, "cannot open '" + path + "'");
  t.data.resize(t.channels * t.bands * t.frames);
  for (std::size_t i = 0; i < t.data.size(); ++i) {
    float f;
    in.read(reinterpret_cast<char*>(&f), 4);
    if (!in) throw Error(ErrorCode::TruncatedFile, "'" + path + "' is truncated");
    t.data[i] = static_cast<double>(f);
  }
  return t;
}

}  // namespace specpipe
