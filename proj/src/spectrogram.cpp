#include "specpipe/spectrogram.hpp"

#include "specpipe/error.hpp"

namespace specpipe {

const char* to_string(SpectrogramMode mode) {
  switch (mode) {
    case SpectrogramMode::MelSingle: return "mel_rgb";
    case SpectrogramMode::MelMono3: return "mel_mono3";
    case SpectrogramMode::Superlet: return "superlet";
  }
  return "?";
}

SpectrogramMode parse_spectrogram_mode(const std::string& text) {
  if (text == "mel_rgb") return SpectrogramMode::MelSingle;
  if (text == "mel_mono3") return SpectrogramMode::MelMono3;
  if (text == "superlet") return SpectrogramMode::Superlet;
  throw Error(ErrorCode::ConfigError,
              "mode '" + text + "' (expected mel_rgb|mel_mono3|superlet)");
}

}  // namespace specpipe
