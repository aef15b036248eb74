#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "specpipe/audio.hpp"

namespace specpipe {

// RIFF/WAVE decode: PCM 16-bit or IEEE float 32-bit, 1 or 2 channels.
// 16-bit samples are scaled by 1/32768; stereo is averaged to mono.
AudioClip decode_wav(const std::vector<std::uint8_t>& bytes);
AudioClip decode_wav_file(const std::filesystem::path& path);

// PCM 16-bit mono encode; samples are scaled by 32768 and clamped to the
// int16 range, so a decode round-trip stays within 1/32768 per sample.
std::vector<std::uint8_t> encode_wav_pcm16(const AudioClip& clip);
void write_wav_file(const AudioClip& clip, const std::filesystem::path& path);

}  // namespace specpipe
