#include "specpipe/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "specpipe/error.hpp"

namespace specpipe {

namespace {

std::uint32_t read_u32(const std::vector<std::uint8_t>& b, std::size_t off) {
  return static_cast<std::uint32_t>(b[off]) | (static_cast<std::uint32_t>(b[off + 1]) << 8) |
         (static_cast<std::uint32_t>(b[off + 2]) << 16) |
         (static_cast<std::uint32_t>(b[off + 3]) << 24);
}

std::uint16_t read_u16(const std::vector<std::uint8_t>& b, std::size_t off) {
  return static_cast<std::uint16_t>(b[off] | (b[off + 1] << 8));
}

void append_u32(std::vector<std::uint8_t>& b, std::uint32_t v) {
  b.push_back(v & 0xff);
  b.push_back((v >> 8) & 0xff);
  b.push_back((v >> 16) & 0xff);
  b.push_back((v >> 24) & 0xff);
}

void append_u16(std::vector<std::uint8_t>& b, std::uint16_t v) {
  b.push_back(v & 0xff);
  b.push_back((v >> 8) & 0xff);
}

}  // namespace

AudioClip decode_wav(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 12) throw Error(ErrorCode::TruncatedFile, "shorter than a RIFF header");
  if (std::memcmp(bytes.data(), "RIFF", 4) != 0 || std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw Error(ErrorCode::UnsupportedEncoding, "not a RIFF/WAVE stream");
  }

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t sample_rate = 0;
  std::size_t data_off = 0, data_len = 0;
  bool have_fmt = false, have_data = false;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    char id[5] = {0};
    std::memcpy(id, bytes.data() + pos, 4);
    std::uint32_t chunk_len = read_u32(bytes, pos + 4);
    std::size_t body = pos + 8;
    if (body + chunk_len > bytes.size()) {
      throw Error(ErrorCode::TruncatedFile, std::string("chunk '") + id + "' overruns file");
    }
    if (std::memcmp(id, "fmt ", 4) == 0) {
      if (chunk_len < 16) throw Error(ErrorCode::TruncatedFile, "fmt chunk too small");
      format = read_u16(bytes, body);
      channels = read_u16(bytes, body + 2);
      sample_rate = read_u32(bytes, body + 4);
      bits = read_u16(bytes, body + 14);
      have_fmt = true;
    } else if (std::memcmp(id, "data", 4) == 0) {
      data_off = body;
      data_len = chunk_len;
      have_data = true;
    }
    pos = body + chunk_len + (chunk_len & 1);  // chunks are word-aligned
  }

  if (!have_fmt || !have_data) throw Error(ErrorCode::TruncatedFile, "missing fmt or data chunk");
  if (channels != 1 && channels != 2) {
    throw Error(ErrorCode::UnsupportedEncoding, std::to_string(channels) + " channels");
  }
  if (sample_rate == 0) throw Error(ErrorCode::UnsupportedEncoding, "zero sample rate");

  const bool pcm16 = format == 1 && bits == 16;
  const bool float32 = format == 3 && bits == 32;
  if (!pcm16 && !float32) {
    throw Error(ErrorCode::UnsupportedEncoding,
                "format " + std::to_string(format) + " / " + std::to_string(bits) + " bits");
  }

  const std::size_t bytes_per_sample = pcm16 ? 2 : 4;
  const std::size_t frame_size = bytes_per_sample * channels;
  const std::size_t n_frames = data_len / frame_size;
  if (n_frames == 0) throw Error(ErrorCode::ZeroSamples, "data chunk holds no samples");

  AudioClip clip;
  clip.sample_rate = static_cast<int>(sample_rate);
  clip.samples.resize(n_frames);
  for (std::size_t i = 0; i < n_frames; ++i) {
    double acc = 0.0;
    for (std::uint16_t ch = 0; ch < channels; ++ch) {
      std::size_t off = data_off + i * frame_size + ch * bytes_per_sample;
      if (pcm16) {
        std::int16_t raw = static_cast<std::int16_t>(read_u16(bytes, off));
        acc += raw / 32768.0;
      } else {
        float f;
        std::uint32_t u = read_u32(bytes, off);
        std::memcpy(&f, &u, sizeof f);
        acc += std::clamp(static_cast<double>(f), -1.0, 1.0);
      }
    }
    clip.samples[i] = acc / channels;
  }
  return clip;
}

AudioClip decode_wav_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  AudioClip clip = decode_wav(bytes);
  clip.source_id = path.stem().string();
  return clip;
}

std::vector<std::uint8_t> encode_wav_pcm16(const AudioClip& clip) {
  const std::uint32_t n = static_cast<std::uint32_t>(clip.samples.size());
  const std::uint32_t data_len = n * 2;
  std::vector<std::uint8_t> out;
  out.reserve(44 + data_len);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  append_u32(out, 36 + data_len);
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  append_u32(out, 16);
  append_u16(out, 1);  // PCM
  append_u16(out, 1);  // mono
  append_u32(out, static_cast<std::uint32_t>(clip.sample_rate));
  append_u32(out, static_cast<std::uint32_t>(clip.sample_rate) * 2);
  append_u16(out, 2);
  append_u16(out, 16);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  append_u32(out, data_len);
  for (double s : clip.samples) {
    double scaled = std::round(std::clamp(s, -1.0, 1.0) * 32768.0);
    auto q = static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0));
    append_u16(out, static_cast<std::uint16_t>(q));
  }
  return out;
}

void write_wav_file(const AudioClip& clip, const std::filesystem::path& path) {
  auto bytes = encode_wav_pcm16(clip);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

}  // namespace specpipe
