// Copyright 2026 The SpeechLM Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "speechlm/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace speechlm {

namespace {

struct ChunkHeader {
  char id[4];
  std::uint32_t size;
};

std::uint16_t read_u16(const unsigned char *p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t read_u32(const unsigned char *p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

void put_u16(std::string &out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put_u32(std::string &out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

}  // namespace

void validate_waveform(const WaveformInput &wave) {
  if (wave.samples.empty()) {
    throw std::invalid_argument("empty audio: waveform has no samples");
  }
  if (wave.sample_rate != kRequiredSampleRate) {
    throw std::invalid_argument(
        "unsupported sample rate " + std::to_string(wave.sample_rate) +
        " Hz: required rate is " + std::to_string(kRequiredSampleRate) + " Hz");
  }
  for (double s : wave.samples) {
    if (!(s >= -1.0 && s <= 1.0)) {
      throw std::invalid_argument("waveform amplitude out of [-1, 1] range");
    }
  }
}

WaveformInput read_wav(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open WAV file: " + path);
  }
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() < 44 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw std::runtime_error("not a RIFF/WAVE file: " + path);
  }

  std::uint16_t format = 0;
  std::uint16_t channels = 0;
  std::uint32_t sample_rate = 0;
  std::uint16_t bits = 0;
  const unsigned char *data = nullptr;
  std::uint32_t data_size = 0;

  size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const char *id = reinterpret_cast<const char *>(bytes.data() + pos);
    const std::uint32_t size = read_u32(bytes.data() + pos + 4);
    pos += 8;
    if (pos + size > bytes.size()) {
      throw std::runtime_error("truncated WAV chunk in " + path);
    }
    if (std::memcmp(id, "fmt ", 4) == 0 && size >= 16) {
      format = read_u16(bytes.data() + pos);
      channels = read_u16(bytes.data() + pos + 2);
      sample_rate = read_u32(bytes.data() + pos + 4);
      bits = read_u16(bytes.data() + pos + 14);
    } else if (std::memcmp(id, "data", 4) == 0) {
      data = bytes.data() + pos;
      data_size = size;
    }
    pos += size + (size & 1);  // chunks are word aligned
  }

  if (data == nullptr) {
    throw std::runtime_error("WAV file has no data chunk: " + path);
  }
  if (format != 1 || bits != 16) {
    throw std::runtime_error("unsupported WAV encoding in " + path +
                             " (need 16-bit PCM)");
  }
  if (channels != 1) {
    throw std::runtime_error("unsupported channel count " +
                             std::to_string(channels) + " in " + path +
                             " (need mono)");
  }

  WaveformInput wave;
  wave.sample_rate = static_cast<int>(sample_rate);
  const size_t n = data_size / 2;
  wave.samples.resize(n);
  for (size_t i = 0; i < n; ++i) {
    std::int16_t s;
    std::memcpy(&s, data + 2 * i, 2);
    wave.samples[i] = static_cast<double>(s) / 32768.0;
  }
  return wave;
}

void write_wav(const std::string &path, const WaveformInput &wave) {
  validate_waveform(wave);
  const std::uint32_t n = static_cast<std::uint32_t>(wave.samples.size());
  const std::uint32_t data_size = n * 2;

  std::string out;
  out.reserve(44 + data_size);
  out.append("RIFF");
  put_u32(out, 36 + data_size);
  out.append("WAVE");
  out.append("fmt ");
  put_u32(out, 16);
  put_u16(out, 1);  // PCM
  put_u16(out, 1);  // mono
  put_u32(out, static_cast<std::uint32_t>(wave.sample_rate));
  put_u32(out, static_cast<std::uint32_t>(wave.sample_rate) * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  out.append("data");
  put_u32(out, data_size);
  for (std::uint32_t i = 0; i < n; ++i) {
    double v = std::clamp(wave.samples[i], -1.0, 1.0);
    auto s = static_cast<std::int16_t>(std::lrint(v * 32767.0));
    put_u16(out, static_cast<std::uint16_t>(s));
  }

  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) {
    std::filesystem::create_directories(parent);
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) {
    throw std::runtime_error("cannot open WAV file for writing: " + path);
  }
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) {
    throw std::runtime_error("WAV write failed: " + path);
  }
}

}  // namespace speechlm
