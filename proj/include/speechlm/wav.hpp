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

#pragma once

#include <string>
#include <vector>

namespace speechlm {

constexpr int kRequiredSampleRate = 16000;

// Mono waveform, amplitudes in [-1, 1].
struct WaveformInput {
  std::vector<double> samples;
  int sample_rate = kRequiredSampleRate;

  double duration_seconds() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

// Throws std::invalid_argument if the waveform violates the input contract
// (empty, wrong rate, out-of-range amplitude).
void validate_waveform(const WaveformInput &wave);

// 16-bit PCM mono WAV only.
WaveformInput read_wav(const std::string &path);
void write_wav(const std::string &path, const WaveformInput &wave);

}  // namespace speechlm
