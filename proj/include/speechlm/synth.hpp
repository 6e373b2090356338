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

#include <map>
#include <string>
#include <vector>

#include "speechlm/ctc.hpp"
#include "speechlm/tokenizer.hpp"
#include "speechlm/wav.hpp"

namespace speechlm {

// Deterministic waveform synthesizer for desk-scale runs. Every token id has
// a fixed block signature built from a few seeded sinusoids; an utterance is
// one leading silence block followed by one signature block per token.
class SynthModel {
 public:
  SynthModel(int vocab_size, std::uint64_t seed, int block_samples = 1280,
             int silence_blocks = 1);

  const std::vector<double> &token_signature(int token_id) const;
  WaveformInput synthesize(const std::vector<int> &token_ids) const;

  int vocab_size() const { return vocab_size_; }
  int block_samples() const { return block_samples_; }
  int silence_blocks() const { return silence_blocks_; }
  std::uint64_t seed() const { return seed_; }

 private:
  int vocab_size_;
  int block_samples_;
  int silence_blocks_;
  std::uint64_t seed_;
  std::vector<std::vector<double>> signatures_;
};

// Speech recognizer contract used by the cascade baseline.
class AsrAdapter {
 public:
  virtual ~AsrAdapter() = default;
  virtual std::string id() const = 0;
  virtual std::string transcribe(const WaveformInput &wave) const = 0;
};

// Correlates each block of the waveform against the synthesizer's token
// signatures. Blocks whose best normalized correlation falls below the
// threshold become blanks, so silence and unknown content emit nothing.
class MatchedFilterAsr : public AsrAdapter {
 public:
  MatchedFilterAsr(const SynthModel &synth, const WordTokenizer &tokenizer,
                   double threshold = 0.5, int blank_id = 0,
                   int frame_samples = 320);

  std::string id() const override;
  std::string transcribe(const WaveformInput &wave) const override;

  // Frame-level label path over the same 320-sample grid as the toy frame
  // backbones, suitable for word-boundary extraction.
  CtcLabelPath label_path(const WaveformInput &wave) const;
  std::vector<int> block_labels(const WaveformInput &wave) const;

 private:
  const SynthModel &synth_;
  const WordTokenizer &tokenizer_;
  double threshold_;
  int blank_id_;
  int frame_samples_;
};

// Returns stored ground-truth transcripts, keyed by a checksum of the
// waveform samples. Used to show the cascade baseline collapsing onto the
// text topline when recognition is perfect.
class OracleAsr : public AsrAdapter {
 public:
  std::string id() const override { return "oracle"; }
  void add(const WaveformInput &wave, const std::string &transcript);
  std::string transcribe(const WaveformInput &wave) const override;

  static std::uint64_t fingerprint(const WaveformInput &wave);

 private:
  std::map<std::uint64_t, std::string> transcripts_;
};

// Word boundaries from the matched-filter label path: one word per emission
// run, boundary at the run's first frame.
class CtcWordBoundaryProvider : public WordBoundaryProvider {
 public:
  explicit CtcWordBoundaryProvider(const MatchedFilterAsr &asr) : asr_(asr) {}

  std::string id() const override { return "matched_filter_ctc"; }
  WordBoundarySet boundaries(const WaveformInput &wave,
                             int frame_count) const override;

 private:
  const MatchedFilterAsr &asr_;
};

}  // namespace speechlm
