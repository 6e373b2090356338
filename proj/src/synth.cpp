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

#include "speechlm/synth.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "speechlm/util.hpp"

namespace speechlm {

SynthModel::SynthModel(int vocab_size, std::uint64_t seed, int block_samples,
                       int silence_blocks)
    : vocab_size_(vocab_size),
      block_samples_(block_samples),
      silence_blocks_(silence_blocks),
      seed_(seed) {
  if (vocab_size < 1) throw std::invalid_argument("vocabulary must be non-empty");
  if (block_samples < 1) throw std::invalid_argument("block length must be >= 1");
  if (silence_blocks < 0) throw std::invalid_argument("negative silence length");
  signatures_.resize(static_cast<size_t>(vocab_size));
  for (int v = 0; v < vocab_size; ++v) {
    Rng rng(seed ^ (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(v + 1)));
    double freq[3], phase[3];
    for (int k = 0; k < 3; ++k) {
      freq[k] = 200.0 + 3600.0 * rng.uniform();
      phase[k] = 2.0 * std::numbers::pi * rng.uniform();
    }
    auto &sig = signatures_[static_cast<size_t>(v)];
    sig.resize(static_cast<size_t>(block_samples));
    for (int n = 0; n < block_samples; ++n) {
      const double t = static_cast<double>(n) / kRequiredSampleRate;
      sig[static_cast<size_t>(n)] =
          0.35 * std::sin(2.0 * std::numbers::pi * freq[0] * t + phase[0]) +
          0.35 * std::sin(2.0 * std::numbers::pi * freq[1] * t + phase[1]) +
          0.20 * std::sin(2.0 * std::numbers::pi * freq[2] * t + phase[2]);
    }
  }
}

const std::vector<double> &SynthModel::token_signature(int token_id) const {
  if (token_id < 0 || token_id >= vocab_size_) {
    throw std::invalid_argument("token id " + std::to_string(token_id) +
                                " outside vocabulary of size " +
                                std::to_string(vocab_size_));
  }
  return signatures_[static_cast<size_t>(token_id)];
}

WaveformInput SynthModel::synthesize(const std::vector<int> &token_ids) const {
  if (token_ids.empty()) {
    throw std::invalid_argument("cannot synthesize an empty token sequence");
  }
  WaveformInput wave;
  wave.sample_rate = kRequiredSampleRate;
  wave.samples.assign(
      static_cast<size_t>(silence_blocks_) * static_cast<size_t>(block_samples_),
      0.0);
  for (int id : token_ids) {
    const auto &sig = token_signature(id);
    wave.samples.insert(wave.samples.end(), sig.begin(), sig.end());
  }
  validate_waveform(wave);
  return wave;
}

MatchedFilterAsr::MatchedFilterAsr(const SynthModel &synth,
                                   const WordTokenizer &tokenizer,
                                   double threshold, int blank_id,
                                   int frame_samples)
    : synth_(synth),
      tokenizer_(tokenizer),
      threshold_(threshold),
      blank_id_(blank_id),
      frame_samples_(frame_samples) {
  if (threshold <= 0.0 || threshold >= 1.0) {
    throw std::invalid_argument("correlation threshold must lie in (0, 1)");
  }
  if (frame_samples < 1 || synth.block_samples() % frame_samples != 0) {
    throw std::invalid_argument("frame length must divide the block length");
  }
}

std::string MatchedFilterAsr::id() const {
  return "matched_filter(threshold=" + std::to_string(threshold_) + ")";
}

std::vector<int> MatchedFilterAsr::block_labels(const WaveformInput &wave) const {
  validate_waveform(wave);
  const int block = synth_.block_samples();
  const int n_blocks =
      static_cast<int>(wave.samples.size() + block - 1) / block;
  std::vector<int> labels(static_cast<size_t>(n_blocks), blank_id_);
  for (int b = 0; b < n_blocks; ++b) {
    const size_t begin = static_cast<size_t>(b) * static_cast<size_t>(block);
    const size_t len = std::min(static_cast<size_t>(block),
                                wave.samples.size() - begin);
    double norm_x = 0.0;
    for (size_t n = 0; n < len; ++n) {
      norm_x += wave.samples[begin + n] * wave.samples[begin + n];
    }
    if (norm_x <= 0.0) continue;
    double best_corr = 0.0;
    int best_id = blank_id_;
    for (int v = 0; v < synth_.vocab_size(); ++v) {
      const auto &sig = synth_.token_signature(v);
      double dot = 0.0;
      double norm_s = 0.0;
      for (size_t n = 0; n < len; ++n) {
        dot += wave.samples[begin + n] * sig[n];
        norm_s += sig[n] * sig[n];
      }
      if (norm_s <= 0.0) continue;
      const double corr = dot / std::sqrt(norm_x * norm_s);
      if (corr > best_corr) {
        best_corr = corr;
        best_id = v;
      }
    }
    if (best_corr >= threshold_) labels[static_cast<size_t>(b)] = best_id;
  }
  return labels;
}

CtcLabelPath MatchedFilterAsr::label_path(const WaveformInput &wave) const {
  const std::vector<int> blocks = block_labels(wave);
  const int frames_per_block = synth_.block_samples() / frame_samples_;
  const int frame_count =
      static_cast<int>(wave.samples.size()) / frame_samples_;
  CtcLabelPath path;
  path.blank_id = blank_id_;
  path.frame_rate = static_cast<double>(kRequiredSampleRate) / frame_samples_;
  path.labels.reserve(static_cast<size_t>(frame_count));
  for (int f = 0; f < frame_count; ++f) {
    const int b = f / frames_per_block;
    path.labels.push_back(blocks[static_cast<size_t>(b)]);
  }
  return path;
}

std::string MatchedFilterAsr::transcribe(const WaveformInput &wave) const {
  CtcLabelPath path;
  path.blank_id = blank_id_;
  path.frame_rate = 0.0;
  path.labels = block_labels(wave);
  const std::vector<int> ids = ctc_greedy_collapse(path);
  std::vector<std::string> words;
  words.reserve(ids.size());
  for (int id : ids) words.push_back(tokenizer_.token(id));
  std::string out;
  for (size_t i = 0; i < words.size(); ++i) {
    if (i > 0) out += ' ';
    out += words[i];
  }
  return out;
}

std::uint64_t OracleAsr::fingerprint(const WaveformInput &wave) {
  return fnv1a(wave.samples.data(),
               wave.samples.size() * sizeof(double));
}

void OracleAsr::add(const WaveformInput &wave, const std::string &transcript) {
  transcripts_[fingerprint(wave)] = transcript;
}

std::string OracleAsr::transcribe(const WaveformInput &wave) const {
  auto it = transcripts_.find(fingerprint(wave));
  if (it == transcripts_.end()) {
    throw std::invalid_argument("oracle recognizer has no transcript for this waveform");
  }
  return it->second;
}

WordBoundarySet CtcWordBoundaryProvider::boundaries(const WaveformInput &wave,
                                                    int frame_count) const {
  CtcLabelPath path = asr_.label_path(wave);
  if (path.count() != frame_count) {
    throw std::logic_error("label path spans " + std::to_string(path.count()) +
                           " frames but the encoder produced " +
                           std::to_string(frame_count));
  }
  return word_start_indices(path, kNoDelimiter);
}

}  // namespace speechlm
