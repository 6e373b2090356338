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

#include "speechlm/backbone.hpp"
#include "speechlm/encoder.hpp"
#include "speechlm/wav.hpp"

namespace speechlm {

// Frame-synchronous label path from a CTC acoustic model. One label per
// frame; `blank_id` marks no emission.
struct CtcLabelPath {
  std::vector<int> labels;
  int blank_id = 0;
  double frame_rate = 0.0;

  int count() const { return static_cast<int>(labels.size()); }
};

// First-frame indices of consecutive words, strictly increasing.
struct WordBoundarySet {
  std::vector<int> start_indices;

  bool empty() const { return start_indices.empty(); }
  int count() const { return static_cast<int>(start_indices.size()); }
  void validate(int frame_count) const;
};

// Standard CTC collapse: merge adjacent repeats, then drop blanks.
std::vector<int> ctc_greedy_collapse(const CtcLabelPath &path);

// Pass kNoDelimiter when labels are word-level (every collapsed emission is
// its own word); otherwise `delimiter_label` separates words, as with a
// character-level space label.
constexpr int kNoDelimiter = -1;

WordBoundarySet word_start_indices(const CtcLabelPath &path, int delimiter_label);

// Each word covers [start_i, start_{i+1}) plus a final [start_last, N)
// segment; uniform pooling is applied inside every segment and the outputs
// are concatenated. An empty boundary set falls back to plain uniform
// pooling over the whole sequence.
PoolPlan make_ctc_plan(int frame_count, const WordBoundarySet &boundaries,
                       int kernel, int stride);

FrameSequence pool_ctc_aligned(const FrameSequence &frames,
                               const WordBoundarySet &boundaries, int kernel,
                               int stride);

// Supplies word boundaries for CTC-aligned pooling inside the encoder.
class WordBoundaryProvider {
 public:
  virtual ~WordBoundaryProvider() = default;
  virtual std::string id() const = 0;
  virtual WordBoundarySet boundaries(const WaveformInput &wave,
                                     int frame_count) const = 0;
};

// Word every `period` frames; handy stand-in when no acoustic model is wired.
class FixedPeriodBoundaries : public WordBoundaryProvider {
 public:
  explicit FixedPeriodBoundaries(int period_frames);
  std::string id() const override;
  WordBoundarySet boundaries(const WaveformInput &wave,
                             int frame_count) const override;

 private:
  int period_;
};

}  // namespace speechlm
