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

#include "speechlm/ctc.hpp"

#include <stdexcept>

namespace speechlm {

void WordBoundarySet::validate(int frame_count) const {
  int prev = -1;
  for (int idx : start_indices) {
    if (idx < 0 || idx >= frame_count) {
      throw std::invalid_argument("word boundary index " + std::to_string(idx) +
                                  " outside frame range [0, " +
                                  std::to_string(frame_count) + ")");
    }
    if (idx <= prev) {
      throw std::invalid_argument("word boundary indices must be strictly increasing");
    }
    prev = idx;
  }
}

std::vector<int> ctc_greedy_collapse(const CtcLabelPath &path) {
  std::vector<int> out;
  int prev = path.blank_id;
  for (int label : path.labels) {
    if (label != path.blank_id && label != prev) {
      out.push_back(label);
    }
    prev = label;
  }
  return out;
}

WordBoundarySet word_start_indices(const CtcLabelPath &path, int delimiter_label) {
  WordBoundarySet set;
  int prev = path.blank_id;
  // A word starts at the onset frame of its first collapsed emission. With a
  // delimiter label, emissions between delimiters form one word; without one,
  // every emission is a word of its own.
  bool in_word = false;
  for (int frame = 0; frame < path.count(); ++frame) {
    const int label = path.labels[frame];
    const bool emits = label != path.blank_id && label != prev;
    if (emits) {
      if (label == delimiter_label) {
        in_word = false;
      } else if (!in_word) {
        set.start_indices.push_back(frame);
        in_word = delimiter_label != kNoDelimiter;
      }
    }
    prev = label;
  }
  return set;
}

PoolPlan make_ctc_plan(int frame_count, const WordBoundarySet &boundaries,
                       int kernel, int stride) {
  if (boundaries.empty()) {
    SL_WARN("empty word boundary set; falling back to uniform pooling over %d frames",
            frame_count);
    return make_uniform_plan(frame_count, kernel, stride);
  }
  boundaries.validate(frame_count);
  PoolPlan plan;
  const auto &starts = boundaries.start_indices;
  for (size_t i = 0; i < starts.size(); ++i) {
    const int begin = starts[i];
    const int end = (i + 1 < starts.size()) ? starts[i + 1] : frame_count;
    PoolPlan segment = make_uniform_plan(end - begin, kernel, stride);
    for (auto w : segment) {
      w.begin += begin;
      plan.push_back(w);
    }
  }
  return plan;
}

FrameSequence pool_ctc_aligned(const FrameSequence &frames,
                               const WordBoundarySet &boundaries, int kernel,
                               int stride) {
  FrameSequence out;
  out.frames = apply_pool_plan(frames.frames,
                               make_ctc_plan(frames.count(), boundaries, kernel, stride));
  out.frame_rate = frames.frame_rate / stride;
  return out;
}

FixedPeriodBoundaries::FixedPeriodBoundaries(int period_frames)
    : period_(period_frames) {
  if (period_frames < 1) {
    throw std::invalid_argument("boundary period must be >= 1 frame");
  }
}

std::string FixedPeriodBoundaries::id() const {
  return "fixed_period(" + std::to_string(period_) + ")";
}

WordBoundarySet FixedPeriodBoundaries::boundaries(const WaveformInput &,
                                                  int frame_count) const {
  WordBoundarySet set;
  for (int i = 0; i < frame_count; i += period_) {
    set.start_indices.push_back(i);
  }
  return set;
}

}  // namespace speechlm
