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

#include "speechlm/backbone.hpp"

#include <stdexcept>

namespace speechlm {

void FrameBackbone::accumulate_grads(const WaveformInput &, const Mat &) {
  throw std::logic_error("backbone \"" + id() + "\" is not trainable");
}

LinearBackbone::LinearBackbone(int window_samples, int feature_dim,
                               std::uint64_t seed, double init_std, bool with_bias)
    : window_samples_(window_samples) {
  if (window_samples <= 0 || feature_dim <= 0) {
    throw std::invalid_argument("linear backbone dimensions must be positive");
  }
  Rng rng(seed);
  weight_ = rng.gaussian_matrix(feature_dim, window_samples, init_std);
  bias_ = Mat::Zero(feature_dim, 1);
  if (!with_bias) {
    bias_.setZero();
  }
  weight_grad_ = Mat::Zero(feature_dim, window_samples);
  bias_grad_ = Mat::Zero(feature_dim, 1);
}

std::string LinearBackbone::id() const {
  return "toy_linear(window=" + std::to_string(window_samples_) +
         ",dim=" + std::to_string(feature_dim()) + ")";
}

FrameSequence LinearBackbone::forward(const WaveformInput &wave) const {
  validate_waveform(wave);
  const int n_frames = static_cast<int>(wave.samples.size()) / window_samples_;
  if (n_frames < 1) {
    throw std::invalid_argument(
        "audio too short for one frame: " + std::to_string(wave.samples.size()) +
        " samples with window " + std::to_string(window_samples_));
  }
  FrameSequence out;
  out.frame_rate = frame_rate();
  out.frames.resize(n_frames, feature_dim());
  Vec window(window_samples_);
  for (int f = 0; f < n_frames; ++f) {
    for (int i = 0; i < window_samples_; ++i) {
      window(i) = wave.samples[static_cast<size_t>(f) * window_samples_ + i];
    }
    out.frames.row(f) = (weight_ * window + bias_).transpose();
  }
  return out;
}

void LinearBackbone::accumulate_grads(const WaveformInput &wave,
                                      const Mat &d_frames) {
  const int n_frames = static_cast<int>(d_frames.rows());
  Vec window(window_samples_);
  for (int f = 0; f < n_frames; ++f) {
    for (int i = 0; i < window_samples_; ++i) {
      window(i) = wave.samples[static_cast<size_t>(f) * window_samples_ + i];
    }
    weight_grad_ += d_frames.row(f).transpose() * window.transpose();
    bias_grad_ += d_frames.row(f).transpose();
  }
}

}  // namespace speechlm
