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

#include <memory>
#include <string>
#include <vector>

#include "speechlm/util.hpp"
#include "speechlm/wav.hpp"

namespace speechlm {

// Frame-level features produced by a backbone. Rows are frames.
struct FrameSequence {
  Mat frames;
  double frame_rate = 0.0;

  int count() const { return static_cast<int>(frames.rows()); }
  int dim() const { return static_cast<int>(frames.cols()); }
};

// Adapter contract for frame backbones. A full-scale deployment would wrap a
// pretrained speech encoder here; desk runs use the linear toy backbone.
class FrameBackbone {
 public:
  virtual ~FrameBackbone() = default;

  virtual std::string id() const = 0;
  virtual double frame_rate() const = 0;
  virtual int feature_dim() const = 0;
  virtual FrameSequence forward(const WaveformInput &wave) const = 0;

  // Trainable backbones additionally expose parameters and an input-side
  // backward pass; non-trainable adapters keep the defaults.
  virtual bool trainable() const { return false; }
  virtual std::vector<Mat *> params() { return {}; }
  virtual std::vector<Mat *> grads() { return {}; }
  virtual void accumulate_grads(const WaveformInput &wave, const Mat &d_frames);
};

// Maps non-overlapping windows of `window_samples` samples through a single
// affine layer. 320-sample windows at 16 kHz give the 50 Hz frame rate of the
// reference backbone.
class LinearBackbone : public FrameBackbone {
 public:
  LinearBackbone(int window_samples, int feature_dim, std::uint64_t seed,
                 double init_std, bool with_bias = true);

  std::string id() const override;
  double frame_rate() const override {
    return static_cast<double>(kRequiredSampleRate) / window_samples_;
  }
  int feature_dim() const override { return static_cast<int>(weight_.rows()); }
  FrameSequence forward(const WaveformInput &wave) const override;

  bool trainable() const override { return true; }
  std::vector<Mat *> params() override { return {&weight_, &bias_}; }
  std::vector<Mat *> grads() override { return {&weight_grad_, &bias_grad_}; }
  void accumulate_grads(const WaveformInput &wave, const Mat &d_frames) override;

  int window_samples() const { return window_samples_; }
  Mat &weight() { return weight_; }
  Mat &bias() { return bias_; }

 private:
  int window_samples_;
  Mat weight_;      // feature_dim x window_samples
  Mat bias_;        // feature_dim x 1
  Mat weight_grad_;
  Mat bias_grad_;
};

}  // namespace speechlm
