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

#include "speechlm/backbone.hpp"
#include "speechlm/util.hpp"
#include "speechlm/wav.hpp"

namespace speechlm {

class WordBoundaryProvider;

// Projected encoder output; rows are audio tokens in LM embedding space.
struct AudioTokenSequence {
  Mat tokens;
  double token_rate = 0.0;

  int count() const { return static_cast<int>(tokens.rows()); }
  int dim() const { return static_cast<int>(tokens.cols()); }
};

enum class PoolingMode { kUniform, kCtcAligned };

PoolingMode pooling_mode_from_string(const std::string &s);
std::string to_string(PoolingMode mode);

struct EncoderConfig {
  int pool_kernel = 8;
  int pool_stride = 4;
  PoolingMode pooling_mode = PoolingMode::kUniform;
  int feature_dim = 1024;
  int model_dim = 3072;
  std::string backbone_id = "toy_linear";
  bool projection_bias = true;

  void validate() const;
};

// One averaging window over the frame axis: mean of frames
// [begin, begin + count). Forward pooling and its backward both run off the
// same plan so the two cannot disagree.
struct PoolWindow {
  int begin = 0;
  int count = 0;
};
using PoolPlan = std::vector<PoolWindow>;

// Strict windowing: trailing frames that do not fill a window are dropped.
// A sequence shorter than the kernel yields a single all-frame window.
PoolPlan make_uniform_plan(int frame_count, int kernel, int stride);

Mat apply_pool_plan(const Mat &frames, const PoolPlan &plan);
Mat distribute_pool_grad(const PoolPlan &plan, const Mat &d_pooled, int frame_count);

FrameSequence pool_uniform(const FrameSequence &frames, int kernel, int stride);

// token_i = pooled_i * weights + bias
AudioTokenSequence project(const FrameSequence &pooled, const Mat &weights,
                           const Vec &bias);

// Waveform -> frames -> pooled frames -> LM-dimension audio tokens.
// Trainable state is the projection plus whatever the backbone exposes.
class AudioEncoder {
 public:
  AudioEncoder(EncoderConfig cfg, std::shared_ptr<FrameBackbone> backbone,
               std::uint64_t seed,
               std::shared_ptr<WordBoundaryProvider> boundaries = nullptr);
  ~AudioEncoder();

  struct Cache {
    WaveformInput wave;
    FrameSequence frames;
    PoolPlan plan;
    Mat pooled;
  };

  AudioTokenSequence encode(const WaveformInput &wave) const;
  AudioTokenSequence encode(const WaveformInput &wave, Cache *cache) const;

  // Accumulates parameter gradients for d(loss)/d(tokens).
  void backward(const Cache &cache, const Mat &d_tokens);

  std::vector<Mat *> params();
  std::vector<Mat *> grads();
  void zero_grads();

  const EncoderConfig &config() const { return cfg_; }
  FrameBackbone &backbone() { return *backbone_; }
  const FrameBackbone &backbone() const { return *backbone_; }
  Mat &projection_weights() { return proj_weights_; }
  Mat &projection_bias() { return proj_bias_; }
  std::uint64_t parameter_checksum() const;

 private:
  PoolPlan plan_for(const WaveformInput &wave, const FrameSequence &frames) const;

  EncoderConfig cfg_;
  std::shared_ptr<FrameBackbone> backbone_;
  std::shared_ptr<WordBoundaryProvider> boundaries_;
  Mat proj_weights_;  // feature_dim x model_dim
  Mat proj_bias_;     // model_dim x 1
  Mat proj_weights_grad_;
  Mat proj_bias_grad_;
};

}  // namespace speechlm
