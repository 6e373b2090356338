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

#include "speechlm/encoder.hpp"

#include <cmath>
#include <stdexcept>

#include "speechlm/ctc.hpp"

namespace speechlm {

PoolingMode pooling_mode_from_string(const std::string &s) {
  if (s == "uniform") {
    return PoolingMode::kUniform;
  }
  if (s == "ctc_aligned") {
    return PoolingMode::kCtcAligned;
  }
  throw std::invalid_argument("unknown pooling mode: " + s);
}

std::string to_string(PoolingMode mode) {
  return mode == PoolingMode::kUniform ? "uniform" : "ctc_aligned";
}

void EncoderConfig::validate() const {
  if (!(pool_kernel >= pool_stride && pool_stride >= 1)) {
    throw std::invalid_argument(
        "encoder config requires pool_kernel >= pool_stride >= 1, got kernel " +
        std::to_string(pool_kernel) + " stride " + std::to_string(pool_stride));
  }
  if (feature_dim < 1 || model_dim < 1) {
    throw std::invalid_argument("encoder dimensions must be >= 1");
  }
}

PoolPlan make_uniform_plan(int frame_count, int kernel, int stride) {
  if (frame_count < 1) {
    throw std::invalid_argument("cannot pool an empty frame sequence");
  }
  if (kernel < stride || stride < 1) {
    throw std::invalid_argument("pooling requires kernel >= stride >= 1");
  }
  PoolPlan plan;
  if (frame_count < kernel) {
    plan.push_back({0, frame_count});
    return plan;
  }
  const int n_out = (frame_count - kernel) / stride + 1;
  plan.reserve(static_cast<size_t>(n_out));
  for (int i = 0; i < n_out; ++i) {
    plan.push_back({i * stride, kernel});
  }
  return plan;
}

Mat apply_pool_plan(const Mat &frames, const PoolPlan &plan) {
  Mat out(static_cast<Eigen::Index>(plan.size()), frames.cols());
  for (size_t i = 0; i < plan.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) =
        frames.middleRows(plan[i].begin, plan[i].count).colwise().mean();
  }
  return out;
}

Mat distribute_pool_grad(const PoolPlan &plan, const Mat &d_pooled,
                         int frame_count) {
  Mat d_frames = Mat::Zero(frame_count, d_pooled.cols());
  for (size_t i = 0; i < plan.size(); ++i) {
    const auto &w = plan[i];
    const Mat share = d_pooled.row(static_cast<Eigen::Index>(i)) / w.count;
    for (int r = w.begin; r < w.begin + w.count; ++r) {
      d_frames.row(r) += share;
    }
  }
  return d_frames;
}

FrameSequence pool_uniform(const FrameSequence &frames, int kernel, int stride) {
  FrameSequence out;
  out.frames = apply_pool_plan(frames.frames, make_uniform_plan(frames.count(), kernel, stride));
  out.frame_rate = frames.frame_rate / stride;
  return out;
}

AudioTokenSequence project(const FrameSequence &pooled, const Mat &weights,
                           const Vec &bias) {
  if (pooled.dim() != weights.rows()) {
    throw std::invalid_argument(
        "projection dimension mismatch: pooled frames are " +
        std::to_string(pooled.dim()) + "-dim but weights expect " +
        std::to_string(weights.rows()) + "-dim input");
  }
  if (bias.size() != weights.cols()) {
    throw std::invalid_argument(
        "projection bias dimension mismatch: bias is " +
        std::to_string(bias.size()) + "-dim but weights produce " +
        std::to_string(weights.cols()) + "-dim output");
  }
  AudioTokenSequence out;
  out.tokens = (pooled.frames * weights).rowwise() + bias.transpose();
  out.token_rate = pooled.frame_rate;
  return out;
}

AudioEncoder::AudioEncoder(EncoderConfig cfg,
                           std::shared_ptr<FrameBackbone> backbone,
                           std::uint64_t seed,
                           std::shared_ptr<WordBoundaryProvider> boundaries)
    : cfg_(cfg), backbone_(std::move(backbone)), boundaries_(std::move(boundaries)) {
  cfg_.validate();
  if (backbone_ == nullptr) {
    throw std::invalid_argument("audio encoder requires a frame backbone");
  }
  if (backbone_->feature_dim() != cfg_.feature_dim) {
    throw std::invalid_argument(
        "backbone feature dim " + std::to_string(backbone_->feature_dim()) +
        " does not match encoder config feature_dim " +
        std::to_string(cfg_.feature_dim));
  }
  Rng rng(seed);
  const double init_std = 1.0 / std::sqrt(static_cast<double>(cfg_.feature_dim));
  proj_weights_ = rng.gaussian_matrix(cfg_.feature_dim, cfg_.model_dim, init_std);
  proj_bias_ = Mat::Zero(cfg_.model_dim, 1);
  proj_weights_grad_ = Mat::Zero(cfg_.feature_dim, cfg_.model_dim);
  proj_bias_grad_ = Mat::Zero(cfg_.model_dim, 1);
}

AudioEncoder::~AudioEncoder() = default;

PoolPlan AudioEncoder::plan_for(const WaveformInput &wave,
                                const FrameSequence &frames) const {
  if (cfg_.pooling_mode == PoolingMode::kUniform) {
    return make_uniform_plan(frames.count(), cfg_.pool_kernel, cfg_.pool_stride);
  }
  if (boundaries_ == nullptr) {
    throw std::logic_error(
        "ctc_aligned pooling requires a configured word-boundary provider");
  }
  WordBoundarySet set = boundaries_->boundaries(wave, frames.count());
  return make_ctc_plan(frames.count(), set, cfg_.pool_kernel, cfg_.pool_stride);
}

AudioTokenSequence AudioEncoder::encode(const WaveformInput &wave) const {
  return encode(wave, nullptr);
}

AudioTokenSequence AudioEncoder::encode(const WaveformInput &wave,
                                        Cache *cache) const {
  validate_waveform(wave);
  FrameSequence frames = backbone_->forward(wave);
  PoolPlan plan = plan_for(wave, frames);

  FrameSequence pooled;
  pooled.frames = apply_pool_plan(frames.frames, plan);
  pooled.frame_rate = frames.frame_rate / cfg_.pool_stride;

  AudioTokenSequence tokens = project(pooled, proj_weights_, Vec(proj_bias_.col(0)));
  if (cache != nullptr) {
    cache->wave = wave;
    cache->frames = std::move(frames);
    cache->plan = std::move(plan);
    cache->pooled = std::move(pooled.frames);
  }
  return tokens;
}

void AudioEncoder::backward(const Cache &cache, const Mat &d_tokens) {
  proj_weights_grad_ += cache.pooled.transpose() * d_tokens;
  if (cfg_.projection_bias) {
    proj_bias_grad_ += d_tokens.colwise().sum().transpose();
  }
  if (backbone_->trainable()) {
    const Mat d_pooled = d_tokens * proj_weights_.transpose();
    const Mat d_frames =
        distribute_pool_grad(cache.plan, d_pooled, cache.frames.count());
    backbone_->accumulate_grads(cache.wave, d_frames);
  }
}

std::vector<Mat *> AudioEncoder::params() {
  std::vector<Mat *> out = backbone_->params();
  out.push_back(&proj_weights_);
  if (cfg_.projection_bias) {
    out.push_back(&proj_bias_);
  }
  return out;
}

std::vector<Mat *> AudioEncoder::grads() {
  std::vector<Mat *> out = backbone_->grads();
  out.push_back(&proj_weights_grad_);
  if (cfg_.projection_bias) {
    out.push_back(&proj_bias_grad_);
  }
  return out;
}

void AudioEncoder::zero_grads() {
  for (Mat *g : grads()) {
    g->setZero();
  }
}

std::uint64_t AudioEncoder::parameter_checksum() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto *self = const_cast<AudioEncoder *>(this);
  for (const Mat *p : self->params()) {
    h = checksum_update(h, *p);
  }
  return h;
}

}  // namespace speechlm
