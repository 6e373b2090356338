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
#include <memory>
#include <string>
#include <vector>

#include "speechlm/lm.hpp"
#include "speechlm/util.hpp"

namespace speechlm {

struct ToyLmConfig {
  int vocab_size = 32;
  int model_dim = 32;
  int depth = 4;
  int n_heads = 4;
  int mlp_ratio = 4;
  int max_positions = 512;
  std::uint64_t seed = 7;
  double embed_std = 1.0;
  double weight_scale = 1.0;
  double unembed_std = 1.0;
  // End-of-sequence logit offset. A negative value keeps an untrained model
  // from stopping immediately, so sampled references have usable length.
  int eos_id = 1;
  double eos_logit_bias = -4.0;

  void validate() const;
};

// Small decoder-only transformer with frozen random weights. Pre-norm blocks,
// causal multi-head attention, erf GELU feed-forward, sinusoidal positions,
// and an untied unembedding. The backward pass differentiates the logits and
// any tapped block outputs with respect to the input embeddings only; the
// weights never receive gradients.
class ToyLm : public LmAdapter {
 public:
  explicit ToyLm(const ToyLmConfig &config);

  std::string id() const override;
  int vocab_size() const override { return cfg_.vocab_size; }
  int model_dim() const override { return cfg_.model_dim; }
  int depth() const override { return cfg_.depth; }
  Vec embed_token(int token_id) const override;
  LmRawForward forward(const Mat &input_embeddings,
                       const std::vector<int> &tap_layers,
                       bool need_cache) const override;
  Mat backward_inputs(const LmRawForward &fwd, const Mat &d_logits,
                      const std::map<int, Mat> &d_taps) const override;
  std::uint64_t parameter_checksum() const override;

  const ToyLmConfig &config() const { return cfg_; }
  Mat &embedding_table() { return embed_; }
  Vec &unembed_bias() { return unembed_bias_; }

 private:
  struct Block {
    Vec ln1_gamma, ln1_beta;
    Mat wq, wk, wv, wo;
    Vec bq, bk, bv, bo;
    Vec ln2_gamma, ln2_beta;
    Mat w1, w2;
    Vec b1, b2;
  };

  Mat positional_rows(int count) const;

  ToyLmConfig cfg_;
  Mat embed_;        // vocab x dim
  std::vector<Block> blocks_;
  Vec final_gamma_, final_beta_;
  Mat unembed_;      // dim x vocab
  Vec unembed_bias_; // vocab
};

// Row-wise layer normalization and its input gradient. The scale and shift
// are treated as constants.
Mat layer_norm(const Mat &x, const Vec &gamma, const Vec &beta);
Mat layer_norm_backward(const Mat &x, const Vec &gamma, const Mat &d_out);

double gelu_erf(double x);
double gelu_erf_grad(double x);

}  // namespace speechlm
