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

#include "speechlm/encoder.hpp"
#include "speechlm/util.hpp"

namespace speechlm {

// Chat-structure tokens wrapped around user content. Loaded from a JSON
// config so any published template can be dropped in.
struct ChatTemplate {
  std::vector<int> system_prefix;
  std::vector<int> user_prefix;
  std::vector<int> assistant_prefix;
  int eos_id = 0;

  static ChatTemplate from_file(const std::string &path);
  void save(const std::string &path) const;
  void validate(int vocab_size) const;
  int token_count() const {
    return static_cast<int>(system_prefix.size() + user_prefix.size() +
                            assistant_prefix.size());
  }
};

// One piece of a mixed prompt: either text token ids or audio tokens.
struct PromptSegment {
  enum class Kind { kText, kAudio };

  Kind kind = Kind::kText;
  std::vector<int> text_ids;
  AudioTokenSequence audio;

  static PromptSegment text(std::vector<int> ids) {
    PromptSegment s;
    s.kind = Kind::kText;
    s.text_ids = std::move(ids);
    return s;
  }
  static PromptSegment audio_tokens(AudioTokenSequence tokens) {
    PromptSegment s;
    s.kind = Kind::kAudio;
    s.audio = std::move(tokens);
    return s;
  }
};

// Full input sequence x = (x_0..x_t, x_{t+1}..x_T): prompt embeddings for
// positions 0..t, response token ids for positions t+1..T.
struct TrainingSequence {
  Mat prompt_embeddings;          // (boundary_t + 1) x model_dim
  std::vector<int> response_ids;  // length total_T - boundary_t
  int boundary_t = 0;
  int total_T = 0;

  void validate() const;
};

// Connector layers: 1-based indices over decoder blocks.
struct ConnectorLayerSet {
  std::vector<int> layers;

  void validate(int depth) const;
};

// The reference pattern [1, 6, 12, 18, 24] of a 24-block model, rescaled
// proportionally (and deduplicated) for shallower models.
ConnectorLayerSet scale_connector_layers(int depth);
ConnectorLayerSet scale_connector_layers(const std::vector<int> &reference,
                                         int reference_depth, int depth);

struct LmForwardCache {
  virtual ~LmForwardCache() = default;
};

// Raw adapter output over all positions; the bridge slices response rows.
struct LmRawForward {
  Mat logits;               // T_in x vocab
  std::map<int, Mat> taps;  // layer -> T_in x model_dim
  std::shared_ptr<LmForwardCache> cache;
};

// Contract for a frozen decoder-only language model. All entry points are
// const: nothing reachable from here may mutate model parameters.
class LmAdapter {
 public:
  virtual ~LmAdapter() = default;

  virtual std::string id() const = 0;
  virtual int vocab_size() const = 0;
  virtual int model_dim() const = 0;
  virtual int depth() const = 0;
  virtual Vec embed_token(int token_id) const = 0;
  virtual LmRawForward forward(const Mat &input_embeddings,
                               const std::vector<int> &tap_layers,
                               bool need_cache) const = 0;
  // d(loss)/d(input embeddings) given gradients over the full logit grid and
  // tapped hidden-state grids. Adapters that only serve inference keep the
  // default.
  virtual Mat backward_inputs(const LmRawForward &fwd, const Mat &d_logits,
                              const std::map<int, Mat> &d_taps) const;
  virtual std::uint64_t parameter_checksum() const = 0;
};

struct AssembledPrompt {
  Mat embeddings;  // prompt rows 0..boundary_t
  int boundary_t = 0;
  struct Span {
    PromptSegment::Kind kind;
    int begin;
    int length;
  };
  std::vector<Span> segment_spans;  // one per input segment, in order
};

// Concatenates system prefix, user prefix, the segments in order, and the
// assistant prefix; text ids go through the LM embedder, audio tokens are
// inserted as raw embedding rows.
AssembledPrompt assemble_prompt(const std::vector<PromptSegment> &segments,
                                const ChatTemplate &tmpl, const LmAdapter &lm);

// Per-position next-token logits at response positions plus hidden states at
// the connector layers. response_logits row i predicts response token i;
// hidden_states rows cover positions t+1..T.
struct LMForwardOutput {
  Mat response_logits;              // R x vocab
  std::map<int, Mat> hidden_states; // layer -> R x model_dim
  int boundary_t = 0;
  LmRawForward raw;                 // kept for the training backward pass
};

LMForwardOutput forward_teacher_forced(const Mat &prompt_embeddings,
                                       int boundary_t,
                                       const std::vector<int> &response_ids,
                                       const ConnectorLayerSet &layers,
                                       const LmAdapter &lm,
                                       bool need_cache = false);

// Argmax decoding; ties break toward the lowest token id. Stops at eos_id or
// after max_new_tokens, whichever comes first; eos is not included in the
// returned sequence.
std::vector<int> generate_greedy(const Mat &prompt_embeddings, const LmAdapter &lm,
                                 int eos_id, int max_new_tokens);

int argmax_lowest(const Eigen::Ref<const Eigen::RowVectorXd> &row);

}  // namespace speechlm
