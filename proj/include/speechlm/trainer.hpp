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
#include <optional>
#include <string>
#include <vector>

#include "speechlm/data.hpp"
#include "speechlm/objectives.hpp"

namespace speechlm {

struct TrainConfig {
  // Micro-steps at batch size 1. The reference-scale default is scaled down
  // in desk presets.
  long long max_steps = 2400000;
  int accumulation = 16;
  double lr_initial = 5e-5;
  double lr_final = 5e-6;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double weight_decay = 0.0;
  LossWeights weights;
  std::vector<int> connector_layers;  // empty: rescale the default pattern
  PoolingMode pooling_mode = PoolingMode::kUniform;
  std::uint64_t seed = 0;
  long long validation_every = 0;  // micro-steps; 0: max_steps / 50

  void validate() const;
};

// Linear decay from lr_initial at micro-step 0 to lr_final at max_steps.
double lr_at_step(long long step, const TrainConfig &cfg);

struct LossBundle {
  double ntp = 0.0;
  double ld = 0.0;
  double fd = 0.0;
  double total = 0.0;
  int response_len = 0;
};

// Loss gradients arranged on the full input-position grid of the student
// pass. Rows for prompt positions are exactly zero.
struct StepGradients {
  Mat d_logits_grid;
  std::map<int, Mat> d_tap_grids;
  LossBundle bundle;
};

StepGradients compute_step_gradients(const LMForwardOutput &student,
                                     const LMForwardOutput *teacher,
                                     const std::vector<int> &response_ids,
                                     const LossWeights &weights,
                                     int total_rows);

// One micro-step: teacher pass (when distillation is active), student pass,
// loss, and gradient accumulation into the encoder. Returns nothing when the
// loss is non-finite; the step is dropped after a diagnostic dump.
std::optional<LossBundle> train_step(const CollatedPair &pair,
                                     AudioEncoder &encoder,
                                     const LmAdapter &lm,
                                     const ConnectorLayerSet &layers,
                                     const LossWeights &weights);

// Adam with decoupled weight decay over the encoder parameter list.
class AdamW {
 public:
  AdamW(const std::vector<Mat *> &params, const TrainConfig &cfg);

  void apply(const std::vector<Mat *> &params, const std::vector<Mat *> &grads,
             double lr);

  long long t() const { return t_; }
  std::vector<Mat> &first_moments() { return m_; }
  std::vector<Mat> &second_moments() { return v_; }
  void set_t(long long t) { t_ = t; }

 private:
  TrainConfig cfg_;
  std::vector<Mat> m_, v_;
  long long t_ = 0;
};

struct CheckpointInfo {
  long long step = 0;
  double validation_ntp = 0.0;
  std::uint64_t lm_checksum = 0;
};

// Self-describing single-file checkpoint: step, validation loss, frozen-LM
// checksum, a config snapshot, encoder parameters, and optimizer moments.
void save_checkpoint(const std::string &path, const AudioEncoder &encoder,
                     const AdamW *optimizer, const std::string &config_snapshot,
                     const CheckpointInfo &info);
CheckpointInfo load_checkpoint(const std::string &path, AudioEncoder &encoder,
                               AdamW *optimizer);
std::string checkpoint_config_snapshot(const std::string &path);

struct TrainReport {
  std::string best_checkpoint_path;
  double best_validation_ntp = 0.0;
  long long best_step = 0;
  long long updates_applied = 0;
  long long steps_seen = 0;
  std::uint64_t lm_checksum_before = 0;
  std::uint64_t lm_checksum_after = 0;
};

// Shared construction context for training and evaluation runs.
struct RunComponents {
  AudioEncoder *encoder = nullptr;
  const LmAdapter *lm = nullptr;
  const ChatTemplate *tmpl = nullptr;
  const WordTokenizer *tokenizer = nullptr;
};

TrainReport train(const Manifest &manifest, const RunComponents &rc,
                  const TrainConfig &cfg, const std::string &out_dir,
                  const std::string &config_snapshot);

// Mean per-token next-token loss of the student pass over one split.
double validation_ntp_loss(const Manifest &manifest,
                           const std::vector<int> &indices,
                           const RunComponents &rc,
                           const ConnectorLayerSet &layers,
                           std::map<std::string, WaveformInput> &wave_cache);

// Fraction of split samples whose greedy audio-prompt reply reproduces the
// stored response exactly, token for token.
double exact_match_rate(const Manifest &manifest,
                        const std::vector<int> &indices,
                        const RunComponents &rc,
                        std::map<std::string, WaveformInput> &wave_cache);

const WaveformInput &cached_wave(const Manifest &manifest,
                                 const PairedSample &record,
                                 std::map<std::string, WaveformInput> &cache);

}  // namespace speechlm
