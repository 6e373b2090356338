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

#include "speechlm/evaluation.hpp"
#include "speechlm/synth.hpp"
#include "speechlm/toy_lm.hpp"
#include "speechlm/trainer.hpp"

namespace speechlm {

// Everything a run needs, parsed from one JSON file. Paths are resolved
// relative to the config file. Unknown keys are rejected; any key can be
// overridden through the environment (SPEECHLM_ prefix, dots to
// underscores, uppercase), and command-line flags override both.
struct RunConfig {
  std::string config_dir;
  std::string corpus = "toy";
  std::string out_dir = "runs/default";

  std::string vocab_path;
  std::string template_path;
  std::string input_manifest;
  std::string built_manifest;
  std::vector<std::pair<std::string, std::string>> perplexity_manifests;

  std::string lm_adapter = "toy";
  ToyLmConfig lm;

  std::string backbone_adapter = "toy_linear";
  int backbone_feature_dim = 48;
  int backbone_window_samples = 320;
  std::uint64_t backbone_seed = 11;
  double backbone_init_std = 0.0;  // 0: use 1/sqrt(window_samples)

  EncoderConfig encoder;
  std::uint64_t encoder_seed = 13;

  TrainConfig train;

  std::uint64_t synth_seed = 21;
  int synth_block_samples = 1280;
  int synth_silence_blocks = 1;

  std::string asr_adapter = "matched_filter";
  double asr_threshold = 0.5;

  std::vector<std::string> systems{"text-reference", "cascade", "e2e"};
  std::vector<std::string> metrics{"rouge1", "rouge2", "rougeL"};
  std::vector<std::string> reference_sets{"original", "lm"};
  std::vector<std::string> style_suffixes{"", "without mentioning any names",
                                          "focusing on lazio"};
  std::vector<std::pair<std::string, std::string>> external_metrics;
  std::string instruction = kDefaultInstruction;

  // Canonical JSON of the effective configuration, for checkpoints.
  std::string snapshot() const;
};

RunConfig load_run_config(const std::string &path);
RunConfig run_config_from_json_text(const std::string &text,
                                    const std::string &config_dir);

// Named ablation presets over the loss weights and pooling mode.
// full: (0.5, 0.5, 1.0); ntp_only: (0.5, 0, 0); ntp_ld: (0.5, 0.5, 0);
// ntp_fd: (0.5, 0, 1.0); ctc_pooling: full weights with aligned pooling.
void apply_preset(RunConfig &cfg, const std::string &preset);

// Instantiated adapters wired per the config. The encoder owns shared
// references to the backbone and boundary provider.
struct Components {
  std::shared_ptr<WordTokenizer> tokenizer;
  std::shared_ptr<ChatTemplate> tmpl;
  std::shared_ptr<ToyLm> lm;
  std::shared_ptr<FrameBackbone> backbone;
  std::shared_ptr<SynthModel> synth;
  std::shared_ptr<MatchedFilterAsr> matched_asr;
  std::shared_ptr<CtcWordBoundaryProvider> boundary_provider;
  std::shared_ptr<AudioEncoder> encoder;

  RunComponents run() const;
};

Components build_components(const RunConfig &cfg);

// Oracle recognizer preloaded with the manifest's ground-truth transcripts.
std::unique_ptr<OracleAsr> make_oracle_asr(const Manifest &manifest);

// Selects the configured recognizer for cascade runs.
const AsrAdapter *select_asr(const RunConfig &cfg, const Components &parts,
                             std::unique_ptr<OracleAsr> &oracle_storage,
                             const Manifest &manifest);

}  // namespace speechlm
