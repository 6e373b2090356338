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

namespace speechlm {

// Parameters of the bundled synthetic corpus: a small vocabulary, sinusoid
// speech, deterministic transcripts, and a ready-to-run config file.
struct FixtureSpec {
  std::string dir;
  int count = 10;
  int valid_count = 2;
  int test_count = 2;
  int min_transcript_words = 6;
  int max_transcript_words = 9;
  std::uint64_t seed = 5;
  // Training knobs baked into the generated config; sized for minute-scale
  // desk runs rather than the reference-scale defaults.
  long long train_max_steps = 512;
  int train_accumulation = 4;
  double train_lr_initial = 1e-2;
  double train_lr_final = 1e-3;
};

struct FixtureResult {
  std::string config_path;
  std::string manifest_path;
  std::string vocab_path;
  std::string template_path;
  int written = 0;
};

// Writes vocab.txt, template.json, wavs/, the input manifest, the two
// labeled perplexity test manifests (clean audio and noise-added audio),
// and config.json under spec.dir.
FixtureResult write_fixture(const FixtureSpec &spec);

// Word lists the fixture draws from. Instruction words cover the default
// summarization instruction and the bundled style suffixes; content words
// fill transcripts.
const std::vector<std::string> &fixture_special_tokens();
const std::vector<std::string> &fixture_instruction_words();
const std::vector<std::string> &fixture_content_words();

}  // namespace speechlm
