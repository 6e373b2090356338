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

#include <optional>
#include <string>
#include <vector>

#include "speechlm/encoder.hpp"
#include "speechlm/lm.hpp"
#include "speechlm/tokenizer.hpp"
#include "speechlm/wav.hpp"

namespace speechlm {

// One (audio, transcript, response) record. The response is empty until the
// build step fills it; the summary fields are optional evaluation extras.
struct PairedSample {
  std::string audio_path;
  std::string transcript;
  std::string response;
  std::string split;
  std::string reference_summary;
  std::string lm_reference_summary;
};

struct ManifestMetadata {
  std::string corpus;
  bool built = false;
  std::string lm_id;
  std::string decoding = "greedy";
  int cap_multiplier = 2;
};

struct Manifest {
  ManifestMetadata metadata;
  std::vector<PairedSample> records;
  std::string root_dir;  // directory of the manifest file, not serialized

  static Manifest load(const std::string &path);
  void save(const std::string &path) const;
  void validate() const;

  std::string resolve_audio(const PairedSample &record) const;
  std::vector<int> split_indices(const std::string &split) const;
};

struct BuildResult {
  Manifest manifest;
  int filled = 0;
  int skipped = 0;
};

// Fills each record's response with the frozen LM's greedy reply to the
// transcript, capped at cap_multiplier times the transcript token count.
// Records whose audio file is missing are skipped with a log line; an empty
// transcript aborts the build. When reference_instruction is set, records
// without an lm_reference_summary get one generated from
// "instruction + transcript" under the same cap.
BuildResult build_response_dataset(
    const Manifest &input, const LmAdapter &lm, const ChatTemplate &tmpl,
    const WordTokenizer &tokenizer,
    const std::optional<std::string> &reference_instruction = std::nullopt);

// Student and teacher sequences over the same response ids. The audio span
// locates the encoder's rows inside the student prompt so training can route
// prompt gradients back to the encoder.
struct CollatedPair {
  AssembledPrompt student_prompt;
  AssembledPrompt teacher_prompt;
  std::vector<int> response_ids;  // transcript-conditioned reply plus eos
  AssembledPrompt::Span audio_span;
  AudioEncoder::Cache encoder_cache;
  std::string sample_key;
};

CollatedPair collate(const PairedSample &record, const WaveformInput &wave,
                     AudioEncoder &encoder, const ChatTemplate &tmpl,
                     const WordTokenizer &tokenizer, const LmAdapter &lm);

}  // namespace speechlm
