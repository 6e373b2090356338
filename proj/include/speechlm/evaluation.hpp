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

#include "speechlm/data.hpp"
#include "speechlm/metrics.hpp"
#include "speechlm/synth.hpp"
#include "speechlm/trainer.hpp"

namespace speechlm {

inline constexpr const char *kDefaultInstruction =
    "Summarize the following article in 3 sentences or less";

// Generation cap shared by all summary paths: twice the assembled prompt's
// content length (instruction plus article tokens or audio rows).
int summary_token_cap(int prompt_content_len);

std::string summarize_text(const std::string &article,
                           const std::string &instruction,
                           const RunComponents &rc);
std::string summarize_e2e(const WaveformInput &wave,
                          const std::string &instruction,
                          const RunComponents &rc);
std::string cascade_summarize(const WaveformInput &wave, const AsrAdapter &asr,
                              const std::string &instruction,
                              const RunComponents &rc);

// exp of the mean response-token negative log-likelihood given the prompt.
double perplexity_under_response(const std::vector<PromptSegment> &segments,
                                 const std::string &response,
                                 const RunComponents &rc);

struct EvalRecord {
  std::string sample_id;
  std::string prompt_style;  // "base" or the style suffix
  std::string system;        // e2e | cascade | text-reference
  std::string summary;
  // reference set -> metric -> score
  std::map<std::string, std::map<std::string, double>> scores;
};

struct SummarizationReport {
  // reference set -> system -> metric -> corpus mean
  std::map<std::string, std::map<std::string, std::map<std::string, double>>>
      means;
  std::vector<EvalRecord> records;
  int evaluated = 0;
  int excluded = 0;
  std::string table_text;
};

// Scores each configured system's summaries for the manifest's test split
// against every reference set ("original" uses reference_summary, "lm" uses
// lm_reference_summary). Samples missing any configured reference are
// excluded and counted.
SummarizationReport evaluate_summarization(
    const Manifest &manifest, const std::vector<std::string> &systems,
    const std::vector<std::shared_ptr<MetricAdapter>> &metrics,
    const std::vector<std::string> &reference_sets, const RunComponents &rc,
    const AsrAdapter *asr, const std::string &instruction);

struct PerplexityReport {
  // split label -> system -> mean perplexity over samples
  std::map<std::string, std::map<std::string, double>> values;
  std::vector<std::string> labels;  // row order
  std::string table_text;
};

PerplexityReport evaluate_perplexity(
    const std::vector<std::pair<std::string, Manifest>> &labeled_manifests,
    const std::vector<std::string> &systems, const RunComponents &rc,
    const AsrAdapter *asr);

struct StyleRecord {
  std::string sample_id;
  std::string prompt_style;
  std::string prompt_text;
  std::string summary;
};

struct StyleReport {
  std::vector<StyleRecord> records;
  std::string table_text;
};

// Greedy e2e summaries for every (sample, instruction suffix) pair. An empty
// suffix runs the base instruction and is tagged "base".
StyleReport style_variation_run(const Manifest &manifest,
                                const std::vector<std::string> &suffixes,
                                const RunComponents &rc,
                                const std::string &base_instruction);

void write_eval_records(const std::string &path,
                        const std::vector<EvalRecord> &records);
void write_style_records(const std::string &path,
                         const std::vector<StyleRecord> &records);

}  // namespace speechlm
