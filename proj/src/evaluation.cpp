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

#include "speechlm/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include <json.hpp>

#include "speechlm/objectives.hpp"

namespace speechlm {

namespace {

using nlohmann::json;

std::string format_score(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

std::string format_table(const std::vector<std::string> &headers,
                         const std::vector<std::vector<std::string>> &rows) {
  std::vector<size_t> widths(headers.size());
  for (size_t c = 0; c < headers.size(); ++c) widths[c] = headers[c].size();
  for (const auto &row : rows) {
    for (size_t c = 0; c < row.size(); ++c) {
      widths[c] = std::max(widths[c], row[c].size());
    }
  }
  auto emit_row = [&widths](const std::vector<std::string> &row) {
    std::string line;
    for (size_t c = 0; c < row.size(); ++c) {
      line += row[c];
      if (c + 1 < row.size()) {
        line.append(widths[c] - row[c].size() + 2, ' ');
      }
    }
    line += '\n';
    return line;
  };
  std::string out = emit_row(headers);
  size_t total = 0;
  for (size_t c = 0; c < widths.size(); ++c) {
    total += widths[c] + (c + 1 < widths.size() ? 2 : 0);
  }
  out.append(total, '-');
  out += '\n';
  for (const auto &row : rows) out += emit_row(row);
  return out;
}

const std::string &reference_text(const PairedSample &record,
                                  const std::string &set_name) {
  if (set_name == "original") return record.reference_summary;
  if (set_name == "lm") return record.lm_reference_summary;
  throw std::invalid_argument("unknown reference set \"" + set_name +
                              "\": choices are original, lm");
}

std::string system_summary(const std::string &system,
                           const PairedSample &record,
                           const WaveformInput &wave, const RunComponents &rc,
                           const AsrAdapter *asr,
                           const std::string &instruction) {
  if (system == "text-reference") {
    return summarize_text(record.transcript, instruction, rc);
  }
  if (system == "cascade") {
    if (asr == nullptr) {
      throw std::invalid_argument("cascade system requested without a recognizer");
    }
    return cascade_summarize(wave, *asr, instruction, rc);
  }
  if (system == "e2e") {
    return summarize_e2e(wave, instruction, rc);
  }
  throw std::invalid_argument("unknown system \"" + system +
                              "\": choices are e2e, cascade, text-reference");
}

}  // namespace

int summary_token_cap(int prompt_content_len) {
  if (prompt_content_len < 1) {
    throw std::invalid_argument("empty prompt content");
  }
  return 2 * prompt_content_len;
}

std::string summarize_text(const std::string &article,
                           const std::string &instruction,
                           const RunComponents &rc) {
  if (article.empty()) {
    throw std::invalid_argument("cannot summarize an empty article text");
  }
  const std::vector<int> ids =
      rc.tokenizer->tokenize(instruction + " " + article);
  AssembledPrompt prompt =
      assemble_prompt({PromptSegment::text(ids)}, *rc.tmpl, *rc.lm);
  const std::vector<int> reply =
      generate_greedy(prompt.embeddings, *rc.lm, rc.tmpl->eos_id,
                      summary_token_cap(static_cast<int>(ids.size())));
  return rc.tokenizer->detokenize(reply);
}

std::string summarize_e2e(const WaveformInput &wave,
                          const std::string &instruction,
                          const RunComponents &rc) {
  const std::vector<int> instr_ids = rc.tokenizer->tokenize(instruction);
  AudioTokenSequence tokens = rc.encoder->encode(wave);
  const int content_len =
      static_cast<int>(instr_ids.size()) + static_cast<int>(tokens.tokens.rows());
  AssembledPrompt prompt = assemble_prompt(
      {PromptSegment::text(instr_ids), PromptSegment::audio_tokens(std::move(tokens))},
      *rc.tmpl, *rc.lm);
  const std::vector<int> reply =
      generate_greedy(prompt.embeddings, *rc.lm, rc.tmpl->eos_id,
                      summary_token_cap(content_len));
  return rc.tokenizer->detokenize(reply);
}

std::string cascade_summarize(const WaveformInput &wave, const AsrAdapter &asr,
                              const std::string &instruction,
                              const RunComponents &rc) {
  const std::string transcript = asr.transcribe(wave);
  if (transcript.empty()) {
    throw std::invalid_argument("recognizer \"" + asr.id() +
                                "\" produced an empty transcript");
  }
  return summarize_text(transcript, instruction, rc);
}

double perplexity_under_response(const std::vector<PromptSegment> &segments,
                                 const std::string &response,
                                 const RunComponents &rc) {
  const std::vector<int> response_ids = rc.tokenizer->tokenize(response);
  if (response_ids.empty()) {
    throw std::invalid_argument("perplexity requested under an empty response");
  }
  AssembledPrompt prompt = assemble_prompt(segments, *rc.tmpl, *rc.lm);
  LMForwardOutput out =
      forward_teacher_forced(prompt.embeddings, prompt.boundary_t, response_ids,
                             ConnectorLayerSet{}, *rc.lm);
  const NtpLoss ntp = ntp_loss(out.response_logits, response_ids);
  return std::exp(ntp.mean());
}

SummarizationReport evaluate_summarization(
    const Manifest &manifest, const std::vector<std::string> &systems,
    const std::vector<std::shared_ptr<MetricAdapter>> &metrics,
    const std::vector<std::string> &reference_sets, const RunComponents &rc,
    const AsrAdapter *asr, const std::string &instruction) {
  if (systems.empty() || metrics.empty() || reference_sets.empty()) {
    throw std::invalid_argument(
        "summarization evaluation needs systems, metrics, and reference sets");
  }
  const std::vector<int> test_idx = manifest.split_indices("test");
  if (test_idx.empty()) {
    throw std::invalid_argument("manifest has no test-split records");
  }

  SummarizationReport report;
  std::map<std::string, std::map<std::string, std::map<std::string, double>>> sums;
  std::map<std::string, WaveformInput> wave_cache;

  for (int idx : test_idx) {
    const PairedSample &record = manifest.records[static_cast<size_t>(idx)];
    bool missing_ref = false;
    for (const std::string &set_name : reference_sets) {
      if (reference_text(record, set_name).empty()) missing_ref = true;
    }
    if (missing_ref) {
      SL_WARN("excluding %s: missing a configured reference summary",
              record.audio_path.c_str());
      ++report.excluded;
      continue;
    }
    const WaveformInput &wave = cached_wave(manifest, record, wave_cache);
    for (const std::string &system : systems) {
      EvalRecord er;
      er.sample_id = record.audio_path;
      er.prompt_style = "base";
      er.system = system;
      er.summary = system_summary(system, record, wave, rc, asr, instruction);
      for (const std::string &set_name : reference_sets) {
        const std::string &ref = reference_text(record, set_name);
        for (const auto &metric : metrics) {
          const double s = metric->score(er.summary, ref);
          er.scores[set_name][metric->name()] = s;
          sums[set_name][system][metric->name()] += s;
        }
      }
      report.records.push_back(std::move(er));
    }
    ++report.evaluated;
  }
  if (report.evaluated == 0) {
    throw std::invalid_argument("every test sample was excluded; nothing scored");
  }

  for (const auto &[set_name, per_system] : sums) {
    for (const auto &[system, per_metric] : per_system) {
      for (const auto &[metric, total] : per_metric) {
        report.means[set_name][system][metric] = total / report.evaluated;
      }
    }
  }

  std::vector<std::string> headers{"reference_set", "system"};
  for (const auto &metric : metrics) headers.push_back(metric->name());
  std::vector<std::vector<std::string>> rows;
  for (const std::string &set_name : reference_sets) {
    for (const std::string &system : systems) {
      std::vector<std::string> row{set_name, system};
      for (const auto &metric : metrics) {
        row.push_back(
            format_score(report.means.at(set_name).at(system).at(metric->name())));
      }
      rows.push_back(std::move(row));
    }
  }
  report.table_text = format_table(headers, rows);
  return report;
}

PerplexityReport evaluate_perplexity(
    const std::vector<std::pair<std::string, Manifest>> &labeled_manifests,
    const std::vector<std::string> &systems, const RunComponents &rc,
    const AsrAdapter *asr) {
  if (labeled_manifests.empty() || systems.empty()) {
    throw std::invalid_argument(
        "perplexity evaluation needs labeled manifests and systems");
  }
  PerplexityReport report;
  for (const auto &[label, manifest] : labeled_manifests) {
    report.labels.push_back(label);
    if (!manifest.metadata.built) {
      throw std::invalid_argument("manifest for split \"" + label +
                                  "\" has no responses; build it first");
    }
    std::map<std::string, WaveformInput> wave_cache;
    for (const std::string &system : systems) {
      double total = 0.0;
      int counted = 0;
      for (const PairedSample &record : manifest.records) {
        const WaveformInput &wave = cached_wave(manifest, record, wave_cache);
        std::vector<PromptSegment> segments;
        if (system == "text-reference") {
          segments.push_back(
              PromptSegment::text(rc.tokenizer->tokenize(record.transcript)));
        } else if (system == "cascade") {
          if (asr == nullptr) {
            throw std::invalid_argument(
                "cascade system requested without a recognizer");
          }
          const std::string transcript = asr->transcribe(wave);
          if (transcript.empty()) {
            throw std::invalid_argument("recognizer \"" + asr->id() +
                                        "\" produced an empty transcript");
          }
          segments.push_back(
              PromptSegment::text(rc.tokenizer->tokenize(transcript)));
        } else if (system == "e2e") {
          segments.push_back(
              PromptSegment::audio_tokens(rc.encoder->encode(wave)));
        } else {
          throw std::invalid_argument(
              "unknown system \"" + system +
              "\": choices are e2e, cascade, text-reference");
        }
        total += perplexity_under_response(segments, record.response, rc);
        ++counted;
      }
      if (counted == 0) {
        throw std::invalid_argument("split \"" + label + "\" holds no records");
      }
      report.values[label][system] = total / counted;
    }
  }

  std::vector<std::string> headers{"split"};
  for (const std::string &system : systems) headers.push_back(system);
  std::vector<std::vector<std::string>> rows;
  for (const std::string &label : report.labels) {
    std::vector<std::string> row{label};
    for (const std::string &system : systems) {
      row.push_back(format_score(report.values.at(label).at(system)));
    }
    rows.push_back(std::move(row));
  }
  report.table_text = format_table(headers, rows);
  return report;
}

StyleReport style_variation_run(const Manifest &manifest,
                                const std::vector<std::string> &suffixes,
                                const RunComponents &rc,
                                const std::string &base_instruction) {
  if (suffixes.empty()) {
    throw std::invalid_argument("style run needs at least one suffix "
                                "(an empty string selects the base prompt)");
  }
  const std::vector<int> test_idx = manifest.split_indices("test");
  if (test_idx.empty()) {
    throw std::invalid_argument("manifest has no test-split records");
  }
  StyleReport report;
  std::map<std::string, WaveformInput> wave_cache;
  for (int idx : test_idx) {
    const PairedSample &record = manifest.records[static_cast<size_t>(idx)];
    const WaveformInput &wave = cached_wave(manifest, record, wave_cache);
    for (const std::string &suffix : suffixes) {
      StyleRecord sr;
      sr.sample_id = record.audio_path;
      sr.prompt_style = suffix.empty() ? "base" : suffix;
      sr.prompt_text =
          suffix.empty() ? base_instruction : base_instruction + " " + suffix;
      sr.summary = summarize_e2e(wave, sr.prompt_text, rc);
      report.records.push_back(std::move(sr));
    }
  }
  std::vector<std::vector<std::string>> rows;
  for (const auto &r : report.records) {
    rows.push_back({r.sample_id, r.prompt_style, r.summary});
  }
  report.table_text = format_table({"sample", "prompt_style", "summary"}, rows);
  return report;
}

void write_eval_records(const std::string &path,
                        const std::vector<EvalRecord> &records) {
  std::string out;
  for (const auto &r : records) {
    json j;
    j["sample_id"] = r.sample_id;
    j["prompt_style"] = r.prompt_style;
    j["system"] = r.system;
    j["summary"] = r.summary;
    j["scores"] = r.scores;
    out += j.dump() + "\n";
  }
  write_text_file(path, out);
}

void write_style_records(const std::string &path,
                         const std::vector<StyleRecord> &records) {
  std::string out;
  for (const auto &r : records) {
    json j;
    j["sample_id"] = r.sample_id;
    j["prompt_style"] = r.prompt_style;
    j["prompt_text"] = r.prompt_text;
    j["summary"] = r.summary;
    out += j.dump() + "\n";
  }
  write_text_file(path, out);
}

}  // namespace speechlm
