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

#include "speechlm/data.hpp"

#include <filesystem>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "speechlm/util.hpp"

namespace speechlm {

namespace {

using nlohmann::json;

json metadata_to_json(const ManifestMetadata &m, const Manifest &manifest) {
  json j;
  j["kind"] = "metadata";
  j["corpus"] = m.corpus;
  j["built"] = m.built;
  if (m.built) {
    j["provenance"] = {{"lm_id", m.lm_id},
                       {"decoding", m.decoding},
                       {"cap_multiplier", m.cap_multiplier}};
  }
  std::map<std::string, int> sizes;
  for (const auto &r : manifest.records) sizes[r.split] += 1;
  j["split_sizes"] = sizes;
  return j;
}

json record_to_json(const PairedSample &r) {
  json j;
  j["kind"] = "sample";
  j["audio_path"] = r.audio_path;
  j["transcript"] = r.transcript;
  j["split"] = r.split;
  if (!r.response.empty()) j["response"] = r.response;
  if (!r.reference_summary.empty()) j["reference_summary"] = r.reference_summary;
  if (!r.lm_reference_summary.empty()) {
    j["lm_reference_summary"] = r.lm_reference_summary;
  }
  return j;
}

}  // namespace

Manifest Manifest::load(const std::string &path) {
  std::istringstream in(read_text_file(path));
  Manifest m;
  m.root_dir = std::filesystem::path(path).parent_path().string();
  std::string line;
  bool saw_metadata = false;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j = json::parse(line);
    const std::string kind = j.value("kind", "sample");
    if (kind == "metadata") {
      if (saw_metadata) {
        throw std::invalid_argument("manifest " + path +
                                    " has a second metadata line at line " +
                                    std::to_string(line_no));
      }
      saw_metadata = true;
      m.metadata.corpus = j.value("corpus", "");
      m.metadata.built = j.value("built", false);
      if (j.contains("provenance")) {
        const auto &p = j["provenance"];
        m.metadata.lm_id = p.value("lm_id", "");
        m.metadata.decoding = p.value("decoding", "greedy");
        m.metadata.cap_multiplier = p.value("cap_multiplier", 2);
      }
      continue;
    }
    PairedSample r;
    r.audio_path = j.at("audio_path").get<std::string>();
    r.transcript = j.at("transcript").get<std::string>();
    r.split = j.at("split").get<std::string>();
    r.response = j.value("response", "");
    r.reference_summary = j.value("reference_summary", "");
    r.lm_reference_summary = j.value("lm_reference_summary", "");
    m.records.push_back(std::move(r));
  }
  if (!saw_metadata) {
    throw std::invalid_argument("manifest " + path +
                                " is missing its metadata header line");
  }
  m.validate();
  return m;
}

void Manifest::save(const std::string &path) const {
  validate();
  std::string out = metadata_to_json(metadata, *this).dump() + "\n";
  for (const auto &r : records) out += record_to_json(r).dump() + "\n";
  write_text_file(path, out);
}

void Manifest::validate() const {
  std::set<std::pair<std::string, std::string>> keys;
  for (const auto &r : records) {
    if (r.split != "train" && r.split != "valid" && r.split != "test") {
      throw std::invalid_argument("unknown split \"" + r.split +
                                  "\" for audio " + r.audio_path);
    }
    if (!keys.insert({r.audio_path, r.split}).second) {
      throw std::invalid_argument("duplicate manifest key (" + r.audio_path +
                                  ", " + r.split + ")");
    }
    if (metadata.built && r.transcript.empty()) {
      throw std::invalid_argument("built manifest holds an empty transcript for " +
                                  r.audio_path);
    }
  }
  if (metadata.built && metadata.lm_id.empty()) {
    throw std::invalid_argument(
        "built manifest is missing its language model provenance");
  }
}

std::string Manifest::resolve_audio(const PairedSample &record) const {
  std::filesystem::path p(record.audio_path);
  if (p.is_absolute() || root_dir.empty()) return record.audio_path;
  return (std::filesystem::path(root_dir) / p).string();
}

std::vector<int> Manifest::split_indices(const std::string &split) const {
  std::vector<int> out;
  for (int i = 0; i < static_cast<int>(records.size()); ++i) {
    if (records[static_cast<size_t>(i)].split == split) out.push_back(i);
  }
  return out;
}

BuildResult build_response_dataset(
    const Manifest &input, const LmAdapter &lm, const ChatTemplate &tmpl,
    const WordTokenizer &tokenizer,
    const std::optional<std::string> &reference_instruction) {
  tmpl.validate(lm.vocab_size());
  BuildResult result;
  result.manifest.metadata = input.metadata;
  result.manifest.root_dir = input.root_dir;
  result.manifest.metadata.built = true;
  result.manifest.metadata.lm_id = lm.id();
  result.manifest.metadata.decoding = "greedy";
  result.manifest.metadata.cap_multiplier = 2;

  auto greedy_reply = [&](const std::string &text, int cap) {
    const std::vector<int> ids = tokenizer.tokenize(text);
    AssembledPrompt prompt = assemble_prompt({PromptSegment::text(ids)}, tmpl, lm);
    const std::vector<int> reply =
        generate_greedy(prompt.embeddings, lm, tmpl.eos_id, cap);
    return tokenizer.detokenize(reply);
  };

  for (const auto &record : input.records) {
    if (record.transcript.empty()) {
      throw std::invalid_argument("record " + record.audio_path +
                                  " has an empty transcript");
    }
    const std::string audio = input.resolve_audio(record);
    if (!file_exists(audio)) {
      SL_WARN("skipping record %s: audio file missing", audio.c_str());
      ++result.skipped;
      continue;
    }
    PairedSample out = record;
    const int transcript_len =
        static_cast<int>(tokenizer.tokenize(record.transcript).size());
    out.response = greedy_reply(record.transcript,
                                result.manifest.metadata.cap_multiplier *
                                    transcript_len);
    if (out.response.empty()) {
      SL_WARN("record %s received an empty model response", audio.c_str());
    }
    if (reference_instruction.has_value() && out.lm_reference_summary.empty()) {
      const std::string prompt_text =
          *reference_instruction + " " + record.transcript;
      const int prompt_len =
          static_cast<int>(tokenizer.tokenize(prompt_text).size());
      out.lm_reference_summary = greedy_reply(
          prompt_text, result.manifest.metadata.cap_multiplier * prompt_len);
    }
    result.manifest.records.push_back(std::move(out));
    ++result.filled;
  }
  result.manifest.validate();
  return result;
}

CollatedPair collate(const PairedSample &record, const WaveformInput &wave,
                     AudioEncoder &encoder, const ChatTemplate &tmpl,
                     const WordTokenizer &tokenizer, const LmAdapter &lm) {
  if (record.response.empty()) {
    throw std::invalid_argument("record " + record.audio_path +
                                " has no response; build the response "
                                "dataset first");
  }
  CollatedPair pair;
  pair.sample_key = record.audio_path;
  pair.response_ids = tokenizer.tokenize(record.response);
  pair.response_ids.push_back(tmpl.eos_id);

  const std::vector<int> transcript_ids = tokenizer.tokenize(record.transcript);
  pair.teacher_prompt =
      assemble_prompt({PromptSegment::text(transcript_ids)}, tmpl, lm);

  AudioTokenSequence tokens = encoder.encode(wave, &pair.encoder_cache);
  pair.student_prompt =
      assemble_prompt({PromptSegment::audio_tokens(std::move(tokens))}, tmpl, lm);
  pair.audio_span = pair.student_prompt.segment_spans.at(0);
  return pair;
}

}  // namespace speechlm
