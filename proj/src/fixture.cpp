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

#include "speechlm/fixture.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <stdexcept>

#include <json.hpp>

#include "speechlm/data.hpp"
#include "speechlm/synth.hpp"
#include "speechlm/tokenizer.hpp"
#include "speechlm/util.hpp"

namespace speechlm {

namespace {

using nlohmann::json;

std::string sample_name(int i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "sample_%03d.wav", i);
  return buf;
}

json fixture_config(const FixtureSpec &spec, int vocab_size) {
  json j;
  j["corpus"] = "toy-fixture";
  j["out_dir"] = "out";
  j["paths"] = {{"vocab", "vocab.txt"},
                {"template", "template.json"},
                {"input_manifest", "manifest.jsonl"},
                {"built_manifest", "built.jsonl"},
                {"perplexity_manifests",
                 {{"clean-like", "manifest_clean.jsonl"},
                  {"other-like", "manifest_other.jsonl"}}}};
  j["lm"] = {{"adapter", "toy"}, {"vocab_size", vocab_size},
             {"model_dim", 32},  {"depth", 4},
             {"n_heads", 4},     {"seed", 7},
             {"eos_id", 1},      {"eos_logit_bias", -4.0}};
  j["backbone"] = {{"adapter", "toy_linear"},
                   {"feature_dim", 48},
                   {"window_samples", 320},
                   {"seed", 11}};
  j["encoder"] = {{"pool_kernel", 8},
                  {"pool_stride", 4},
                  {"pooling_mode", "uniform"},
                  {"seed", 13}};
  j["train"] = {{"max_steps", spec.train_max_steps},
                {"accumulation", spec.train_accumulation},
                {"lr_initial", spec.train_lr_initial},
                {"lr_final", spec.train_lr_final},
                {"lambda_ntp", 0.5},
                {"lambda_ld", 0.5},
                {"lambda_fd", 1.0},
                {"seed", 1},
                {"validation_every", 128}};
  j["synth"] = {{"seed", 21}, {"block_samples", 1280}, {"silence_blocks", 1}};
  j["asr"] = {{"adapter", "matched_filter"}, {"threshold", 0.5}};
  j["eval"] = {{"systems", {"text-reference", "cascade", "e2e"}},
               {"metrics", {"rouge1", "rouge2", "rougeL"}},
               {"reference_sets", {"original", "lm"}},
               {"style_suffixes",
                {"", "without mentioning any names", "focusing on lazio"}}};
  return j;
}

}  // namespace

const std::vector<std::string> &fixture_special_tokens() {
  static const std::vector<std::string> words{"<s>", "</s>", "<user>",
                                              "<assistant>"};
  return words;
}

const std::vector<std::string> &fixture_instruction_words() {
  static const std::vector<std::string> words{
      "summarize", "the",       "following", "article", "in",    "3",
      "sentences", "or",        "less",      "without", "mentioning",
      "any",       "names",     "focusing",  "on",      "lazio"};
  return words;
}

const std::vector<std::string> &fixture_content_words() {
  static const std::vector<std::string> words{
      "alpha", "bravo",    "charlie", "delta", "echo", "foxtrot",
      "golf",  "hotel",    "india",   "juliet", "kilo", "lima",
      "mike",  "november", "oscar",   "papa"};
  return words;
}

FixtureResult write_fixture(const FixtureSpec &spec) {
  if (spec.count < 1) throw std::invalid_argument("fixture needs >= 1 sample");
  if (spec.valid_count + spec.test_count > spec.count) {
    throw std::invalid_argument("split sizes exceed the sample count");
  }
  if (spec.min_transcript_words < 1 ||
      spec.max_transcript_words < spec.min_transcript_words) {
    throw std::invalid_argument("bad transcript length range");
  }

  const std::filesystem::path dir(spec.dir);
  std::filesystem::create_directories(dir / "wavs");
  std::filesystem::create_directories(dir / "wavs_other");

  std::vector<std::string> vocab = fixture_special_tokens();
  for (const auto &w : fixture_instruction_words()) vocab.push_back(w);
  for (const auto &w : fixture_content_words()) vocab.push_back(w);
  WordTokenizer tokenizer(vocab);
  const int vocab_size = tokenizer.size();

  FixtureResult result;
  result.vocab_path = (dir / "vocab.txt").string();
  tokenizer.save(result.vocab_path);

  ChatTemplate tmpl;
  tmpl.system_prefix = {tokenizer.id_of("<s>")};
  tmpl.user_prefix = {tokenizer.id_of("<user>")};
  tmpl.assistant_prefix = {tokenizer.id_of("<assistant>")};
  tmpl.eos_id = tokenizer.id_of("</s>");
  result.template_path = (dir / "template.json").string();
  tmpl.save(result.template_path);

  SynthModel synth(vocab_size, 21);
  Rng rng(spec.seed);
  const auto &content = fixture_content_words();

  Manifest manifest;
  manifest.metadata.corpus = "toy-fixture";
  Manifest clean, other;
  clean.metadata.corpus = "toy-fixture-clean";
  other.metadata.corpus = "toy-fixture-other";

  for (int i = 0; i < spec.count; ++i) {
    const int len =
        rng.uniform_int(spec.min_transcript_words, spec.max_transcript_words);
    std::vector<std::string> words;
    words.reserve(static_cast<size_t>(len));
    int prev = -1;
    for (int w = 0; w < len; ++w) {
      int pick = rng.uniform_int(0, static_cast<int>(content.size()) - 1);
      if (pick == prev) pick = (pick + 1) % static_cast<int>(content.size());
      words.push_back(content[static_cast<size_t>(pick)]);
      prev = pick;
    }
    std::string transcript;
    for (size_t w = 0; w < words.size(); ++w) {
      if (w > 0) transcript += ' ';
      transcript += words[w];
    }
    std::string summary;
    for (size_t w = 0; w < std::min<size_t>(3, words.size()); ++w) {
      if (w > 0) summary += ' ';
      summary += words[w];
    }

    const WaveformInput wave = synth.synthesize(tokenizer.tokenize(transcript));
    const std::string rel_path = "wavs/" + sample_name(i);
    write_wav((dir / rel_path).string(), wave);

    PairedSample record;
    record.audio_path = rel_path;
    record.transcript = transcript;
    record.reference_summary = summary;
    const int train_count = spec.count - spec.valid_count - spec.test_count;
    if (i < train_count) {
      record.split = "train";
    } else if (i < train_count + spec.valid_count) {
      record.split = "valid";
    } else {
      record.split = "test";
    }
    manifest.records.push_back(record);
    ++result.written;

    if (record.split == "test") {
      PairedSample clean_record = record;
      clean_record.audio_path = rel_path;
      clean.records.push_back(clean_record);

      WaveformInput noisy = wave;
      Rng noise_rng(spec.seed ^ (0x5bd1e995ULL + static_cast<std::uint64_t>(i)));
      for (double &s : noisy.samples) {
        s = std::clamp(s + noise_rng.gaussian(0.0, 0.02), -1.0, 1.0);
      }
      const std::string other_path = "wavs_other/" + sample_name(i);
      write_wav((dir / other_path).string(), noisy);
      PairedSample other_record = record;
      other_record.audio_path = other_path;
      other.records.push_back(other_record);
    }
  }

  result.manifest_path = (dir / "manifest.jsonl").string();
  manifest.save(result.manifest_path);
  clean.save((dir / "manifest_clean.jsonl").string());
  other.save((dir / "manifest_other.jsonl").string());

  result.config_path = (dir / "config.json").string();
  write_text_file(result.config_path,
                  fixture_config(spec, vocab_size).dump(2) + "\n");
  return result;
}

}  // namespace speechlm
