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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "speechlm/backbone.hpp"
#include "speechlm/data.hpp"
#include "speechlm/encoder.hpp"
#include "speechlm/tokenizer.hpp"
#include "speechlm/util.hpp"
#include "speechlm/wav.hpp"
#include "support/test_lms.hpp"

using namespace speechlm;
using speechlm::testing::ConstantLm;
using speechlm::testing::TempDir;
using speechlm::testing::UniformLm;

namespace {

WordTokenizer tiny_tokenizer() {
  return WordTokenizer({"<s>", "</s>", "<user>", "<assistant>", "alpha",
                        "bravo", "charlie", "delta"});
}

ChatTemplate tiny_template() {
  ChatTemplate tmpl;
  tmpl.system_prefix = {0};
  tmpl.user_prefix = {2};
  tmpl.assistant_prefix = {3};
  tmpl.eos_id = 1;
  return tmpl;
}

Manifest sample_manifest(const TempDir &tmp, bool with_audio = true) {
  Manifest manifest;
  manifest.metadata.corpus = "test";
  manifest.root_dir = tmp.str();

  WaveformInput wave;
  wave.samples.assign(640, 0.25);

  PairedSample a;
  a.audio_path = "wavs/a.wav";
  a.transcript = "alpha bravo";
  a.split = "train";
  a.reference_summary = "alpha";

  PairedSample b;
  b.audio_path = "wavs/b.wav";
  b.transcript = "charlie delta alpha";
  b.split = "test";

  if (with_audio) {
    std::filesystem::create_directories(tmp.path() / "wavs");
    write_wav(tmp.str("wavs/a.wav"), wave);
    write_wav(tmp.str("wavs/b.wav"), wave);
  }
  manifest.records = {a, b};
  return manifest;
}

}  // namespace

TEST_CASE("manifests round-trip byte-identically through save and load") {
  TempDir tmp("manifest");
  Manifest manifest = sample_manifest(tmp, false);
  manifest.records[0].response = "bravo bravo";
  manifest.metadata.built = true;
  manifest.metadata.lm_id = "toy:test";

  const std::string first = tmp.str("manifest.jsonl");
  const std::string second = tmp.str("again.jsonl");
  manifest.save(first);
  Manifest loaded = Manifest::load(first);
  loaded.save(second);
  CHECK(read_text_file(first) == read_text_file(second));

  CHECK(loaded.metadata.built);
  CHECK(loaded.metadata.lm_id == "toy:test");
  CHECK(loaded.metadata.corpus == "test");
  REQUIRE(loaded.records.size() == 2);
  CHECK(loaded.records[0].transcript == "alpha bravo");
  CHECK(loaded.records[0].response == "bravo bravo");
  CHECK(loaded.records[0].reference_summary == "alpha");
  CHECK(loaded.records[1].lm_reference_summary.empty());
}

TEST_CASE("optional record fields are omitted from the serialized form") {
  TempDir tmp("manifest_sparse");
  Manifest manifest = sample_manifest(tmp, false);
  const std::string path = tmp.str("manifest.jsonl");
  manifest.save(path);
  const std::string text = read_text_file(path);
  CHECK(text.find("reference_summary") != std::string::npos);
  CHECK(text.find("lm_reference_summary") == std::string::npos);
  CHECK(text.find("response") == std::string::npos);
}

TEST_CASE("split lookup returns positions of matching records") {
  TempDir tmp("splits");
  const Manifest manifest = sample_manifest(tmp, false);
  CHECK(manifest.split_indices("train") == std::vector<int>{0});
  CHECK(manifest.split_indices("test") == std::vector<int>{1});
  CHECK(manifest.split_indices("valid").empty());
}

TEST_CASE("audio paths resolve relative to the manifest directory") {
  TempDir tmp("resolve");
  const Manifest manifest = sample_manifest(tmp, false);
  CHECK(manifest.resolve_audio(manifest.records[0]) == tmp.str("wavs/a.wav"));
}

TEST_CASE("the response builder fills every record with a capped reply") {
  TempDir tmp("build");
  const Manifest input = sample_manifest(tmp);
  const WordTokenizer tokenizer = tiny_tokenizer();
  const ChatTemplate tmpl = tiny_template();
  // Always predicts "bravo", never eos, so replies run to the cap of
  // twice the transcript length.
  ConstantLm lm(8, 4, 5);

  const BuildResult result = build_response_dataset(input, lm, tmpl, tokenizer);
  CHECK(result.filled == 2);
  CHECK(result.skipped == 0);
  REQUIRE(result.manifest.records.size() == 2);
  CHECK(result.manifest.metadata.built);
  CHECK(result.manifest.metadata.lm_id == lm.id());
  CHECK(result.manifest.metadata.decoding == "greedy");
  CHECK(result.manifest.metadata.cap_multiplier == 2);

  // Transcript "alpha bravo" has 2 tokens, so the reply caps at 4.
  CHECK(result.manifest.records[0].response == "bravo bravo bravo bravo");
  // Transcript "charlie delta alpha" has 3 tokens, cap 6.
  CHECK(result.manifest.records[1].response ==
        "bravo bravo bravo bravo bravo bravo");
}

TEST_CASE("the response builder can generate reference summaries") {
  TempDir tmp("build_refs");
  Manifest input = sample_manifest(tmp);
  input.records[0].lm_reference_summary = "delta";
  const WordTokenizer tokenizer = tiny_tokenizer();
  ConstantLm lm(8, 4, 6);

  const BuildResult result = build_response_dataset(
      input, lm, tiny_template(), tokenizer, std::string("alpha"));
  // A record with a summary keeps it; the other gets a generated one capped
  // at twice the (instruction + transcript) token count: 2 * (1 + 3) = 8.
  CHECK(result.manifest.records[0].lm_reference_summary == "delta");
  const std::vector<int> generated =
      tokenizer.tokenize(result.manifest.records[1].lm_reference_summary);
  CHECK(generated.size() == 8);
}

TEST_CASE("records with missing audio are skipped, not fatal") {
  TempDir tmp("build_skip");
  Manifest input = sample_manifest(tmp);
  PairedSample ghost;
  ghost.audio_path = "wavs/missing.wav";
  ghost.transcript = "alpha";
  ghost.split = "train";
  input.records.push_back(ghost);

  const BuildResult result =
      build_response_dataset(input, ConstantLm(8, 4, 5), tiny_template(),
                             tiny_tokenizer());
  CHECK(result.filled == 2);
  CHECK(result.skipped == 1);
  CHECK(result.manifest.records.size() == 2);
}

TEST_CASE("an empty transcript aborts the build") {
  TempDir tmp("build_empty");
  Manifest input = sample_manifest(tmp);
  input.records[1].transcript = "";
  CHECK_THROWS_AS(build_response_dataset(input, ConstantLm(8, 4, 5),
                                         tiny_template(), tiny_tokenizer()),
                  std::invalid_argument);
}

TEST_CASE("collation pairs teacher text and student audio over one response") {
  TempDir tmp("collate");
  const WordTokenizer tokenizer = tiny_tokenizer();
  const ChatTemplate tmpl = tiny_template();
  UniformLm lm(8, 4);

  EncoderConfig cfg;
  cfg.pool_kernel = 8;
  cfg.pool_stride = 4;
  cfg.feature_dim = 3;
  cfg.model_dim = 4;
  auto backbone = std::make_shared<LinearBackbone>(320, 3, 3, 0.05);
  AudioEncoder encoder(cfg, backbone, 17);

  PairedSample record;
  record.audio_path = "wavs/c.wav";
  record.transcript = "alpha bravo charlie";
  record.response = "delta alpha";

  WaveformInput wave;
  wave.samples.assign(16000, 0.0);
  for (size_t i = 0; i < wave.samples.size(); ++i) {
    wave.samples[i] = 0.5 * std::sin(0.002 * static_cast<double>(i));
  }

  const CollatedPair pair = collate(record, wave, encoder, tmpl, tokenizer, lm);

  // Response ids carry the reply plus eos.
  CHECK(pair.response_ids == std::vector<int>{7, 4, 1});

  // Teacher prompt: 1 system + 1 user + 3 transcript + 1 assistant = 6 rows.
  CHECK(pair.teacher_prompt.embeddings.rows() == 6);
  CHECK(pair.teacher_prompt.boundary_t == 5);

  // Student prompt: 16000 samples -> 50 frames -> 11 pooled audio rows.
  CHECK(pair.audio_span.length == 11);
  CHECK(pair.audio_span.begin == 2);
  CHECK(pair.student_prompt.embeddings.rows() == 14);
  CHECK(pair.student_prompt.boundary_t == 13);
  CHECK(pair.encoder_cache.plan.size() == 11);
  CHECK(pair.sample_key == "wavs/c.wav");
}

TEST_CASE("collation requires a built response") {
  TempDir tmp("collate_unbuilt");
  PairedSample record;
  record.audio_path = "wavs/d.wav";
  record.transcript = "alpha";

  EncoderConfig cfg;
  cfg.feature_dim = 3;
  cfg.model_dim = 4;
  auto backbone = std::make_shared<LinearBackbone>(320, 3, 3, 0.05);
  AudioEncoder encoder(cfg, backbone, 17);
  WaveformInput wave;
  wave.samples.assign(3200, 0.1);

  UniformLm lm(8, 4);
  const WordTokenizer tokenizer = tiny_tokenizer();
  CHECK_THROWS_AS(collate(record, wave, encoder, tiny_template(), tokenizer, lm),
                  std::invalid_argument);
}

TEST_CASE("manifest validation rejects duplicate records and bad splits") {
  TempDir tmp("dupes");
  Manifest manifest = sample_manifest(tmp, false);
  manifest.records[1] = manifest.records[0];
  CHECK_THROWS_AS(manifest.validate(), std::invalid_argument);

  Manifest bad_split = sample_manifest(tmp, false);
  bad_split.records[0].split = "dev";
  CHECK_THROWS_AS(bad_split.validate(), std::invalid_argument);
}
