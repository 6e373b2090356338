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

#include <vector>

#include "speechlm/lm.hpp"
#include "speechlm/util.hpp"
#include "support/test_lms.hpp"

using namespace speechlm;
using speechlm::testing::ScriptedLm;
using speechlm::testing::UniformLm;

namespace {

ChatTemplate simple_template() {
  ChatTemplate tmpl;
  tmpl.system_prefix = {0, 1};
  tmpl.user_prefix = {2};
  tmpl.assistant_prefix = {3};
  tmpl.eos_id = 5;
  return tmpl;
}

AudioTokenSequence audio_rows(int count, int dim, double fill) {
  AudioTokenSequence seq;
  seq.tokens = Mat::Constant(count, dim, fill);
  seq.token_rate = 12.5;
  return seq;
}

}  // namespace

TEST_CASE("the reference connector pattern survives at its own depth") {
  const ConnectorLayerSet set = scale_connector_layers(24);
  CHECK(set.layers == std::vector<int>{1, 6, 12, 18, 24});
}

TEST_CASE("connector layers rescale and deduplicate for shallow models") {
  CHECK(scale_connector_layers(4).layers == std::vector<int>{1, 2, 3, 4});
  CHECK(scale_connector_layers(12).layers == std::vector<int>{1, 3, 6, 9, 12});
  CHECK(scale_connector_layers(2).layers == std::vector<int>{1, 2});
  CHECK(scale_connector_layers(1).layers == std::vector<int>{1});
  CHECK(scale_connector_layers(48).layers ==
        std::vector<int>{2, 12, 24, 36, 48});
}

TEST_CASE("connector layer sets validate their range") {
  ConnectorLayerSet bad;
  bad.layers = {0, 2};
  CHECK_THROWS_AS(bad.validate(4), std::invalid_argument);
  bad.layers = {1, 5};
  CHECK_THROWS_AS(bad.validate(4), std::invalid_argument);
  bad.layers = {2, 2};
  CHECK_THROWS_AS(bad.validate(4), std::invalid_argument);
  bad.layers = {};
  CHECK_THROWS_AS(bad.validate(4), std::invalid_argument);
}

TEST_CASE("prompt assembly lays out template, text, and audio in order") {
  UniformLm lm(8, 4);
  const ChatTemplate tmpl = simple_template();
  const std::vector<PromptSegment> segments = {
      PromptSegment::text({4, 6}), PromptSegment::audio_tokens(audio_rows(3, 4, 0.5))};

  const AssembledPrompt prompt = assemble_prompt(segments, tmpl, lm);
  // Rows: system (2) + user (1) + text (2) + audio (3) + assistant (1) = 9.
  REQUIRE(prompt.embeddings.rows() == 9);
  CHECK(prompt.boundary_t == 8);
  REQUIRE(prompt.segment_spans.size() == 2);
  CHECK(prompt.segment_spans[0].kind == PromptSegment::Kind::kText);
  CHECK(prompt.segment_spans[0].begin == 3);
  CHECK(prompt.segment_spans[0].length == 2);
  CHECK(prompt.segment_spans[1].kind == PromptSegment::Kind::kAudio);
  CHECK(prompt.segment_spans[1].begin == 5);
  CHECK(prompt.segment_spans[1].length == 3);

  CHECK((prompt.embeddings.row(0).transpose() - lm.embed_token(0))
            .cwiseAbs()
            .maxCoeff() == 0.0);
  CHECK((prompt.embeddings.row(3).transpose() - lm.embed_token(4))
            .cwiseAbs()
            .maxCoeff() == 0.0);
  CHECK((prompt.embeddings.middleRows(5, 3).array() == 0.5).all());
  CHECK((prompt.embeddings.row(8).transpose() - lm.embed_token(3))
            .cwiseAbs()
            .maxCoeff() == 0.0);
}

TEST_CASE("audio rows with the wrong width are rejected") {
  UniformLm lm(8, 4);
  const std::vector<PromptSegment> segments = {
      PromptSegment::audio_tokens(audio_rows(2, 3, 0.1))};
  CHECK_THROWS_AS(assemble_prompt(segments, simple_template(), lm),
                  std::invalid_argument);
}

TEST_CASE("teacher forcing slices response logits and hidden rows") {
  UniformLm lm(8, 4);
  const ChatTemplate tmpl = simple_template();
  const AssembledPrompt prompt =
      assemble_prompt({PromptSegment::text({4, 6, 7})}, tmpl, lm);
  const int t = prompt.boundary_t;
  REQUIRE(t == 6);

  const std::vector<int> response = {7, 6, 5};
  ConnectorLayerSet layers;
  layers.layers = {1, 2};
  const LMForwardOutput out =
      forward_teacher_forced(prompt.embeddings, t, response, layers, lm);

  CHECK(out.boundary_t == t);
  CHECK(out.response_logits.rows() == 3);
  CHECK(out.response_logits.cols() == 8);
  CHECK(out.response_logits.cwiseAbs().maxCoeff() == 0.0);

  // UniformLm taps echo the input grid, so hidden rows t+1..T must be the
  // embeddings of the response tokens.
  REQUIRE(out.hidden_states.count(1) == 1);
  const Mat &hidden = out.hidden_states.at(1);
  REQUIRE(hidden.rows() == 3);
  for (int i = 0; i < 3; ++i) {
    CHECK((hidden.row(i).transpose() - lm.embed_token(response[static_cast<size_t>(i)]))
              .cwiseAbs()
              .maxCoeff() == 0.0);
  }
}

TEST_CASE("an empty connector set skips hidden-state collection") {
  UniformLm lm(8, 4);
  const AssembledPrompt prompt =
      assemble_prompt({PromptSegment::text({4})}, simple_template(), lm);
  const LMForwardOutput out = forward_teacher_forced(
      prompt.embeddings, prompt.boundary_t, {5}, ConnectorLayerSet{}, lm);
  CHECK(out.hidden_states.empty());
  CHECK(out.response_logits.rows() == 1);
}

TEST_CASE("teacher forcing rejects an empty response") {
  UniformLm lm(8, 4);
  const AssembledPrompt prompt =
      assemble_prompt({PromptSegment::text({4})}, simple_template(), lm);
  CHECK_THROWS_AS(forward_teacher_forced(prompt.embeddings, prompt.boundary_t,
                                         {}, ConnectorLayerSet{}, lm),
                  std::invalid_argument);
}

TEST_CASE("greedy generation follows the script and stops at eos") {
  // Prompt occupies rows 0..3, so generation reads script positions 3, 4, ...
  const int eos = 1;
  ScriptedLm lm(8, 4, {0, 0, 0, 6, 7, 2, eos}, eos);
  Mat prompt = Mat::Zero(4, 4);
  const std::vector<int> out = generate_greedy(prompt, lm, eos, 10);
  CHECK(out == std::vector<int>{6, 7, 2});
}

TEST_CASE("greedy generation honors the token budget") {
  const int eos = 1;
  ScriptedLm lm(8, 4, {2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2}, eos);
  Mat prompt = Mat::Zero(2, 4);
  CHECK(generate_greedy(prompt, lm, eos, 3).size() == 3);
  CHECK(generate_greedy(prompt, lm, eos, 0).empty());
}

TEST_CASE("ties break toward the lowest token id") {
  Eigen::RowVectorXd row(4);
  row << 0.5, 0.5, 0.5, 0.5;
  CHECK(argmax_lowest(row) == 0);
  row << 0.1, 0.9, 0.9, 0.2;
  CHECK(argmax_lowest(row) == 1);

  // Uniform logits everywhere: the first generated token is the lowest id.
  UniformLm lm(8, 4);
  const std::vector<int> out = generate_greedy(Mat::Zero(2, 4), lm, 0, 5);
  CHECK(out.empty());
}

TEST_CASE("training sequences validate their geometry") {
  TrainingSequence seq;
  seq.prompt_embeddings = Mat::Zero(3, 4);
  seq.boundary_t = 2;
  seq.response_ids = {1, 2};
  seq.total_T = 4;
  CHECK_NOTHROW(seq.validate());

  seq.total_T = 5;
  CHECK_THROWS_AS(seq.validate(), std::invalid_argument);
}

TEST_CASE("chat templates round-trip through their JSON file") {
  testing::TempDir tmp("template");
  const ChatTemplate tmpl = simple_template();
  const std::string path = tmp.str("template.json");
  tmpl.save(path);
  const ChatTemplate loaded = ChatTemplate::from_file(path);
  CHECK(loaded.system_prefix == tmpl.system_prefix);
  CHECK(loaded.user_prefix == tmpl.user_prefix);
  CHECK(loaded.assistant_prefix == tmpl.assistant_prefix);
  CHECK(loaded.eos_id == tmpl.eos_id);

  CHECK_NOTHROW(loaded.validate(8));
  CHECK_THROWS_AS(loaded.validate(4), std::invalid_argument);
}
