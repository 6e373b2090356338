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

#include "speechlm/lm.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

namespace speechlm {

namespace {

std::vector<int> ids_from_json(const nlohmann::json &j, const std::string &key) {
  std::vector<int> out;
  for (const auto &v : j.at(key)) out.push_back(v.get<int>());
  return out;
}

}  // namespace

ChatTemplate ChatTemplate::from_file(const std::string &path) {
  nlohmann::json j = nlohmann::json::parse(read_text_file(path));
  ChatTemplate t;
  t.system_prefix = ids_from_json(j, "system_prefix");
  t.user_prefix = ids_from_json(j, "user_prefix");
  t.assistant_prefix = ids_from_json(j, "assistant_prefix");
  t.eos_id = j.at("eos_id").get<int>();
  return t;
}

void ChatTemplate::save(const std::string &path) const {
  nlohmann::json j;
  j["system_prefix"] = system_prefix;
  j["user_prefix"] = user_prefix;
  j["assistant_prefix"] = assistant_prefix;
  j["eos_id"] = eos_id;
  write_text_file(path, j.dump(2) + "\n");
}

void ChatTemplate::validate(int vocab_size) const {
  auto check = [vocab_size](const std::vector<int> &ids, const char *name) {
    for (int id : ids) {
      if (id < 0 || id >= vocab_size) {
        throw std::invalid_argument(std::string("chat template ") + name +
                                    " holds token id " + std::to_string(id) +
                                    " outside vocabulary of size " +
                                    std::to_string(vocab_size));
      }
    }
  };
  check(system_prefix, "system_prefix");
  check(user_prefix, "user_prefix");
  check(assistant_prefix, "assistant_prefix");
  check({eos_id}, "eos_id");
}

void TrainingSequence::validate() const {
  if (boundary_t < 0 || prompt_embeddings.rows() != boundary_t + 1) {
    throw std::invalid_argument(
        "training sequence has " + std::to_string(prompt_embeddings.rows()) +
        " prompt rows but boundary index " + std::to_string(boundary_t));
  }
  const int response_len = static_cast<int>(response_ids.size());
  if (response_len < 1) {
    throw std::invalid_argument("training sequence has an empty response");
  }
  if (total_T != boundary_t + response_len) {
    throw std::invalid_argument(
        "training sequence length " + std::to_string(total_T) +
        " does not equal boundary " + std::to_string(boundary_t) + " plus " +
        std::to_string(response_len) + " response tokens");
  }
}

void ConnectorLayerSet::validate(int depth) const {
  if (layers.empty()) {
    throw std::invalid_argument("connector layer set is empty");
  }
  int prev = 0;
  for (int layer : layers) {
    if (layer < 1 || layer > depth) {
      throw std::invalid_argument("connector layer " + std::to_string(layer) +
                                  " outside model depth " +
                                  std::to_string(depth));
    }
    if (layer <= prev) {
      throw std::invalid_argument("connector layers must strictly increase");
    }
    prev = layer;
  }
}

ConnectorLayerSet scale_connector_layers(int depth) {
  return scale_connector_layers({1, 6, 12, 18, 24}, 24, depth);
}

ConnectorLayerSet scale_connector_layers(const std::vector<int> &reference,
                                         int reference_depth, int depth) {
  if (reference_depth < 1 || depth < 1) {
    throw std::invalid_argument("model depth must be positive");
  }
  ConnectorLayerSet out;
  for (int layer : reference) {
    const double scaled = static_cast<double>(layer) * depth / reference_depth;
    int mapped = static_cast<int>(std::lround(scaled));
    mapped = std::clamp(mapped, 1, depth);
    if (out.layers.empty() || out.layers.back() != mapped) {
      out.layers.push_back(mapped);
    }
  }
  out.validate(depth);
  return out;
}

Mat LmAdapter::backward_inputs(const LmRawForward &, const Mat &,
                               const std::map<int, Mat> &) const {
  throw std::logic_error("language model adapter \"" + id() +
                         "\" does not expose input gradients");
}

AssembledPrompt assemble_prompt(const std::vector<PromptSegment> &segments,
                                const ChatTemplate &tmpl, const LmAdapter &lm) {
  const int dim = lm.model_dim();
  std::vector<Vec> rows;
  auto append_ids = [&](const std::vector<int> &ids) {
    for (int id : ids) rows.push_back(lm.embed_token(id));
  };
  append_ids(tmpl.system_prefix);
  append_ids(tmpl.user_prefix);

  AssembledPrompt out;
  for (const auto &seg : segments) {
    AssembledPrompt::Span span;
    span.kind = seg.kind;
    span.begin = static_cast<int>(rows.size());
    if (seg.kind == PromptSegment::Kind::kText) {
      append_ids(seg.text_ids);
      span.length = static_cast<int>(seg.text_ids.size());
    } else {
      if (seg.audio.tokens.cols() != dim) {
        throw std::invalid_argument(
            "audio tokens have dimension " +
            std::to_string(seg.audio.tokens.cols()) +
            " but the language model expects " + std::to_string(dim));
      }
      for (int r = 0; r < seg.audio.tokens.rows(); ++r) {
        rows.push_back(seg.audio.tokens.row(r).transpose());
      }
      span.length = static_cast<int>(seg.audio.tokens.rows());
    }
    out.segment_spans.push_back(span);
  }
  append_ids(tmpl.assistant_prefix);

  if (rows.empty()) {
    throw std::invalid_argument("assembled prompt is empty");
  }
  out.embeddings = Mat(static_cast<int>(rows.size()), dim);
  for (int r = 0; r < out.embeddings.rows(); ++r) {
    out.embeddings.row(r) = rows[static_cast<size_t>(r)].transpose();
  }
  out.boundary_t = static_cast<int>(rows.size()) - 1;
  return out;
}

LMForwardOutput forward_teacher_forced(const Mat &prompt_embeddings,
                                       int boundary_t,
                                       const std::vector<int> &response_ids,
                                       const ConnectorLayerSet &layers,
                                       const LmAdapter &lm, bool need_cache) {
  TrainingSequence seq;
  seq.prompt_embeddings = prompt_embeddings;
  seq.response_ids = response_ids;
  seq.boundary_t = boundary_t;
  seq.total_T = boundary_t + static_cast<int>(response_ids.size());
  seq.validate();
  if (!layers.layers.empty()) layers.validate(lm.depth());

  const int R = static_cast<int>(response_ids.size());
  const int total_rows = boundary_t + 1 + R;
  Mat input(total_rows, lm.model_dim());
  input.topRows(boundary_t + 1) = prompt_embeddings;
  for (int i = 0; i < R; ++i) {
    input.row(boundary_t + 1 + i) =
        lm.embed_token(response_ids[static_cast<size_t>(i)]).transpose();
  }

  LmRawForward raw = lm.forward(input, layers.layers, need_cache);
  if (raw.logits.rows() != total_rows) {
    throw std::logic_error("language model returned " +
                           std::to_string(raw.logits.rows()) +
                           " logit rows for " + std::to_string(total_rows) +
                           " input rows");
  }

  LMForwardOutput out;
  out.boundary_t = boundary_t;
  // Row t predicts the token at position t+1, so the response tokens at
  // positions t+1..T are predicted by logit rows t..T-1.
  out.response_logits = raw.logits.middleRows(boundary_t, R);
  for (int layer : layers.layers) {
    const Mat &tap = raw.taps.at(layer);
    out.hidden_states[layer] = tap.middleRows(boundary_t + 1, R);
  }
  out.raw = std::move(raw);
  return out;
}

int argmax_lowest(const Eigen::Ref<const Eigen::RowVectorXd> &row) {
  int best = 0;
  for (int j = 1; j < row.size(); ++j) {
    if (row(j) > row(best)) best = j;
  }
  return best;
}

std::vector<int> generate_greedy(const Mat &prompt_embeddings, const LmAdapter &lm,
                                 int eos_id, int max_new_tokens) {
  if (prompt_embeddings.rows() < 1) {
    throw std::invalid_argument("generation requires a non-empty prompt");
  }
  std::vector<int> out;
  Mat input = prompt_embeddings;
  for (int step = 0; step < max_new_tokens; ++step) {
    LmRawForward raw = lm.forward(input, {}, false);
    const int next = argmax_lowest(raw.logits.row(raw.logits.rows() - 1));
    if (next == eos_id) break;
    out.push_back(next);
    input.conservativeResize(input.rows() + 1, Eigen::NoChange);
    input.row(input.rows() - 1) = lm.embed_token(next).transpose();
  }
  return out;
}

}  // namespace speechlm
