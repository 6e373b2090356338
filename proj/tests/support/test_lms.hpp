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

#include <unistd.h>

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "speechlm/lm.hpp"
#include "speechlm/tokenizer.hpp"
#include "speechlm/util.hpp"

namespace speechlm {
namespace testing {

// Zero logits at every position, so the next-token distribution is uniform
// over the vocabulary. Taps return the input rows unchanged, and the
// embedding of token k is the one-hot row e_k so argmax recovers the id.
class UniformLm : public LmAdapter {
 public:
  UniformLm(int vocab, int dim, int depth = 2)
      : vocab_(vocab), dim_(dim), depth_(depth) {}

  std::string id() const override { return "uniform_test"; }
  int vocab_size() const override { return vocab_; }
  int model_dim() const override { return dim_; }
  int depth() const override { return depth_; }

  Vec embed_token(int token_id) const override {
    Vec v = Vec::Zero(dim_);
    v(token_id % dim_) = 1.0;
    return v;
  }

  LmRawForward forward(const Mat &input, const std::vector<int> &tap_layers,
                       bool) const override {
    LmRawForward out;
    out.logits = Mat::Zero(input.rows(), vocab_);
    for (int layer : tap_layers) out.taps[layer] = input;
    return out;
  }

  std::uint64_t parameter_checksum() const override { return 0; }

 private:
  int vocab_;
  int dim_;
  int depth_;
};

// Plays back a fixed token sequence: the logits at absolute position p put
// all mass on script[p], and on eos once the script runs out. Greedy
// generation from a prompt of P rows therefore emits script[P-1],
// script[P], ... until eos.
class ScriptedLm : public LmAdapter {
 public:
  ScriptedLm(int vocab, int dim, std::vector<int> script, int eos_id)
      : vocab_(vocab), dim_(dim), script_(std::move(script)), eos_(eos_id) {}

  std::string id() const override { return "scripted_test"; }
  int vocab_size() const override { return vocab_; }
  int model_dim() const override { return dim_; }
  int depth() const override { return 1; }

  Vec embed_token(int token_id) const override {
    Vec v = Vec::Zero(dim_);
    v(token_id % dim_) = 1.0;
    return v;
  }

  LmRawForward forward(const Mat &input, const std::vector<int> &tap_layers,
                       bool) const override {
    LmRawForward out;
    out.logits = Mat::Zero(input.rows(), vocab_);
    for (int p = 0; p < input.rows(); ++p) {
      const int next = p < static_cast<int>(script_.size())
                           ? script_[static_cast<size_t>(p)]
                           : eos_;
      out.logits(p, next) = 10.0;
    }
    for (int layer : tap_layers) out.taps[layer] = input;
    return out;
  }

  std::uint64_t parameter_checksum() const override { return 1; }

 private:
  int vocab_;
  int dim_;
  std::vector<int> script_;
  int eos_;
};

// Always predicts one fixed token, never eos. Replies therefore run to the
// generation cap, which pins cap arithmetic in tests.
class ConstantLm : public LmAdapter {
 public:
  ConstantLm(int vocab, int dim, int token_id)
      : vocab_(vocab), dim_(dim), token_(token_id) {}

  std::string id() const override { return "constant_test"; }
  int vocab_size() const override { return vocab_; }
  int model_dim() const override { return dim_; }
  int depth() const override { return 1; }

  Vec embed_token(int token_id) const override {
    Vec v = Vec::Zero(dim_);
    v(token_id % dim_) = 1.0;
    return v;
  }

  LmRawForward forward(const Mat &input, const std::vector<int> &tap_layers,
                       bool) const override {
    LmRawForward out;
    out.logits = Mat::Zero(input.rows(), vocab_);
    out.logits.col(token_).setConstant(5.0);
    for (int layer : tap_layers) out.taps[layer] = input;
    return out;
  }

  std::uint64_t parameter_checksum() const override { return 2; }

 private:
  int vocab_;
  int dim_;
  int token_;
};

// Unique scratch directory under the system temp root, removed on scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string &tag) {
    dir_ = std::filesystem::temp_directory_path() /
           ("speechlm_test_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(dir_);
    std::filesystem::create_directories(dir_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(dir_, ec);
  }

  std::filesystem::path path() const { return dir_; }
  std::string str(const std::string &leaf = "") const {
    return leaf.empty() ? dir_.string() : (dir_ / leaf).string();
  }

 private:
  std::filesystem::path dir_;
};

}  // namespace testing
}  // namespace speechlm
