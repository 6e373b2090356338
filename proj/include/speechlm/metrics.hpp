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

#include <memory>
#include <string>
#include <vector>

namespace speechlm {

// Evaluation tokenization: lowercase, then split on runs of characters that
// are not ASCII letters or digits.
std::vector<std::string> eval_tokenize(const std::string &text);

// N-gram overlap F1 with clipped counting, scaled to [0, 100].
double rouge_n_f1(const std::string &candidate, const std::string &reference,
                  int n);

// Longest-common-subsequence F1 over evaluation tokens, scaled to [0, 100].
double rouge_l_f1(const std::string &candidate, const std::string &reference);

// Text-similarity scorer. Builtin scorers are self-contained; external ones
// shell out to a user-supplied command.
class MetricAdapter {
 public:
  virtual ~MetricAdapter() = default;
  virtual std::string name() const = 0;
  virtual bool builtin() const = 0;
  virtual double score(const std::string &candidate,
                       const std::string &reference) const = 0;
};

class RougeMetric : public MetricAdapter {
 public:
  // kind: "rouge1" | "rouge2" | "rougeL"
  explicit RougeMetric(const std::string &kind);
  std::string name() const override { return kind_; }
  bool builtin() const override { return true; }
  double score(const std::string &candidate,
               const std::string &reference) const override;

 private:
  std::string kind_;
};

// Runs `command <candidate-file> <reference-file>` and parses the last line
// of standard output as a real score. Covers scorers with external language
// resources (METEOR, BERTScore and similar).
class ExternalCommandMetric : public MetricAdapter {
 public:
  ExternalCommandMetric(const std::string &name, const std::string &command);
  std::string name() const override { return name_; }
  bool builtin() const override { return false; }
  double score(const std::string &candidate,
               const std::string &reference) const override;

 private:
  std::string name_;
  std::string command_;
};

// Builds the scorer list from names; unknown names must carry a command in
// external_commands or construction fails.
std::vector<std::shared_ptr<MetricAdapter>> make_metrics(
    const std::vector<std::string> &names,
    const std::vector<std::pair<std::string, std::string>> &external_commands);

}  // namespace speechlm
