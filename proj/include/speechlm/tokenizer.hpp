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

#include <string>
#include <unordered_map>
#include <vector>

namespace speechlm {

// Word-level tokenizer over a fixed vocabulary. Input is lowercased and
// split on whitespace; detokenize joins with single spaces, so any token
// sequence round-trips through text exactly. Unknown words are an error,
// not a silent <unk>.
class WordTokenizer {
 public:
  WordTokenizer() = default;
  explicit WordTokenizer(std::vector<std::string> vocab);

  static WordTokenizer from_file(const std::string &path);
  void save(const std::string &path) const;

  std::vector<int> tokenize(const std::string &text) const;
  std::string detokenize(const std::vector<int> &ids) const;

  int size() const { return static_cast<int>(id_to_token_.size()); }
  const std::string &token(int id) const;
  bool contains(const std::string &token) const {
    return token_to_id_.count(token) > 0;
  }
  int id_of(const std::string &token) const;

 private:
  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, int> token_to_id_;
};

std::string to_lower(const std::string &s);
std::vector<std::string> split_whitespace(const std::string &s);

}  // namespace speechlm
