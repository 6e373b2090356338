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

#include "speechlm/tokenizer.hpp"

#include <cctype>
#include <sstream>
#include <stdexcept>

#include "speechlm/util.hpp"

namespace speechlm {

std::string to_lower(const std::string &s) {
  std::string out = s;
  for (char &c : out) {
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

std::vector<std::string> split_whitespace(const std::string &s) {
  std::vector<std::string> out;
  std::istringstream iss(s);
  std::string w;
  while (iss >> w) {
    out.push_back(w);
  }
  return out;
}

WordTokenizer::WordTokenizer(std::vector<std::string> vocab)
    : id_to_token_(std::move(vocab)) {
  for (size_t i = 0; i < id_to_token_.size(); ++i) {
    const auto &tok = id_to_token_[i];
    if (tok.empty()) {
      throw std::invalid_argument("tokenizer vocabulary contains empty token");
    }
    if (!token_to_id_.emplace(tok, static_cast<int>(i)).second) {
      throw std::invalid_argument("duplicate token in vocabulary: " + tok);
    }
  }
}

WordTokenizer WordTokenizer::from_file(const std::string &path) {
  const std::string content = read_text_file(path);
  std::vector<std::string> vocab;
  std::istringstream iss(content);
  std::string line;
  while (std::getline(iss, line)) {
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    if (!line.empty()) {
      vocab.push_back(line);
    }
  }
  if (vocab.empty()) {
    throw std::runtime_error("empty tokenizer vocabulary file: " + path);
  }
  return WordTokenizer(std::move(vocab));
}

void WordTokenizer::save(const std::string &path) const {
  std::string out;
  for (const auto &tok : id_to_token_) {
    out += tok;
    out += '\n';
  }
  write_text_file(path, out);
}

std::vector<int> WordTokenizer::tokenize(const std::string &text) const {
  std::vector<int> ids;
  for (const auto &word : split_whitespace(to_lower(text))) {
    auto it = token_to_id_.find(word);
    if (it == token_to_id_.end()) {
      throw std::invalid_argument("tokenization failure: unknown word \"" + word +
                                  "\" in text \"" + text + "\"");
    }
    ids.push_back(it->second);
  }
  return ids;
}

std::string WordTokenizer::detokenize(const std::vector<int> &ids) const {
  std::string out;
  for (size_t i = 0; i < ids.size(); ++i) {
    if (i > 0) {
      out += ' ';
    }
    out += token(ids[i]);
  }
  return out;
}

const std::string &WordTokenizer::token(int id) const {
  if (id < 0 || id >= size()) {
    throw std::out_of_range("token id " + std::to_string(id) +
                            " outside vocabulary of size " + std::to_string(size()));
  }
  return id_to_token_[static_cast<size_t>(id)];
}

int WordTokenizer::id_of(const std::string &token) const {
  auto it = token_to_id_.find(token);
  if (it == token_to_id_.end()) {
    throw std::invalid_argument("token not in vocabulary: " + token);
  }
  return it->second;
}

}  // namespace speechlm
