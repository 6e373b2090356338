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

#include "speechlm/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <filesystem>
#include <map>
#include <stdexcept>

#include "speechlm/util.hpp"

namespace speechlm {

std::vector<std::string> eval_tokenize(const std::string &text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char c : text) {
    const auto uc = static_cast<unsigned char>(c);
    if (std::isalnum(uc)) {
      current.push_back(static_cast<char>(std::tolower(uc)));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

namespace {

std::map<std::string, int> ngram_counts(const std::vector<std::string> &tokens,
                                        int n) {
  std::map<std::string, int> counts;
  if (static_cast<int>(tokens.size()) < n) return counts;
  for (size_t i = 0; i + static_cast<size_t>(n) <= tokens.size(); ++i) {
    std::string key;
    for (int k = 0; k < n; ++k) {
      if (k > 0) key.push_back(' ');
      key += tokens[i + static_cast<size_t>(k)];
    }
    counts[key] += 1;
  }
  return counts;
}

double f1_percent(double matches, double cand_total, double ref_total) {
  if (cand_total <= 0.0 || ref_total <= 0.0) return 0.0;
  const double p = matches / cand_total;
  const double r = matches / ref_total;
  if (p + r <= 0.0) return 0.0;
  return 100.0 * 2.0 * p * r / (p + r);
}

size_t lcs_length(const std::vector<std::string> &a,
                  const std::vector<std::string> &b) {
  if (a.empty() || b.empty()) return 0;
  std::vector<size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (size_t i = 1; i <= a.size(); ++i) {
    for (size_t j = 1; j <= b.size(); ++j) {
      cur[j] = (a[i - 1] == b[j - 1]) ? prev[j - 1] + 1
                                      : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

}  // namespace

double rouge_n_f1(const std::string &candidate, const std::string &reference,
                  int n) {
  if (n != 1 && n != 2) {
    throw std::invalid_argument("n-gram order " + std::to_string(n) +
                                " unsupported: use 1 or 2");
  }
  const std::vector<std::string> ref_tokens = eval_tokenize(reference);
  if (ref_tokens.empty()) {
    SL_WARN("empty reference text scored against \"%s\"", candidate.c_str());
    return 0.0;
  }
  const std::vector<std::string> cand_tokens = eval_tokenize(candidate);
  const auto cand_counts = ngram_counts(cand_tokens, n);
  const auto ref_counts = ngram_counts(ref_tokens, n);
  double matches = 0.0, cand_total = 0.0, ref_total = 0.0;
  for (const auto &[gram, count] : cand_counts) {
    cand_total += count;
    auto it = ref_counts.find(gram);
    if (it != ref_counts.end()) matches += std::min(count, it->second);
  }
  for (const auto &[gram, count] : ref_counts) ref_total += count;
  return f1_percent(matches, cand_total, ref_total);
}

double rouge_l_f1(const std::string &candidate, const std::string &reference) {
  const std::vector<std::string> ref_tokens = eval_tokenize(reference);
  if (ref_tokens.empty()) {
    SL_WARN("empty reference text scored against \"%s\"", candidate.c_str());
    return 0.0;
  }
  const std::vector<std::string> cand_tokens = eval_tokenize(candidate);
  const double lcs = static_cast<double>(lcs_length(cand_tokens, ref_tokens));
  return f1_percent(lcs, static_cast<double>(cand_tokens.size()),
                    static_cast<double>(ref_tokens.size()));
}

RougeMetric::RougeMetric(const std::string &kind) : kind_(kind) {
  if (kind != "rouge1" && kind != "rouge2" && kind != "rougeL") {
    throw std::invalid_argument("unknown rouge variant \"" + kind + "\"");
  }
}

double RougeMetric::score(const std::string &candidate,
                          const std::string &reference) const {
  if (kind_ == "rouge1") return rouge_n_f1(candidate, reference, 1);
  if (kind_ == "rouge2") return rouge_n_f1(candidate, reference, 2);
  return rouge_l_f1(candidate, reference);
}

ExternalCommandMetric::ExternalCommandMetric(const std::string &name,
                                             const std::string &command)
    : name_(name), command_(command) {
  if (command.empty()) {
    throw std::invalid_argument("external metric \"" + name +
                                "\" has an empty command");
  }
}

double ExternalCommandMetric::score(const std::string &candidate,
                                    const std::string &reference) const {
  static int sequence = 0;
  const auto dir = std::filesystem::temp_directory_path();
  const std::string tag = name_ + "_" + std::to_string(sequence++);
  const std::string cand_path = (dir / ("speechlm_cand_" + tag + ".txt")).string();
  const std::string ref_path = (dir / ("speechlm_ref_" + tag + ".txt")).string();
  write_text_file(cand_path, candidate + "\n");
  write_text_file(ref_path, reference + "\n");
  const std::string cmd = command_ + " " + cand_path + " " + ref_path;
  FILE *pipe = popen(cmd.c_str(), "r");
  if (pipe == nullptr) {
    throw std::runtime_error("failed to launch metric command: " + cmd);
  }
  std::string output;
  char buf[256];
  while (fgets(buf, sizeof(buf), pipe) != nullptr) output += buf;
  const int status = pclose(pipe);
  std::filesystem::remove(cand_path);
  std::filesystem::remove(ref_path);
  if (status != 0) {
    throw std::runtime_error("metric command exited with status " +
                             std::to_string(status) + ": " + cmd);
  }
  const auto last_break = output.find_last_not_of(" \t\r\n");
  if (last_break == std::string::npos) {
    throw std::runtime_error("metric command produced no output: " + cmd);
  }
  output.erase(last_break + 1);
  const auto line_start = output.find_last_of('\n');
  const std::string last_line =
      line_start == std::string::npos ? output : output.substr(line_start + 1);
  try {
    return std::stod(last_line);
  } catch (const std::exception &) {
    throw std::runtime_error("metric command output \"" + last_line +
                             "\" is not a number: " + cmd);
  }
}

std::vector<std::shared_ptr<MetricAdapter>> make_metrics(
    const std::vector<std::string> &names,
    const std::vector<std::pair<std::string, std::string>> &external_commands) {
  std::vector<std::shared_ptr<MetricAdapter>> out;
  for (const std::string &name : names) {
    if (name == "rouge1" || name == "rouge2" || name == "rougeL") {
      out.push_back(std::make_shared<RougeMetric>(name));
      continue;
    }
    bool found = false;
    for (const auto &[ext_name, command] : external_commands) {
      if (ext_name == name) {
        out.push_back(std::make_shared<ExternalCommandMetric>(name, command));
        found = true;
        break;
      }
    }
    if (!found) {
      throw std::invalid_argument("unknown metric \"" + name +
                                  "\": builtin choices are rouge1, rouge2, "
                                  "rougeL; external metrics need a command");
    }
  }
  return out;
}

}  // namespace speechlm
