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

#include <map>
#include <vector>

#include "speechlm/util.hpp"

namespace speechlm {

Mat softmax_rows(const Mat &logits);
Mat log_softmax_rows(const Mat &logits);

// Sum over rows of the softmax entropy -sum_j p_j log p_j.
double softmax_entropy_sum(const Mat &logits);

// Next-token prediction: negative log-likelihood of the target ids, summed
// over positions. Row i of the logits must predict targets[i].
struct NtpLoss {
  double sum = 0.0;
  int count = 0;
  Mat d_logits;
  double mean() const { return count > 0 ? sum / count : 0.0; }
};
NtpLoss ntp_loss(const Mat &logits, const std::vector<int> &targets);

// Logit distillation: soft cross-entropy from the teacher distribution to
// the student distribution, -sum_i sum_j p_teacher(i,j) log p_student(i,j),
// summed over positions. Only the student side receives gradients.
struct LdLoss {
  double sum = 0.0;
  Mat d_student_logits;
};
LdLoss logit_distillation_loss(const Mat &student_logits,
                               const Mat &teacher_logits);

// Feature distillation: mean squared error between student and teacher
// hidden states per connector layer (mean over positions and dimensions),
// summed over layers. Only the student side receives gradients.
struct FdLoss {
  double sum = 0.0;
  std::map<int, Mat> d_student_hidden;
};
FdLoss feature_distillation_loss(const std::map<int, Mat> &student_hidden,
                                 const std::map<int, Mat> &teacher_hidden);

struct LossWeights {
  double ntp = 0.5;
  double ld = 0.5;
  double fd = 1.0;

  bool needs_teacher() const { return ld != 0.0 || fd != 0.0; }
  void validate() const;
};

double total_loss(double ntp, double ld, double fd, const LossWeights &w);

struct LossBreakdown {
  double ntp_sum = 0.0;
  double ld_sum = 0.0;
  double fd_sum = 0.0;
  double total = 0.0;
  int response_len = 0;
  double ntp_mean = 0.0;
};

// Places a gradient block into an otherwise zero grid with total_rows rows.
// Rows outside [begin, begin + block.rows()) stay exactly zero, which pins
// the loss contribution of prompt positions at nothing.
Mat scatter_rows(const Mat &block, int begin, int total_rows);

}  // namespace speechlm
