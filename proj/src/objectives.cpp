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

#include "speechlm/objectives.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace speechlm {

Mat softmax_rows(const Mat &logits) {
  Mat out(logits.rows(), logits.cols());
  for (int i = 0; i < logits.rows(); ++i) {
    const double m = logits.row(i).maxCoeff();
    Eigen::ArrayXd e = (logits.row(i).transpose().array() - m).exp();
    out.row(i) = (e / e.sum()).matrix().transpose();
  }
  return out;
}

Mat log_softmax_rows(const Mat &logits) {
  Mat out(logits.rows(), logits.cols());
  for (int i = 0; i < logits.rows(); ++i) {
    const double m = logits.row(i).maxCoeff();
    Eigen::ArrayXd shifted = logits.row(i).transpose().array() - m;
    const double lse = std::log(shifted.exp().sum());
    out.row(i) = (shifted - lse).matrix().transpose();
  }
  return out;
}

double softmax_entropy_sum(const Mat &logits) {
  const Mat log_p = log_softmax_rows(logits);
  double h = 0.0;
  for (int i = 0; i < logits.rows(); ++i) {
    h -= (log_p.row(i).array().exp() * log_p.row(i).array()).sum();
  }
  return h;
}

NtpLoss ntp_loss(const Mat &logits, const std::vector<int> &targets) {
  if (static_cast<int>(targets.size()) != logits.rows()) {
    throw std::invalid_argument(
        "next-token loss received " + std::to_string(logits.rows()) +
        " logit rows for " + std::to_string(targets.size()) + " targets");
  }
  NtpLoss out;
  out.count = static_cast<int>(targets.size());
  const Mat log_p = log_softmax_rows(logits);
  out.d_logits = log_p.array().exp();
  for (int i = 0; i < logits.rows(); ++i) {
    const int t = targets[static_cast<size_t>(i)];
    if (t < 0 || t >= logits.cols()) {
      throw std::invalid_argument("target id " + std::to_string(t) +
                                  " outside vocabulary of size " +
                                  std::to_string(logits.cols()));
    }
    out.sum -= log_p(i, t);
    out.d_logits(i, t) -= 1.0;
  }
  return out;
}

LdLoss logit_distillation_loss(const Mat &student_logits,
                               const Mat &teacher_logits) {
  if (student_logits.rows() != teacher_logits.rows() ||
      student_logits.cols() != teacher_logits.cols()) {
    throw std::invalid_argument("distillation logit grids differ in shape");
  }
  LdLoss out;
  const Mat teacher_p = softmax_rows(teacher_logits);
  const Mat student_log_p = log_softmax_rows(student_logits);
  out.sum = -(teacher_p.array() * student_log_p.array()).sum();
  out.d_student_logits = student_log_p.array().exp().matrix() - teacher_p;
  return out;
}

FdLoss feature_distillation_loss(const std::map<int, Mat> &student_hidden,
                                 const std::map<int, Mat> &teacher_hidden) {
  if (student_hidden.size() != teacher_hidden.size()) {
    throw std::invalid_argument(
        "feature distillation layer sets differ in size");
  }
  FdLoss out;
  for (const auto &[layer, student] : student_hidden) {
    auto it = teacher_hidden.find(layer);
    if (it == teacher_hidden.end()) {
      throw std::invalid_argument("teacher hidden states missing layer " +
                                  std::to_string(layer));
    }
    const Mat &teacher = it->second;
    if (student.rows() != teacher.rows() || student.cols() != teacher.cols()) {
      throw std::invalid_argument("hidden state shapes differ at layer " +
                                  std::to_string(layer));
    }
    const double n = static_cast<double>(student.size());
    const Mat diff = student - teacher;
    out.sum += diff.array().square().sum() / n;
    out.d_student_hidden[layer] = (2.0 / n) * diff;
  }
  return out;
}

void LossWeights::validate() const {
  for (double w : {ntp, ld, fd}) {
    if (!std::isfinite(w) || w < 0.0) {
      throw std::invalid_argument("loss weights must be finite and >= 0");
    }
  }
}

double total_loss(double ntp, double ld, double fd, const LossWeights &w) {
  return w.ntp * ntp + w.ld * ld + w.fd * fd;
}

Mat scatter_rows(const Mat &block, int begin, int total_rows) {
  if (begin < 0 || begin + block.rows() > total_rows) {
    throw std::invalid_argument(
        "row block [" + std::to_string(begin) + ", " +
        std::to_string(begin + block.rows()) + ") does not fit in " +
        std::to_string(total_rows) + " rows");
  }
  Mat grid = Mat::Zero(total_rows, block.cols());
  grid.middleRows(begin, block.rows()) = block;
  return grid;
}

}  // namespace speechlm
