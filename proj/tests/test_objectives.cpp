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
#include <functional>
#include <map>
#include <vector>

#include "speechlm/objectives.hpp"
#include "speechlm/util.hpp"

using namespace speechlm;

namespace {

constexpr double kLn3 = 1.0986122886681098;
constexpr double kLn4 = 1.3862943611198906;

// Numeric d(loss)/d(logits) entry by central differences.
double numeric_grad(const std::function<double(const Mat &)> &loss, Mat logits,
                    Eigen::Index i) {
  const double h = 1e-6;
  const double saved = logits(i);
  logits(i) = saved + h;
  const double up = loss(logits);
  logits(i) = saved - h;
  const double down = loss(logits);
  return (up - down) / (2 * h);
}

}  // namespace

TEST_CASE("softmax rows are shift invariant and normalized") {
  Mat logits(2, 3);
  logits << 1.0, 2.0, 3.0, -5.0, 0.0, 5.0;
  const Mat p = softmax_rows(logits);
  CHECK(p.row(0).sum() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(p.row(1).sum() == doctest::Approx(1.0).epsilon(1e-12));

  const Mat shifted = softmax_rows((logits.array() + 100.0).matrix());
  CHECK((p - shifted).cwiseAbs().maxCoeff() < 1e-12);

  const Mat lp = log_softmax_rows(logits);
  CHECK((lp.array().exp().matrix() - p).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("uniform logits over four classes cost ln 4 per position") {
  const Mat logits = Mat::Zero(2, 4);
  const NtpLoss loss = ntp_loss(logits, {0, 3});
  CHECK(loss.count == 2);
  CHECK(loss.sum == doctest::Approx(2 * kLn4).epsilon(1e-12));
  CHECK(loss.mean() == doctest::Approx(kLn4).epsilon(1e-12));
}

TEST_CASE("two-position two-class next-token loss matches hand computation") {
  // Row 0 logits (0, ln 3): p = (1/4, 3/4); target 1 costs -ln(3/4).
  // Row 1 logits (ln 3, 0): p = (3/4, 1/4); target 1 costs -ln(1/4).
  Mat logits(2, 2);
  logits << 0.0, kLn3, kLn3, 0.0;
  const NtpLoss loss = ntp_loss(logits, {1, 1});
  const double expected = -std::log(0.75) - std::log(0.25);
  CHECK(loss.sum == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("next-token gradient is softmax minus one-hot") {
  const Mat logits = Mat::Zero(1, 4);
  const NtpLoss loss = ntp_loss(logits, {2});
  Mat expected(1, 4);
  expected << 0.25, 0.25, -0.75, 0.25;
  CHECK((loss.d_logits - expected).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("next-token gradient matches finite differences") {
  Rng rng(3);
  const Mat logits = rng.gaussian_matrix(3, 5, 1.0);
  const std::vector<int> targets = {4, 0, 2};
  const NtpLoss loss = ntp_loss(logits, targets);
  auto f = [&](const Mat &l) { return ntp_loss(l, targets).sum; };
  for (Eigen::Index i = 0; i < logits.size(); ++i) {
    CHECK(loss.d_logits(i) ==
          doctest::Approx(numeric_grad(f, logits, i)).epsilon(1e-5));
  }
}

TEST_CASE("target ids outside the vocabulary are rejected") {
  const Mat logits = Mat::Zero(1, 4);
  CHECK_THROWS_AS(ntp_loss(logits, {4}), std::invalid_argument);
  CHECK_THROWS_AS(ntp_loss(logits, {-1}), std::invalid_argument);
}

TEST_CASE("distillation against a fixed two-class teacher is exact") {
  // Teacher (0, 0) -> (1/2, 1/2); student (0, ln 3) -> (1/4, 3/4).
  // Loss = -(1/2) ln(1/4) - (1/2) ln(3/4).
  Mat student(1, 2), teacher(1, 2);
  student << 0.0, kLn3;
  teacher << 0.0, 0.0;
  const LdLoss loss = logit_distillation_loss(student, teacher);
  const double expected = 0.5 * kLn4 + 0.5 * (kLn4 - kLn3);
  CHECK(loss.sum == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("distilling a distribution into itself costs its entropy") {
  Rng rng(9);
  const Mat logits = rng.gaussian_matrix(4, 6, 2.0);
  const LdLoss loss = logit_distillation_loss(logits, logits);
  CHECK(std::abs(loss.sum - softmax_entropy_sum(logits)) < 1e-9);
  CHECK(loss.d_student_logits.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("a one-hot teacher reduces distillation to next-token loss") {
  Rng rng(13);
  const Mat student = rng.gaussian_matrix(2, 4, 1.0);
  Mat teacher = Mat::Zero(2, 4);
  teacher(0, 1) = 1e9;
  teacher(1, 3) = 1e9;
  const LdLoss ld = logit_distillation_loss(student, teacher);
  const NtpLoss ntp = ntp_loss(student, {1, 3});
  CHECK(ld.sum == doctest::Approx(ntp.sum).epsilon(1e-9));
}

TEST_CASE("distillation is invariant to per-row logit shifts") {
  Rng rng(17);
  const Mat student = rng.gaussian_matrix(3, 5, 1.0);
  const Mat teacher = rng.gaussian_matrix(3, 5, 1.0);
  const double base = logit_distillation_loss(student, teacher).sum;
  const double shifted =
      logit_distillation_loss((student.array() + 42.0).matrix(),
                              (teacher.array() - 7.0).matrix())
          .sum;
  CHECK(std::abs(base - shifted) < 1e-9);
}

TEST_CASE("distillation gradient is student minus teacher probabilities") {
  Rng rng(21);
  const Mat student = rng.gaussian_matrix(3, 5, 1.0);
  const Mat teacher = rng.gaussian_matrix(3, 5, 1.0);
  const LdLoss loss = logit_distillation_loss(student, teacher);
  const Mat expected = softmax_rows(student) - softmax_rows(teacher);
  CHECK((loss.d_student_logits - expected).cwiseAbs().maxCoeff() < 1e-12);

  auto f = [&](const Mat &s) {
    return logit_distillation_loss(s, teacher).sum;
  };
  for (Eigen::Index i = 0; i < student.size(); ++i) {
    CHECK(loss.d_student_logits(i) ==
          doctest::Approx(numeric_grad(f, student, i)).epsilon(1e-5));
  }
}

TEST_CASE("feature distillation sums per-layer mean squared errors") {
  std::map<int, Mat> student, teacher;
  student[1] = (Mat(1, 2) << 1.0, -1.0).finished();
  teacher[1] = Mat::Zero(1, 2);
  student[2] = (Mat(1, 2) << 2.0, 0.0).finished();
  teacher[2] = Mat::Zero(1, 2);
  // Layer 1: mean(1, 1) = 1. Layer 2: mean(4, 0) = 2. Total 3.
  const FdLoss loss = feature_distillation_loss(student, teacher);
  CHECK(loss.sum == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("a constant feature offset costs its square") {
  std::map<int, Mat> student, teacher;
  teacher[4] = Mat::Zero(5, 3);
  student[4] = Mat::Constant(5, 3, 0.3);
  const FdLoss loss = feature_distillation_loss(student, teacher);
  CHECK(loss.sum == doctest::Approx(0.09).epsilon(1e-12));
}

TEST_CASE("feature distillation gradient matches finite differences") {
  Rng rng(25);
  std::map<int, Mat> student, teacher;
  student[1] = rng.gaussian_matrix(3, 4, 1.0);
  teacher[1] = rng.gaussian_matrix(3, 4, 1.0);
  student[3] = rng.gaussian_matrix(2, 4, 1.0);
  teacher[3] = rng.gaussian_matrix(2, 4, 1.0);
  const FdLoss loss = feature_distillation_loss(student, teacher);

  for (const auto &[layer, h_student] : student) {
    const Mat expected =
        2.0 * (h_student - teacher.at(layer)) / h_student.size();
    CHECK((loss.d_student_hidden.at(layer) - expected).cwiseAbs().maxCoeff() <
          1e-12);

    auto f = [&, l = layer](const Mat &h) {
      std::map<int, Mat> patched = student;
      patched[l] = h;
      return feature_distillation_loss(patched, teacher).sum;
    };
    for (Eigen::Index i = 0; i < h_student.size(); ++i) {
      CHECK(loss.d_student_hidden.at(layer)(i) ==
            doctest::Approx(numeric_grad(f, h_student, i)).epsilon(1e-5));
    }
  }
}

TEST_CASE("mismatched layer sets are rejected") {
  std::map<int, Mat> student, teacher;
  student[1] = Mat::Zero(2, 2);
  teacher[2] = Mat::Zero(2, 2);
  CHECK_THROWS_AS(feature_distillation_loss(student, teacher),
                  std::invalid_argument);
}

TEST_CASE("total loss is the weighted sum of the three terms") {
  LossWeights w;
  CHECK(total_loss(2.0, 4.0, 8.0, w) ==
        doctest::Approx(0.5 * 2.0 + 0.5 * 4.0 + 1.0 * 8.0).epsilon(1e-12));

  LossWeights ntp_only{1.0, 0.0, 0.0};
  CHECK_FALSE(ntp_only.needs_teacher());
  CHECK(w.needs_teacher());

  LossWeights negative{-0.5, 0.5, 1.0};
  CHECK_THROWS_AS(negative.validate(), std::invalid_argument);
}

TEST_CASE("scatter places a block and keeps every other row exactly zero") {
  Mat block(2, 3);
  block << 1.0, 2.0, 3.0, 4.0, 5.0, 6.0;
  const Mat grid = scatter_rows(block, 4, 8);
  REQUIRE(grid.rows() == 8);
  REQUIRE(grid.cols() == 3);
  for (int r = 0; r < 8; ++r) {
    if (r == 4 || r == 5) continue;
    for (int c = 0; c < 3; ++c) CHECK(grid(r, c) == 0.0);
  }
  CHECK((grid.middleRows(4, 2).array() == block.array()).all());
}
