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

#include "speechlm/ctc.hpp"
#include "speechlm/encoder.hpp"
#include "speechlm/util.hpp"

using namespace speechlm;

namespace {

CtcLabelPath path_of(std::vector<int> labels) {
  CtcLabelPath path;
  path.labels = std::move(labels);
  path.blank_id = 0;
  path.frame_rate = 50.0;
  return path;
}

Mat ramp_frames(int n) {
  Mat m(n, 1);
  for (int i = 0; i < n; ++i) m(i, 0) = i + 1;
  return m;
}

}  // namespace

TEST_CASE("greedy collapse merges repeats then removes blanks") {
  CHECK(ctc_greedy_collapse(path_of({0, 2, 2, 0, 2, 3, 3})) ==
        std::vector<int>{2, 2, 3});
  CHECK(ctc_greedy_collapse(path_of({0, 0, 0})) == std::vector<int>{});
  CHECK(ctc_greedy_collapse(path_of({5, 5, 5})) == std::vector<int>{5});
  CHECK(ctc_greedy_collapse(path_of({})) == std::vector<int>{});
}

TEST_CASE("word starts fall on the first frame of each emission run") {
  const WordBoundarySet set =
      word_start_indices(path_of({0, 2, 2, 0, 5, 5}), kNoDelimiter);
  CHECK(set.start_indices == std::vector<int>{1, 4});
}

TEST_CASE("a delimiter label separates words instead of starting one") {
  // Labels: blank, a, a, delimiter, blank, b. Words start at frames 1 and 5.
  const WordBoundarySet set =
      word_start_indices(path_of({0, 2, 2, 7, 0, 3}), 7);
  CHECK(set.start_indices == std::vector<int>{1, 5});
}

TEST_CASE("repeated words split by a blank start twice") {
  const WordBoundarySet set =
      word_start_indices(path_of({2, 2, 0, 2, 2}), kNoDelimiter);
  CHECK(set.start_indices == std::vector<int>{0, 3});
}

TEST_CASE("boundary sets validate ordering and range") {
  WordBoundarySet ok;
  ok.start_indices = {0, 4, 9};
  CHECK_NOTHROW(ok.validate(12));

  WordBoundarySet unsorted;
  unsorted.start_indices = {4, 4};
  CHECK_THROWS_AS(unsorted.validate(12), std::invalid_argument);

  WordBoundarySet out_of_range;
  out_of_range.start_indices = {4, 12};
  CHECK_THROWS_AS(out_of_range.validate(12), std::invalid_argument);
}

TEST_CASE("segment pooling averages inside each word span") {
  WordBoundarySet set;
  set.start_indices = {0, 8};
  const PoolPlan plan = make_ctc_plan(12, set, 8, 4);
  REQUIRE(plan.size() == 2);
  CHECK(plan[0].begin == 0);
  CHECK(plan[0].count == 8);
  CHECK(plan[1].begin == 8);
  CHECK(plan[1].count == 4);

  const Mat pooled = apply_pool_plan(ramp_frames(12), plan);
  CHECK(pooled(0, 0) == doctest::Approx(4.5).epsilon(1e-12));
  CHECK(pooled(1, 0) == doctest::Approx(10.5).epsilon(1e-12));
}

TEST_CASE("frames before the first word boundary are not pooled") {
  WordBoundarySet set;
  set.start_indices = {3};
  const PoolPlan plan = make_ctc_plan(12, set, 8, 4);
  for (const PoolWindow &w : plan) CHECK(w.begin >= 3);
  REQUIRE(plan.size() == 1);
  CHECK(plan[0].begin == 3);
  CHECK(plan[0].count == 8);
}

TEST_CASE("an empty boundary set falls back to uniform pooling") {
  const PoolPlan uniform = make_uniform_plan(23, 8, 4);
  const PoolPlan fallback = make_ctc_plan(23, WordBoundarySet{}, 8, 4);
  REQUIRE(uniform.size() == fallback.size());
  for (size_t i = 0; i < uniform.size(); ++i) {
    CHECK(uniform[i].begin == fallback[i].begin);
    CHECK(uniform[i].count == fallback[i].count);
  }
}

TEST_CASE("boundary zero alone reproduces uniform pooling bit-exactly") {
  Rng rng(33);
  FrameSequence frames;
  frames.frames = rng.gaussian_matrix(37, 4, 1.0);
  frames.frame_rate = 50.0;

  WordBoundarySet zero;
  zero.start_indices = {0};
  const FrameSequence a = pool_uniform(frames, 8, 4);
  const FrameSequence b = pool_ctc_aligned(frames, zero, 8, 4);
  REQUIRE(a.count() == b.count());
  CHECK((a.frames.array() == b.frames.array()).all());
}

TEST_CASE("segmented pooling equals per-segment uniform pooling") {
  Rng rng(41);
  const int n = 40;
  FrameSequence frames;
  frames.frames = rng.gaussian_matrix(n, 3, 1.0);
  frames.frame_rate = 50.0;

  WordBoundarySet set;
  set.start_indices = {2, 9, 30};
  const FrameSequence pooled = pool_ctc_aligned(frames, set, 8, 4);

  Mat expected(0, 3);
  const std::vector<int> edges = {2, 9, 30, n};
  for (size_t s = 0; s + 1 < edges.size(); ++s) {
    const int begin = edges[s];
    const int len = edges[s + 1] - begin;
    FrameSequence segment;
    segment.frames = frames.frames.middleRows(begin, len);
    segment.frame_rate = 50.0;
    const FrameSequence part = pool_uniform(segment, 8, 4);
    const Eigen::Index old_rows = expected.rows();
    expected.conservativeResize(old_rows + part.frames.rows(), 3);
    expected.middleRows(old_rows, part.frames.rows()) = part.frames;
  }
  REQUIRE(pooled.frames.rows() == expected.rows());
  // Segment copies can start at different memory alignments than blocks of
  // the full matrix, so the vectorized mean may round differently in the
  // last bit. Equality is therefore checked to 1e-12 here, while the shared
  // plan in the boundary-{0} case above stays bit-exact.
  CHECK((pooled.frames - expected).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("fixed period boundaries tile the frame axis") {
  FixedPeriodBoundaries provider(4);
  WaveformInput wave;
  wave.samples.assign(3200, 0.0);
  const WordBoundarySet set = provider.boundaries(wave, 10);
  CHECK(set.start_indices == std::vector<int>{0, 4, 8});
}
