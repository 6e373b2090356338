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

#include <Eigen/Dense>

#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

namespace speechlm {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

void log_msg(const char *level, const char *fmt, ...);

#define SL_INFO(...) ::speechlm::log_msg("info", __VA_ARGS__)
#define SL_WARN(...) ::speechlm::log_msg("warn", __VA_ARGS__)
#define SL_ERROR(...) ::speechlm::log_msg("error", __VA_ARGS__)

// Deterministic across platforms (splitmix64 core), unlike the std
// distributions whose output is implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // uniform in [0, 1)
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  int uniform_int(int lo, int hi_inclusive) {
    return lo + static_cast<int>(next_u64() %
                                 static_cast<std::uint64_t>(hi_inclusive - lo + 1));
  }

  double gaussian(double mean = 0.0, double stddev = 1.0);

  Mat gaussian_matrix(int rows, int cols, double stddev);

 private:
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// FNV-1a over raw bytes; used for parameter checksums.
inline std::uint64_t fnv1a(const void *data, size_t n,
                           std::uint64_t h = 0xcbf29ce484222325ULL) {
  const auto *p = static_cast<const unsigned char *>(data);
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t checksum_update(std::uint64_t h, const Mat &m) {
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      double v = m(r, c);
      std::uint64_t bits;
      std::memcpy(&bits, &v, sizeof(bits));
      h = fnv1a(&bits, sizeof(bits), h);
    }
  }
  return h;
}

inline std::uint64_t checksum_update(std::uint64_t h, const Vec &v) {
  return checksum_update(h, Mat(v));
}

std::string read_text_file(const std::string &path);
void write_text_file(const std::string &path, const std::string &content);
bool file_exists(const std::string &path);
std::string hex_u64(std::uint64_t v);

}  // namespace speechlm
