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

#include "speechlm/toy_lm.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace speechlm {

namespace {

constexpr double kLnEps = 1e-5;
constexpr double kMaskValue = -1e30;

struct BlockCache {
  Mat h_in;
  Mat a_norm;
  Mat q, k, v;
  std::vector<Mat> probs;  // one attention matrix per head
  Mat h_mid;
  Mat b_norm;
  Mat z1;
  Mat gelu;
};

struct ToyLmCacheImpl : LmForwardCache {
  std::vector<BlockCache> blocks;
  Mat f_in;  // input to the final normalization
};

Mat softmax_rows_causal(const Mat &scores) {
  Mat out(scores.rows(), scores.cols());
  for (int i = 0; i < scores.rows(); ++i) {
    const double m = scores.row(i).maxCoeff();
    Eigen::RowVectorXd e = (scores.row(i).array() - m).exp();
    out.row(i) = e / e.sum();
  }
  return out;
}

}  // namespace

void ToyLmConfig::validate() const {
  if (vocab_size < 2) throw std::invalid_argument("vocabulary needs >= 2 tokens");
  if (model_dim < 2 || model_dim % 2 != 0) {
    throw std::invalid_argument("model dimension must be even and >= 2");
  }
  if (depth < 1) throw std::invalid_argument("depth must be >= 1");
  if (n_heads < 1 || model_dim % n_heads != 0) {
    throw std::invalid_argument("head count must divide the model dimension");
  }
  if (mlp_ratio < 1) throw std::invalid_argument("mlp ratio must be >= 1");
  if (max_positions < 1) throw std::invalid_argument("position limit must be >= 1");
  if (eos_id < 0 || eos_id >= vocab_size) {
    throw std::invalid_argument("eos id outside vocabulary");
  }
}

double gelu_erf(double x) {
  return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2));
}

double gelu_erf_grad(double x) {
  constexpr double inv_sqrt_2pi = 0.3989422804014327;
  return 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2)) +
         x * inv_sqrt_2pi * std::exp(-0.5 * x * x);
}

Mat layer_norm(const Mat &x, const Vec &gamma, const Vec &beta) {
  Mat out(x.rows(), x.cols());
  for (int i = 0; i < x.rows(); ++i) {
    const double mu = x.row(i).mean();
    const double var = (x.row(i).array() - mu).square().mean();
    const double inv_sigma = 1.0 / std::sqrt(var + kLnEps);
    out.row(i) = ((x.row(i).array() - mu) * inv_sigma) *
                     gamma.transpose().array() +
                 beta.transpose().array();
  }
  return out;
}

Mat layer_norm_backward(const Mat &x, const Vec &gamma, const Mat &d_out) {
  Mat dx(x.rows(), x.cols());
  for (int i = 0; i < x.rows(); ++i) {
    const double mu = x.row(i).mean();
    const double var = (x.row(i).array() - mu).square().mean();
    const double inv_sigma = 1.0 / std::sqrt(var + kLnEps);
    Eigen::ArrayXd xhat = (x.row(i).transpose().array() - mu) * inv_sigma;
    Eigen::ArrayXd g = d_out.row(i).transpose().array() * gamma.array();
    const double g_mean = g.mean();
    const double gx_mean = (g * xhat).mean();
    dx.row(i) =
        ((g - g_mean - xhat * gx_mean) * inv_sigma).matrix().transpose();
  }
  return dx;
}

ToyLm::ToyLm(const ToyLmConfig &config) : cfg_(config) {
  cfg_.validate();
  Rng rng(cfg_.seed);
  const int d = cfg_.model_dim;
  const int f = cfg_.model_dim * cfg_.mlp_ratio;
  const double w_std = cfg_.weight_scale / std::sqrt(static_cast<double>(d));
  const double mlp_out_std = cfg_.weight_scale / std::sqrt(static_cast<double>(f));

  embed_ = rng.gaussian_matrix(cfg_.vocab_size, d, cfg_.embed_std);
  blocks_.resize(static_cast<size_t>(cfg_.depth));
  for (auto &blk : blocks_) {
    blk.ln1_gamma = Vec::Ones(d);
    blk.ln1_beta = Vec::Zero(d);
    blk.wq = rng.gaussian_matrix(d, d, w_std);
    blk.bq = Vec::Zero(d);
    blk.wk = rng.gaussian_matrix(d, d, w_std);
    blk.bk = Vec::Zero(d);
    blk.wv = rng.gaussian_matrix(d, d, w_std);
    blk.bv = Vec::Zero(d);
    blk.wo = rng.gaussian_matrix(d, d, w_std);
    blk.bo = Vec::Zero(d);
    blk.ln2_gamma = Vec::Ones(d);
    blk.ln2_beta = Vec::Zero(d);
    blk.w1 = rng.gaussian_matrix(d, f, w_std);
    blk.b1 = Vec::Zero(f);
    blk.w2 = rng.gaussian_matrix(f, d, mlp_out_std);
    blk.b2 = Vec::Zero(d);
  }
  final_gamma_ = Vec::Ones(d);
  final_beta_ = Vec::Zero(d);
  unembed_ = rng.gaussian_matrix(d, cfg_.vocab_size,
                                 cfg_.unembed_std / std::sqrt(static_cast<double>(d)));
  unembed_bias_ = Vec::Zero(cfg_.vocab_size);
  unembed_bias_(cfg_.eos_id) = cfg_.eos_logit_bias;
}

std::string ToyLm::id() const {
  std::ostringstream os;
  os << "toy-transformer-d" << cfg_.depth << "h" << cfg_.n_heads << "m"
     << cfg_.model_dim << "v" << cfg_.vocab_size << "-seed" << cfg_.seed;
  return os.str();
}

Vec ToyLm::embed_token(int token_id) const {
  if (token_id < 0 || token_id >= cfg_.vocab_size) {
    throw std::invalid_argument("token id " + std::to_string(token_id) +
                                " outside vocabulary of size " +
                                std::to_string(cfg_.vocab_size));
  }
  return embed_.row(token_id).transpose();
}

Mat ToyLm::positional_rows(int count) const {
  const int d = cfg_.model_dim;
  Mat pe(count, d);
  for (int pos = 0; pos < count; ++pos) {
    for (int i = 0; i < d / 2; ++i) {
      const double omega = std::pow(10000.0, -2.0 * i / d);
      pe(pos, 2 * i) = std::sin(pos * omega);
      pe(pos, 2 * i + 1) = std::cos(pos * omega);
    }
  }
  return pe;
}

LmRawForward ToyLm::forward(const Mat &input_embeddings,
                            const std::vector<int> &tap_layers,
                            bool need_cache) const {
  const int t_len = static_cast<int>(input_embeddings.rows());
  const int d = cfg_.model_dim;
  if (t_len < 1) throw std::invalid_argument("empty input sequence");
  if (t_len > cfg_.max_positions) {
    throw std::invalid_argument("sequence length " + std::to_string(t_len) +
                                " exceeds position limit " +
                                std::to_string(cfg_.max_positions));
  }
  if (input_embeddings.cols() != d) {
    throw std::invalid_argument("input dimension " +
                                std::to_string(input_embeddings.cols()) +
                                " does not match model dimension " +
                                std::to_string(d));
  }
  for (int layer : tap_layers) {
    if (layer < 1 || layer > cfg_.depth) {
      throw std::invalid_argument("tap layer " + std::to_string(layer) +
                                  " outside model depth " +
                                  std::to_string(cfg_.depth));
    }
  }

  const int n_heads = cfg_.n_heads;
  const int head_dim = d / n_heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));

  auto cache = std::make_shared<ToyLmCacheImpl>();
  if (need_cache) cache->blocks.reserve(static_cast<size_t>(cfg_.depth));

  LmRawForward out;
  Mat h = input_embeddings + positional_rows(t_len);
  for (int layer = 1; layer <= cfg_.depth; ++layer) {
    const Block &blk = blocks_[static_cast<size_t>(layer - 1)];
    BlockCache bc;
    bc.h_in = h;
    bc.a_norm = layer_norm(h, blk.ln1_gamma, blk.ln1_beta);
    bc.q = (bc.a_norm * blk.wq).rowwise() + blk.bq.transpose();
    bc.k = (bc.a_norm * blk.wk).rowwise() + blk.bk.transpose();
    bc.v = (bc.a_norm * blk.wv).rowwise() + blk.bv.transpose();

    Mat attn_concat(t_len, d);
    bc.probs.reserve(static_cast<size_t>(n_heads));
    for (int hd = 0; hd < n_heads; ++hd) {
      const auto qh = bc.q.middleCols(hd * head_dim, head_dim);
      const auto kh = bc.k.middleCols(hd * head_dim, head_dim);
      const auto vh = bc.v.middleCols(hd * head_dim, head_dim);
      Mat scores = qh * kh.transpose() * scale;
      for (int i = 0; i < t_len; ++i) {
        for (int j = i + 1; j < t_len; ++j) scores(i, j) = kMaskValue;
      }
      Mat probs = softmax_rows_causal(scores);
      attn_concat.middleCols(hd * head_dim, head_dim) = probs * vh;
      bc.probs.push_back(std::move(probs));
    }
    bc.h_mid = h + ((attn_concat * blk.wo).rowwise() + blk.bo.transpose());

    bc.b_norm = layer_norm(bc.h_mid, blk.ln2_gamma, blk.ln2_beta);
    bc.z1 = (bc.b_norm * blk.w1).rowwise() + blk.b1.transpose();
    bc.gelu = bc.z1.unaryExpr([](double x) { return gelu_erf(x); });
    h = bc.h_mid + ((bc.gelu * blk.w2).rowwise() + blk.b2.transpose());

    for (int tap : tap_layers) {
      if (tap == layer) out.taps[layer] = h;
    }
    if (need_cache) cache->blocks.push_back(std::move(bc));
  }

  Mat f_norm = layer_norm(h, final_gamma_, final_beta_);
  out.logits = (f_norm * unembed_).rowwise() + unembed_bias_.transpose();
  if (need_cache) {
    cache->f_in = h;
    out.cache = cache;
  }
  return out;
}

Mat ToyLm::backward_inputs(const LmRawForward &fwd, const Mat &d_logits,
                           const std::map<int, Mat> &d_taps) const {
  const auto *cache = dynamic_cast<const ToyLmCacheImpl *>(fwd.cache.get());
  if (cache == nullptr) {
    throw std::logic_error(
        "input gradients require a forward pass run with caching enabled");
  }
  const int t_len = static_cast<int>(cache->f_in.rows());
  const int d = cfg_.model_dim;
  const int n_heads = cfg_.n_heads;
  const int head_dim = d / n_heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));

  Mat d_h;
  if (d_logits.size() == 0) {
    d_h = Mat::Zero(t_len, d);
  } else {
    if (d_logits.rows() != t_len || d_logits.cols() != cfg_.vocab_size) {
      throw std::invalid_argument("logit gradient shape mismatch");
    }
    Mat d_f_norm = d_logits * unembed_.transpose();
    d_h = layer_norm_backward(cache->f_in, final_gamma_, d_f_norm);
  }

  for (int layer = cfg_.depth; layer >= 1; --layer) {
    auto tap_it = d_taps.find(layer);
    if (tap_it != d_taps.end()) {
      if (tap_it->second.rows() != t_len || tap_it->second.cols() != d) {
        throw std::invalid_argument("tap gradient shape mismatch at layer " +
                                    std::to_string(layer));
      }
      d_h += tap_it->second;
    }

    const Block &blk = blocks_[static_cast<size_t>(layer - 1)];
    const BlockCache &bc = cache->blocks[static_cast<size_t>(layer - 1)];

    // Feed-forward sublayer.
    Mat d_gelu = d_h * blk.w2.transpose();
    Mat d_z1 = d_gelu.cwiseProduct(
        bc.z1.unaryExpr([](double x) { return gelu_erf_grad(x); }));
    Mat d_b_norm = d_z1 * blk.w1.transpose();
    Mat d_h_mid = d_h + layer_norm_backward(bc.h_mid, blk.ln2_gamma, d_b_norm);

    // Attention sublayer.
    Mat d_concat = d_h_mid * blk.wo.transpose();
    Mat d_q(t_len, d), d_k(t_len, d), d_v(t_len, d);
    for (int hd = 0; hd < n_heads; ++hd) {
      const auto d_oh = d_concat.middleCols(hd * head_dim, head_dim);
      const auto qh = bc.q.middleCols(hd * head_dim, head_dim);
      const auto kh = bc.k.middleCols(hd * head_dim, head_dim);
      const auto vh = bc.v.middleCols(hd * head_dim, head_dim);
      const Mat &probs = bc.probs[static_cast<size_t>(hd)];

      Mat d_probs = d_oh * vh.transpose();
      d_v.middleCols(hd * head_dim, head_dim) = probs.transpose() * d_oh;
      Mat d_scores(t_len, t_len);
      for (int i = 0; i < t_len; ++i) {
        const double dot = d_probs.row(i).dot(probs.row(i));
        d_scores.row(i) =
            (probs.row(i).array() * (d_probs.row(i).array() - dot)).matrix();
      }
      d_q.middleCols(hd * head_dim, head_dim) = d_scores * kh * scale;
      d_k.middleCols(hd * head_dim, head_dim) =
          d_scores.transpose() * qh * scale;
    }
    Mat d_a_norm = d_q * blk.wq.transpose() + d_k * blk.wk.transpose() +
                   d_v * blk.wv.transpose();
    d_h = d_h_mid + layer_norm_backward(bc.h_in, blk.ln1_gamma, d_a_norm);
  }
  // The positional rows are an additive constant, so the gradient passes
  // through to the raw input embeddings unchanged.
  return d_h;
}

std::uint64_t ToyLm::parameter_checksum() const {
  std::uint64_t h = fnv1a(nullptr, 0);
  h = checksum_update(h, embed_);
  for (const auto &blk : blocks_) {
    h = checksum_update(h, blk.ln1_gamma);
    h = checksum_update(h, blk.ln1_beta);
    h = checksum_update(h, blk.wq);
    h = checksum_update(h, blk.bq);
    h = checksum_update(h, blk.wk);
    h = checksum_update(h, blk.bk);
    h = checksum_update(h, blk.wv);
    h = checksum_update(h, blk.bv);
    h = checksum_update(h, blk.wo);
    h = checksum_update(h, blk.bo);
    h = checksum_update(h, blk.ln2_gamma);
    h = checksum_update(h, blk.ln2_beta);
    h = checksum_update(h, blk.w1);
    h = checksum_update(h, blk.b1);
    h = checksum_update(h, blk.w2);
    h = checksum_update(h, blk.b2);
  }
  h = checksum_update(h, final_gamma_);
  h = checksum_update(h, final_beta_);
  h = checksum_update(h, unembed_);
  h = checksum_update(h, unembed_bias_);
  return h;
}

}  // namespace speechlm
