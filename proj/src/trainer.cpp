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

#include "speechlm/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <stdexcept>

#include <json.hpp>

namespace speechlm {

namespace {

using nlohmann::json;

json matrix_to_json(const Mat &m) {
  json data = json::array();
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) data.push_back(m(r, c));
  }
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

Mat matrix_from_json(const json &j) {
  Mat m(j.at("rows").get<Eigen::Index>(), j.at("cols").get<Eigen::Index>());
  const auto &data = j.at("data");
  if (static_cast<Eigen::Index>(data.size()) != m.size()) {
    throw std::invalid_argument("checkpoint matrix payload size mismatch");
  }
  size_t i = 0;
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = data[i++].get<double>();
  }
  return m;
}

void shuffle_indices(std::vector<int> &order, Rng &rng) {
  for (int i = static_cast<int>(order.size()) - 1; i > 0; --i) {
    const int j = rng.uniform_int(0, i);
    std::swap(order[static_cast<size_t>(i)], order[static_cast<size_t>(j)]);
  }
}

}  // namespace

void TrainConfig::validate() const {
  if (max_steps < 0) throw std::invalid_argument("negative step budget");
  if (accumulation < 1) throw std::invalid_argument("accumulation must be >= 1");
  if (!(lr_initial >= lr_final) || !(lr_final > 0.0)) {
    throw std::invalid_argument(
        "learning rates must satisfy lr_initial >= lr_final > 0");
  }
  if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0) {
    throw std::invalid_argument("Adam betas must lie in [0, 1)");
  }
  if (weight_decay < 0.0) throw std::invalid_argument("negative weight decay");
  weights.validate();
}

double lr_at_step(long long step, const TrainConfig &cfg) {
  if (step < 0 || step > cfg.max_steps) {
    throw std::invalid_argument("step " + std::to_string(step) +
                                " outside schedule range [0, " +
                                std::to_string(cfg.max_steps) + "]");
  }
  if (cfg.max_steps == 0) return cfg.lr_initial;
  const double frac = static_cast<double>(step) / static_cast<double>(cfg.max_steps);
  return cfg.lr_initial + (cfg.lr_final - cfg.lr_initial) * frac;
}

StepGradients compute_step_gradients(const LMForwardOutput &student,
                                     const LMForwardOutput *teacher,
                                     const std::vector<int> &response_ids,
                                     const LossWeights &weights,
                                     int total_rows) {
  weights.validate();
  StepGradients out;
  out.bundle.response_len = static_cast<int>(response_ids.size());

  const NtpLoss ntp = ntp_loss(student.response_logits, response_ids);
  out.bundle.ntp = ntp.sum;
  Mat d_response = weights.ntp * ntp.d_logits;

  if (teacher != nullptr && weights.ld != 0.0) {
    const LdLoss ld = logit_distillation_loss(student.response_logits,
                                              teacher->response_logits);
    out.bundle.ld = ld.sum;
    d_response += weights.ld * ld.d_student_logits;
  }
  out.d_logits_grid = scatter_rows(d_response, student.boundary_t, total_rows);

  if (teacher != nullptr && weights.fd != 0.0) {
    const FdLoss fd =
        feature_distillation_loss(student.hidden_states, teacher->hidden_states);
    out.bundle.fd = fd.sum;
    for (const auto &[layer, d_hidden] : fd.d_student_hidden) {
      out.d_tap_grids[layer] =
          scatter_rows(weights.fd * d_hidden, student.boundary_t + 1, total_rows);
    }
  }

  out.bundle.total =
      total_loss(out.bundle.ntp, out.bundle.ld, out.bundle.fd, weights);
  return out;
}

std::optional<LossBundle> train_step(const CollatedPair &pair,
                                     AudioEncoder &encoder,
                                     const LmAdapter &lm,
                                     const ConnectorLayerSet &layers,
                                     const LossWeights &weights) {
  LMForwardOutput student =
      forward_teacher_forced(pair.student_prompt.embeddings,
                             pair.student_prompt.boundary_t, pair.response_ids,
                             layers, lm, /*need_cache=*/true);
  std::optional<LMForwardOutput> teacher;
  if (weights.needs_teacher()) {
    teacher = forward_teacher_forced(pair.teacher_prompt.embeddings,
                                     pair.teacher_prompt.boundary_t,
                                     pair.response_ids, layers, lm,
                                     /*need_cache=*/false);
  }

  const int total_rows = static_cast<int>(student.raw.logits.rows());
  StepGradients grads = compute_step_gradients(
      student, teacher ? &*teacher : nullptr, pair.response_ids, weights,
      total_rows);
  if (!std::isfinite(grads.bundle.total)) {
    SL_ERROR("dropping step on sample %s: non-finite loss (ntp=%g ld=%g fd=%g)",
             pair.sample_key.c_str(), grads.bundle.ntp, grads.bundle.ld,
             grads.bundle.fd);
    return std::nullopt;
  }

  const Mat d_input =
      lm.backward_inputs(student.raw, grads.d_logits_grid, grads.d_tap_grids);
  const Mat d_audio =
      d_input.middleRows(pair.audio_span.begin, pair.audio_span.length);
  encoder.backward(pair.encoder_cache, d_audio);
  return grads.bundle;
}

AdamW::AdamW(const std::vector<Mat *> &params, const TrainConfig &cfg)
    : cfg_(cfg) {
  m_.reserve(params.size());
  v_.reserve(params.size());
  for (const Mat *p : params) {
    m_.push_back(Mat::Zero(p->rows(), p->cols()));
    v_.push_back(Mat::Zero(p->rows(), p->cols()));
  }
}

void AdamW::apply(const std::vector<Mat *> &params,
                  const std::vector<Mat *> &grads, double lr) {
  if (params.size() != m_.size() || grads.size() != m_.size()) {
    throw std::invalid_argument("optimizer state does not match parameter list");
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (size_t i = 0; i < params.size(); ++i) {
    Mat &p = *params[i];
    const Mat &g = *grads[i];
    m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * g;
    v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * g.cwiseProduct(g);
    const Mat m_hat = m_[i] / bc1;
    const Mat v_hat = v_[i] / bc2;
    p -= lr * (m_hat.array() / (v_hat.array().sqrt() + cfg_.adam_eps)).matrix();
    if (cfg_.weight_decay != 0.0) p -= lr * cfg_.weight_decay * p;
  }
}

void save_checkpoint(const std::string &path, const AudioEncoder &encoder,
                     const AdamW *optimizer, const std::string &config_snapshot,
                     const CheckpointInfo &info) {
  json j;
  j["format_version"] = 1;
  j["step"] = info.step;
  j["validation_ntp"] = info.validation_ntp;
  j["lm_checksum"] = hex_u64(info.lm_checksum);
  j["config"] = config_snapshot.empty() ? json::object()
                                        : json::parse(config_snapshot);
  json params = json::array();
  for (const Mat *p : const_cast<AudioEncoder &>(encoder).params()) {
    params.push_back(matrix_to_json(*p));
  }
  j["encoder_params"] = std::move(params);
  if (optimizer != nullptr) {
    AdamW &opt = *const_cast<AdamW *>(optimizer);
    json m = json::array(), v = json::array();
    for (const Mat &x : opt.first_moments()) m.push_back(matrix_to_json(x));
    for (const Mat &x : opt.second_moments()) v.push_back(matrix_to_json(x));
    j["adam"] = {{"t", opt.t()}, {"m", std::move(m)}, {"v", std::move(v)}};
  }
  write_text_file(path, j.dump() + "\n");
}

CheckpointInfo load_checkpoint(const std::string &path, AudioEncoder &encoder,
                               AdamW *optimizer) {
  json j = json::parse(read_text_file(path));
  if (j.at("format_version").get<int>() != 1) {
    throw std::invalid_argument("unsupported checkpoint format in " + path);
  }
  std::vector<Mat *> params = encoder.params();
  const auto &stored = j.at("encoder_params");
  if (stored.size() != params.size()) {
    throw std::invalid_argument("checkpoint holds " +
                                std::to_string(stored.size()) +
                                " parameter tensors but the encoder has " +
                                std::to_string(params.size()));
  }
  for (size_t i = 0; i < params.size(); ++i) {
    Mat loaded = matrix_from_json(stored[i]);
    if (loaded.rows() != params[i]->rows() || loaded.cols() != params[i]->cols()) {
      throw std::invalid_argument("checkpoint parameter " + std::to_string(i) +
                                  " shape mismatch");
    }
    *params[i] = std::move(loaded);
  }
  if (optimizer != nullptr && j.contains("adam")) {
    const auto &a = j.at("adam");
    optimizer->set_t(a.at("t").get<long long>());
    auto &m = optimizer->first_moments();
    auto &v = optimizer->second_moments();
    if (a.at("m").size() != m.size() || a.at("v").size() != v.size()) {
      throw std::invalid_argument("checkpoint optimizer state size mismatch");
    }
    for (size_t i = 0; i < m.size(); ++i) m[i] = matrix_from_json(a.at("m")[i]);
    for (size_t i = 0; i < v.size(); ++i) v[i] = matrix_from_json(a.at("v")[i]);
  }
  CheckpointInfo info;
  info.step = j.at("step").get<long long>();
  info.validation_ntp = j.at("validation_ntp").get<double>();
  info.lm_checksum = std::stoull(j.at("lm_checksum").get<std::string>(), nullptr, 16);
  return info;
}

std::string checkpoint_config_snapshot(const std::string &path) {
  json j = json::parse(read_text_file(path));
  return j.at("config").dump();
}

const WaveformInput &cached_wave(const Manifest &manifest,
                                 const PairedSample &record,
                                 std::map<std::string, WaveformInput> &cache) {
  const std::string path = manifest.resolve_audio(record);
  auto it = cache.find(path);
  if (it == cache.end()) {
    it = cache.emplace(path, read_wav(path)).first;
  }
  return it->second;
}

double validation_ntp_loss(const Manifest &manifest,
                           const std::vector<int> &indices,
                           const RunComponents &rc,
                           const ConnectorLayerSet &layers,
                           std::map<std::string, WaveformInput> &wave_cache) {
  double total = 0.0;
  long long tokens = 0;
  for (int idx : indices) {
    const PairedSample &record = manifest.records[static_cast<size_t>(idx)];
    CollatedPair pair = collate(record, cached_wave(manifest, record, wave_cache),
                                *rc.encoder, *rc.tmpl, *rc.tokenizer, *rc.lm);
    LMForwardOutput student = forward_teacher_forced(
        pair.student_prompt.embeddings, pair.student_prompt.boundary_t,
        pair.response_ids, layers, *rc.lm, /*need_cache=*/false);
    const NtpLoss ntp = ntp_loss(student.response_logits, pair.response_ids);
    total += ntp.sum;
    tokens += ntp.count;
  }
  if (tokens == 0) {
    throw std::invalid_argument("validation split holds no response tokens");
  }
  return total / static_cast<double>(tokens);
}

double exact_match_rate(const Manifest &manifest,
                        const std::vector<int> &indices,
                        const RunComponents &rc,
                        std::map<std::string, WaveformInput> &wave_cache) {
  if (indices.empty()) {
    throw std::invalid_argument("match rate requested over an empty split");
  }
  int matches = 0;
  for (int idx : indices) {
    const PairedSample &record = manifest.records[static_cast<size_t>(idx)];
    const WaveformInput &wave = cached_wave(manifest, record, wave_cache);
    AudioTokenSequence tokens = rc.encoder->encode(wave);
    AssembledPrompt prompt = assemble_prompt(
        {PromptSegment::audio_tokens(std::move(tokens))}, *rc.tmpl, *rc.lm);
    const std::vector<int> expected = rc.tokenizer->tokenize(record.response);
    const int cap = 2 * static_cast<int>(
                            rc.tokenizer->tokenize(record.transcript).size());
    const std::vector<int> got =
        generate_greedy(prompt.embeddings, *rc.lm, rc.tmpl->eos_id,
                        std::max(cap, static_cast<int>(expected.size())));
    if (got == expected) ++matches;
  }
  return static_cast<double>(matches) / static_cast<double>(indices.size());
}

TrainReport train(const Manifest &manifest, const RunComponents &rc,
                  const TrainConfig &cfg, const std::string &out_dir,
                  const std::string &config_snapshot) {
  cfg.validate();
  if (!manifest.metadata.built) {
    throw std::invalid_argument(
        "manifest has no responses; run the build-responses command first");
  }
  std::filesystem::create_directories(out_dir);

  ConnectorLayerSet layers;
  if (cfg.connector_layers.empty()) {
    layers = scale_connector_layers(rc.lm->depth());
  } else {
    layers.layers = cfg.connector_layers;
    layers.validate(rc.lm->depth());
  }

  std::vector<int> train_idx = manifest.split_indices("train");
  if (train_idx.empty()) {
    throw std::invalid_argument("manifest has no train-split records");
  }
  std::vector<int> valid_idx = manifest.split_indices("valid");
  if (valid_idx.empty()) {
    SL_WARN("manifest has no valid split; validating on the train split");
    valid_idx = train_idx;
  }

  TrainReport report;
  report.lm_checksum_before = rc.lm->parameter_checksum();

  const long long validation_every =
      cfg.validation_every > 0
          ? cfg.validation_every
          : std::max<long long>(1, cfg.max_steps / 50);

  std::map<std::string, WaveformInput> wave_cache;
  AdamW optimizer(rc.encoder->params(), cfg);
  const std::string best_path =
      (std::filesystem::path(out_dir) / "checkpoint_best.json").string();
  std::string log_text;
  auto log_record = [&log_text](const json &j) { log_text += j.dump() + "\n"; };

  auto run_validation = [&](long long step) {
    const double val =
        validation_ntp_loss(manifest, valid_idx, rc, layers, wave_cache);
    log_record(json{{"step", step}, {"validation_ntp", val}});
    if (report.best_checkpoint_path.empty() || val < report.best_validation_ntp) {
      report.best_validation_ntp = val;
      report.best_step = step;
      report.best_checkpoint_path = best_path;
      CheckpointInfo info;
      info.step = step;
      info.validation_ntp = val;
      info.lm_checksum = report.lm_checksum_before;
      save_checkpoint(best_path, *rc.encoder, &optimizer, config_snapshot, info);
    }
    return val;
  };

  run_validation(0);

  std::vector<int> order = train_idx;
  long long epoch = 0;
  LossBundle window{};
  int window_steps = 0;
  rc.encoder->zero_grads();

  for (long long step = 0; step < cfg.max_steps; ++step) {
    const size_t pos = static_cast<size_t>(step % static_cast<long long>(order.size()));
    if (pos == 0) {
      Rng shuffle_rng(cfg.seed * 1000003ULL + static_cast<std::uint64_t>(epoch));
      shuffle_indices(order, shuffle_rng);
      ++epoch;
    }
    const PairedSample &record =
        manifest.records[static_cast<size_t>(order[pos])];
    CollatedPair pair = collate(record, cached_wave(manifest, record, wave_cache),
                                *rc.encoder, *rc.tmpl, *rc.tokenizer, *rc.lm);
    auto bundle = train_step(pair, *rc.encoder, *rc.lm, layers, cfg.weights);
    if (bundle.has_value()) {
      window.ntp += bundle->ntp;
      window.ld += bundle->ld;
      window.fd += bundle->fd;
      window.total += bundle->total;
      ++window_steps;
    }
    ++report.steps_seen;

    if ((step + 1) % cfg.accumulation == 0) {
      const double lr = lr_at_step(step + 1, cfg);
      std::vector<Mat *> grads = rc.encoder->grads();
      for (Mat *g : grads) *g /= static_cast<double>(cfg.accumulation);
      optimizer.apply(rc.encoder->params(), grads, lr);
      rc.encoder->zero_grads();
      ++report.updates_applied;
      const double denom = window_steps > 0 ? window_steps : 1;
      log_record(json{{"step", step + 1},
                      {"update", report.updates_applied},
                      {"ntp", window.ntp / denom},
                      {"ld", window.ld / denom},
                      {"fd", window.fd / denom},
                      {"total", window.total / denom},
                      {"lr", lr}});
      window = LossBundle{};
      window_steps = 0;
    }
    if ((step + 1) % validation_every == 0) run_validation(step + 1);
  }
  if (cfg.max_steps % validation_every != 0) run_validation(cfg.max_steps);

  report.lm_checksum_after = rc.lm->parameter_checksum();
  if (report.lm_checksum_after != report.lm_checksum_before) {
    throw std::logic_error("frozen language model parameters changed during training");
  }
  write_text_file(
      (std::filesystem::path(out_dir) / "train_log.jsonl").string(), log_text);
  SL_INFO("best checkpoint %s (step %lld, validation ntp %.6f)",
          report.best_checkpoint_path.c_str(), report.best_step,
          report.best_validation_ntp);
  return report;
}

}  // namespace speechlm
