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

#include "speechlm/config.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <set>
#include <stdexcept>

#include <json.hpp>

namespace speechlm {

namespace {

using nlohmann::json;

const std::set<std::string> &allowed_keys() {
  static const std::set<std::string> keys{
      "corpus", "out_dir",
      "paths", "paths.vocab", "paths.template", "paths.input_manifest",
      "paths.built_manifest", "paths.perplexity_manifests",
      "lm", "lm.adapter", "lm.vocab_size", "lm.model_dim", "lm.depth",
      "lm.n_heads", "lm.mlp_ratio", "lm.max_positions", "lm.seed",
      "lm.embed_std", "lm.weight_scale", "lm.unembed_std", "lm.eos_id",
      "lm.eos_logit_bias",
      "backbone", "backbone.adapter", "backbone.feature_dim",
      "backbone.window_samples", "backbone.seed", "backbone.init_std",
      "encoder", "encoder.pool_kernel", "encoder.pool_stride",
      "encoder.pooling_mode", "encoder.model_dim", "encoder.projection_bias",
      "encoder.seed",
      "train", "train.max_steps", "train.accumulation", "train.lr_initial",
      "train.lr_final", "train.beta1", "train.beta2", "train.adam_eps",
      "train.weight_decay", "train.lambda_ntp", "train.lambda_ld",
      "train.lambda_fd", "train.connector_layers", "train.seed",
      "train.validation_every",
      "synth", "synth.seed", "synth.block_samples", "synth.silence_blocks",
      "asr", "asr.adapter", "asr.threshold",
      "eval", "eval.systems", "eval.metrics", "eval.reference_sets",
      "eval.style_suffixes", "eval.instruction", "eval.external_metrics",
  };
  return keys;
}

// Objects whose children are user-chosen names rather than schema keys.
const std::set<std::string> &open_map_keys() {
  static const std::set<std::string> keys{"paths.perplexity_manifests",
                                          "eval.external_metrics"};
  return keys;
}

void check_unknown_keys(const json &node, const std::string &prefix) {
  if (!node.is_object()) return;
  for (const auto &[key, value] : node.items()) {
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    if (allowed_keys().count(path) == 0) {
      throw std::invalid_argument("unknown config key \"" + path + "\"");
    }
    if (open_map_keys().count(path) == 0) check_unknown_keys(value, path);
  }
}

std::string env_name_for(const std::string &path) {
  std::string name = "SPEECHLM_";
  for (char c : path) {
    name.push_back(c == '.' ? '_'
                            : static_cast<char>(std::toupper(
                                  static_cast<unsigned char>(c))));
  }
  return name;
}

void apply_env_overrides(json &j) {
  for (const std::string &path : allowed_keys()) {
    if (open_map_keys().count(path) != 0) continue;
    const char *value = std::getenv(env_name_for(path).c_str());
    if (value == nullptr) continue;
    json parsed = json::parse(value, nullptr, /*allow_exceptions=*/false);
    if (parsed.is_discarded()) parsed = std::string(value);
    if (parsed.is_object()) continue;
    json *node = &j;
    size_t begin = 0;
    while (true) {
      const size_t dot = path.find('.', begin);
      const std::string key = path.substr(begin, dot - begin);
      if (dot == std::string::npos) {
        (*node)[key] = parsed;
        break;
      }
      node = &(*node)[key];
      begin = dot + 1;
    }
  }
}

std::string resolve(const std::string &dir, const std::string &path) {
  if (path.empty()) return path;
  std::filesystem::path p(path);
  if (p.is_absolute() || dir.empty()) return path;
  return (std::filesystem::path(dir) / p).lexically_normal().string();
}

void require_exists(const std::string &path, const std::string &role) {
  if (!path.empty() && !file_exists(path)) {
    throw std::invalid_argument("config references a missing " + role + ": " +
                                path);
  }
}

std::vector<std::string> string_list(const json &j) {
  std::vector<std::string> out;
  for (const auto &v : j) out.push_back(v.get<std::string>());
  return out;
}

}  // namespace

RunConfig run_config_from_json_text(const std::string &text,
                                    const std::string &config_dir) {
  json j = json::parse(text);
  check_unknown_keys(j, "");
  apply_env_overrides(j);
  check_unknown_keys(j, "");

  RunConfig cfg;
  cfg.config_dir = config_dir;
  cfg.corpus = j.value("corpus", cfg.corpus);
  cfg.out_dir = resolve(config_dir, j.value("out_dir", cfg.out_dir));

  if (j.contains("paths")) {
    const auto &p = j["paths"];
    cfg.vocab_path = resolve(config_dir, p.value("vocab", ""));
    cfg.template_path = resolve(config_dir, p.value("template", ""));
    cfg.input_manifest = resolve(config_dir, p.value("input_manifest", ""));
    cfg.built_manifest = resolve(config_dir, p.value("built_manifest", ""));
    if (p.contains("perplexity_manifests")) {
      for (const auto &[label, path] : p["perplexity_manifests"].items()) {
        cfg.perplexity_manifests.emplace_back(
            label, resolve(config_dir, path.get<std::string>()));
      }
    }
  }
  require_exists(cfg.vocab_path, "vocabulary file");
  require_exists(cfg.template_path, "chat template");
  require_exists(cfg.input_manifest, "input manifest");

  if (j.contains("lm")) {
    const auto &l = j["lm"];
    cfg.lm_adapter = l.value("adapter", cfg.lm_adapter);
    cfg.lm.vocab_size = l.value("vocab_size", cfg.lm.vocab_size);
    cfg.lm.model_dim = l.value("model_dim", cfg.lm.model_dim);
    cfg.lm.depth = l.value("depth", cfg.lm.depth);
    cfg.lm.n_heads = l.value("n_heads", cfg.lm.n_heads);
    cfg.lm.mlp_ratio = l.value("mlp_ratio", cfg.lm.mlp_ratio);
    cfg.lm.max_positions = l.value("max_positions", cfg.lm.max_positions);
    cfg.lm.seed = l.value("seed", cfg.lm.seed);
    cfg.lm.embed_std = l.value("embed_std", cfg.lm.embed_std);
    cfg.lm.weight_scale = l.value("weight_scale", cfg.lm.weight_scale);
    cfg.lm.unembed_std = l.value("unembed_std", cfg.lm.unembed_std);
    cfg.lm.eos_id = l.value("eos_id", cfg.lm.eos_id);
    cfg.lm.eos_logit_bias = l.value("eos_logit_bias", cfg.lm.eos_logit_bias);
  }

  double backbone_init_std = 0.0;
  if (j.contains("backbone")) {
    const auto &b = j["backbone"];
    cfg.backbone_adapter = b.value("adapter", cfg.backbone_adapter);
    cfg.backbone_feature_dim = b.value("feature_dim", cfg.backbone_feature_dim);
    cfg.backbone_window_samples =
        b.value("window_samples", cfg.backbone_window_samples);
    cfg.backbone_seed = b.value("seed", cfg.backbone_seed);
    backbone_init_std = b.value("init_std", 0.0);
  }
  if (backbone_init_std <= 0.0) {
    backbone_init_std =
        1.0 / std::sqrt(static_cast<double>(cfg.backbone_window_samples));
  }
  cfg.backbone_init_std = backbone_init_std;

  cfg.encoder.feature_dim = cfg.backbone_feature_dim;
  cfg.encoder.model_dim = cfg.lm.model_dim;
  cfg.encoder.backbone_id = cfg.backbone_adapter;
  if (j.contains("encoder")) {
    const auto &e = j["encoder"];
    cfg.encoder.pool_kernel = e.value("pool_kernel", cfg.encoder.pool_kernel);
    cfg.encoder.pool_stride = e.value("pool_stride", cfg.encoder.pool_stride);
    if (e.contains("pooling_mode")) {
      cfg.encoder.pooling_mode =
          pooling_mode_from_string(e["pooling_mode"].get<std::string>());
    }
    if (e.contains("model_dim") &&
        e["model_dim"].get<int>() != cfg.lm.model_dim) {
      throw std::invalid_argument(
          "encoder.model_dim disagrees with lm.model_dim");
    }
    cfg.encoder.projection_bias =
        e.value("projection_bias", cfg.encoder.projection_bias);
    cfg.encoder_seed = e.value("seed", cfg.encoder_seed);
  }

  if (j.contains("train")) {
    const auto &t = j["train"];
    cfg.train.max_steps = t.value("max_steps", cfg.train.max_steps);
    cfg.train.accumulation = t.value("accumulation", cfg.train.accumulation);
    cfg.train.lr_initial = t.value("lr_initial", cfg.train.lr_initial);
    cfg.train.lr_final = t.value("lr_final", cfg.train.lr_final);
    cfg.train.beta1 = t.value("beta1", cfg.train.beta1);
    cfg.train.beta2 = t.value("beta2", cfg.train.beta2);
    cfg.train.adam_eps = t.value("adam_eps", cfg.train.adam_eps);
    cfg.train.weight_decay = t.value("weight_decay", cfg.train.weight_decay);
    cfg.train.weights.ntp = t.value("lambda_ntp", cfg.train.weights.ntp);
    cfg.train.weights.ld = t.value("lambda_ld", cfg.train.weights.ld);
    cfg.train.weights.fd = t.value("lambda_fd", cfg.train.weights.fd);
    if (t.contains("connector_layers")) {
      cfg.train.connector_layers.clear();
      for (const auto &v : t["connector_layers"]) {
        cfg.train.connector_layers.push_back(v.get<int>());
      }
    }
    cfg.train.seed = t.value("seed", cfg.train.seed);
    cfg.train.validation_every =
        t.value("validation_every", cfg.train.validation_every);
  }
  cfg.train.pooling_mode = cfg.encoder.pooling_mode;

  if (j.contains("synth")) {
    const auto &s = j["synth"];
    cfg.synth_seed = s.value("seed", cfg.synth_seed);
    cfg.synth_block_samples = s.value("block_samples", cfg.synth_block_samples);
    cfg.synth_silence_blocks =
        s.value("silence_blocks", cfg.synth_silence_blocks);
  }

  if (j.contains("asr")) {
    const auto &a = j["asr"];
    cfg.asr_adapter = a.value("adapter", cfg.asr_adapter);
    cfg.asr_threshold = a.value("threshold", cfg.asr_threshold);
  }

  if (j.contains("eval")) {
    const auto &e = j["eval"];
    if (e.contains("systems")) cfg.systems = string_list(e["systems"]);
    if (e.contains("metrics")) cfg.metrics = string_list(e["metrics"]);
    if (e.contains("reference_sets")) {
      cfg.reference_sets = string_list(e["reference_sets"]);
    }
    if (e.contains("style_suffixes")) {
      cfg.style_suffixes = string_list(e["style_suffixes"]);
    }
    cfg.instruction = e.value("instruction", cfg.instruction);
    if (e.contains("external_metrics")) {
      for (const auto &[name, command] : e["external_metrics"].items()) {
        cfg.external_metrics.emplace_back(name, command.get<std::string>());
      }
    }
  }

  cfg.lm.validate();
  cfg.encoder.validate();
  cfg.train.validate();
  return cfg;
}

RunConfig load_run_config(const std::string &path) {
  if (!file_exists(path)) {
    throw std::invalid_argument("config file not found: " + path);
  }
  const std::string dir = std::filesystem::path(path).parent_path().string();
  return run_config_from_json_text(read_text_file(path), dir);
}

std::string RunConfig::snapshot() const {
  json j;
  j["corpus"] = corpus;
  j["out_dir"] = out_dir;
  json paths;
  paths["vocab"] = vocab_path;
  paths["template"] = template_path;
  paths["input_manifest"] = input_manifest;
  paths["built_manifest"] = built_manifest;
  json ppl = json::object();
  for (const auto &[label, path] : perplexity_manifests) ppl[label] = path;
  paths["perplexity_manifests"] = std::move(ppl);
  j["paths"] = std::move(paths);
  j["lm"] = {{"adapter", lm_adapter},
             {"vocab_size", lm.vocab_size},
             {"model_dim", lm.model_dim},
             {"depth", lm.depth},
             {"n_heads", lm.n_heads},
             {"mlp_ratio", lm.mlp_ratio},
             {"max_positions", lm.max_positions},
             {"seed", lm.seed},
             {"embed_std", lm.embed_std},
             {"weight_scale", lm.weight_scale},
             {"unembed_std", lm.unembed_std},
             {"eos_id", lm.eos_id},
             {"eos_logit_bias", lm.eos_logit_bias}};
  j["backbone"] = {{"adapter", backbone_adapter},
                   {"feature_dim", backbone_feature_dim},
                   {"window_samples", backbone_window_samples},
                   {"seed", backbone_seed},
                   {"init_std", backbone_init_std}};
  j["encoder"] = {{"pool_kernel", encoder.pool_kernel},
                  {"pool_stride", encoder.pool_stride},
                  {"pooling_mode", to_string(encoder.pooling_mode)},
                  {"model_dim", encoder.model_dim},
                  {"projection_bias", encoder.projection_bias},
                  {"seed", encoder_seed}};
  j["train"] = {{"max_steps", train.max_steps},
                {"accumulation", train.accumulation},
                {"lr_initial", train.lr_initial},
                {"lr_final", train.lr_final},
                {"beta1", train.beta1},
                {"beta2", train.beta2},
                {"adam_eps", train.adam_eps},
                {"weight_decay", train.weight_decay},
                {"lambda_ntp", train.weights.ntp},
                {"lambda_ld", train.weights.ld},
                {"lambda_fd", train.weights.fd},
                {"connector_layers", train.connector_layers},
                {"seed", train.seed},
                {"validation_every", train.validation_every}};
  j["synth"] = {{"seed", synth_seed},
                {"block_samples", synth_block_samples},
                {"silence_blocks", synth_silence_blocks}};
  j["asr"] = {{"adapter", asr_adapter}, {"threshold", asr_threshold}};
  json ext = json::object();
  for (const auto &[name, command] : external_metrics) ext[name] = command;
  j["eval"] = {{"systems", systems},
               {"metrics", metrics},
               {"reference_sets", reference_sets},
               {"style_suffixes", style_suffixes},
               {"instruction", instruction},
               {"external_metrics", std::move(ext)}};
  return j.dump(2);
}

void apply_preset(RunConfig &cfg, const std::string &preset) {
  if (preset == "full") {
    cfg.train.weights = LossWeights{0.5, 0.5, 1.0};
  } else if (preset == "ntp_only") {
    cfg.train.weights = LossWeights{0.5, 0.0, 0.0};
  } else if (preset == "ntp_ld") {
    cfg.train.weights = LossWeights{0.5, 0.5, 0.0};
  } else if (preset == "ntp_fd") {
    cfg.train.weights = LossWeights{0.5, 0.0, 1.0};
  } else if (preset == "ctc_pooling") {
    cfg.train.weights = LossWeights{0.5, 0.5, 1.0};
    cfg.encoder.pooling_mode = PoolingMode::kCtcAligned;
    cfg.train.pooling_mode = PoolingMode::kCtcAligned;
  } else {
    throw std::invalid_argument(
        "unknown preset \"" + preset +
        "\": choices are full, ntp_only, ntp_ld, ntp_fd, ctc_pooling");
  }
}

RunComponents Components::run() const {
  RunComponents rc;
  rc.encoder = encoder.get();
  rc.lm = lm.get();
  rc.tmpl = tmpl.get();
  rc.tokenizer = tokenizer.get();
  return rc;
}

Components build_components(const RunConfig &cfg) {
  if (cfg.lm_adapter != "toy") {
    throw std::invalid_argument("unknown language model adapter \"" +
                                cfg.lm_adapter + "\": available: toy");
  }
  if (cfg.backbone_adapter != "toy_linear") {
    throw std::invalid_argument("unknown backbone adapter \"" +
                                cfg.backbone_adapter +
                                "\": available: toy_linear");
  }
  Components parts;
  parts.tokenizer = std::make_shared<WordTokenizer>(
      WordTokenizer::from_file(cfg.vocab_path));
  if (parts.tokenizer->size() != cfg.lm.vocab_size) {
    throw std::invalid_argument(
        "vocabulary file holds " + std::to_string(parts.tokenizer->size()) +
        " tokens but lm.vocab_size is " + std::to_string(cfg.lm.vocab_size));
  }
  parts.tmpl = std::make_shared<ChatTemplate>(
      ChatTemplate::from_file(cfg.template_path));
  parts.tmpl->validate(cfg.lm.vocab_size);
  if (parts.tmpl->eos_id != cfg.lm.eos_id) {
    throw std::invalid_argument("template eos_id disagrees with lm.eos_id");
  }
  parts.lm = std::make_shared<ToyLm>(cfg.lm);
  parts.synth = std::make_shared<SynthModel>(cfg.lm.vocab_size, cfg.synth_seed,
                                             cfg.synth_block_samples,
                                             cfg.synth_silence_blocks);
  parts.backbone = std::make_shared<LinearBackbone>(
      cfg.backbone_window_samples, cfg.backbone_feature_dim, cfg.backbone_seed,
      cfg.backbone_init_std);
  parts.matched_asr = std::make_shared<MatchedFilterAsr>(
      *parts.synth, *parts.tokenizer, cfg.asr_threshold, /*blank_id=*/0,
      cfg.backbone_window_samples);
  parts.boundary_provider =
      std::make_shared<CtcWordBoundaryProvider>(*parts.matched_asr);
  parts.encoder = std::make_shared<AudioEncoder>(
      cfg.encoder, parts.backbone, cfg.encoder_seed, parts.boundary_provider);
  return parts;
}

std::unique_ptr<OracleAsr> make_oracle_asr(const Manifest &manifest) {
  auto oracle = std::make_unique<OracleAsr>();
  for (const PairedSample &record : manifest.records) {
    oracle->add(read_wav(manifest.resolve_audio(record)), record.transcript);
  }
  return oracle;
}

const AsrAdapter *select_asr(const RunConfig &cfg, const Components &parts,
                             std::unique_ptr<OracleAsr> &oracle_storage,
                             const Manifest &manifest) {
  if (cfg.asr_adapter == "matched_filter") return parts.matched_asr.get();
  if (cfg.asr_adapter == "oracle") {
    if (!oracle_storage) oracle_storage = make_oracle_asr(manifest);
    return oracle_storage.get();
  }
  throw std::invalid_argument("unknown recognizer adapter \"" +
                              cfg.asr_adapter +
                              "\": available: matched_filter, oracle");
}

}  // namespace speechlm
