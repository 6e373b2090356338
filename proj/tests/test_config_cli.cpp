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

#include <cstdlib>
#include <string>

#include <json.hpp>

#include "speechlm/config.hpp"
#include "speechlm/fixture.hpp"
#include "speechlm/util.hpp"
#include "support/test_lms.hpp"

using namespace speechlm;
using speechlm::testing::TempDir;

namespace {

// Minimal but complete configuration rooted in a scratch directory with the
// referenced files present.
std::string minimal_config(const TempDir &tmp) {
  write_text_file(tmp.str("vocab.txt"),
                  "<s>\n</s>\n<user>\n<assistant>\nalpha\nbravo\ncharlie\n"
                  "delta\n");
  ChatTemplate tmpl;
  tmpl.system_prefix = {0};
  tmpl.user_prefix = {2};
  tmpl.assistant_prefix = {3};
  tmpl.eos_id = 1;
  tmpl.save(tmp.str("template.json"));
  write_text_file(
      tmp.str("manifest.jsonl"),
      "{\"corpus\":\"t\",\"kind\":\"metadata\"}\n"
      "{\"audio_path\":\"a.wav\",\"kind\":\"sample\",\"split\":\"train\","
      "\"transcript\":\"alpha\"}\n");
  return R"({
    "corpus": "unit",
    "out_dir": "out",
    "paths": {
      "vocab": "vocab.txt",
      "template": "template.json",
      "input_manifest": "manifest.jsonl",
      "built_manifest": "built.jsonl"
    },
    "lm": {"vocab_size": 8, "model_dim": 8, "depth": 2, "n_heads": 2,
           "mlp_ratio": 2, "eos_id": 1},
    "backbone": {"feature_dim": 6, "window_samples": 320},
    "encoder": {"pool_kernel": 8, "pool_stride": 4},
    "train": {"max_steps": 64, "accumulation": 2}
  })";
}

struct EnvGuard {
  std::string name;
  explicit EnvGuard(const std::string &n, const std::string &value) : name(n) {
    setenv(name.c_str(), value.c_str(), 1);
  }
  ~EnvGuard() { unsetenv(name.c_str()); }
};

}  // namespace

TEST_CASE("a minimal config parses with resolved paths and defaults") {
  TempDir tmp("cfg_min");
  const RunConfig cfg = run_config_from_json_text(minimal_config(tmp), tmp.str());
  CHECK(cfg.corpus == "unit");
  CHECK(cfg.vocab_path == tmp.str("vocab.txt"));
  CHECK(cfg.input_manifest == tmp.str("manifest.jsonl"));
  CHECK(cfg.built_manifest == tmp.str("built.jsonl"));
  CHECK(cfg.lm.vocab_size == 8);
  CHECK(cfg.lm.model_dim == 8);
  CHECK(cfg.encoder.model_dim == 8);
  CHECK(cfg.encoder.pool_kernel == 8);
  CHECK(cfg.train.max_steps == 64);
  CHECK(cfg.train.weights.ntp == doctest::Approx(0.5));
  CHECK(cfg.train.weights.ld == doctest::Approx(0.5));
  CHECK(cfg.train.weights.fd == doctest::Approx(1.0));
  CHECK(cfg.systems ==
        std::vector<std::string>{"text-reference", "cascade", "e2e"});
  CHECK(cfg.instruction == kDefaultInstruction);
}

TEST_CASE("unknown keys anywhere in the tree are rejected by name") {
  TempDir tmp("cfg_unknown");
  std::string text = minimal_config(tmp);
  text.insert(text.rfind('}'), ", \"treain\": {}");
  CHECK_THROWS_WITH_AS(run_config_from_json_text(text, tmp.str()),
                       doctest::Contains("treain"), std::invalid_argument);

  std::string nested = minimal_config(tmp);
  nested.insert(nested.find("\"max_steps\""), "\"max_stepz\": 1, ");
  CHECK_THROWS_WITH_AS(run_config_from_json_text(nested, tmp.str()),
                       doctest::Contains("train.max_stepz"),
                       std::invalid_argument);
}

TEST_CASE("missing referenced input files fail fast") {
  TempDir tmp("cfg_missing");
  std::string text = minimal_config(tmp);
  std::filesystem::remove(tmp.path() / "vocab.txt");
  CHECK_THROWS_WITH_AS(run_config_from_json_text(text, tmp.str()),
                       doctest::Contains("vocab"), std::invalid_argument);
}

TEST_CASE("environment variables override file values") {
  TempDir tmp("cfg_env");
  const EnvGuard lr("SPEECHLM_TRAIN_LR_INITIAL", "0.25");
  const EnvGuard mode("SPEECHLM_ENCODER_POOLING_MODE", "ctc_aligned");
  const RunConfig cfg = run_config_from_json_text(minimal_config(tmp), tmp.str());
  CHECK(cfg.train.lr_initial == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(cfg.encoder.pooling_mode == PoolingMode::kCtcAligned);
}

TEST_CASE("an explicit encoder dimension must agree with the LM") {
  TempDir tmp("cfg_dim");
  std::string text = minimal_config(tmp);
  text.insert(text.find("\"pool_kernel\""), "\"model_dim\": 16, ");
  CHECK_THROWS_WITH_AS(run_config_from_json_text(text, tmp.str()),
                       doctest::Contains("model_dim"), std::invalid_argument);
}

TEST_CASE("presets reshape the loss weights and pooling mode") {
  TempDir tmp("cfg_preset");
  RunConfig cfg = run_config_from_json_text(minimal_config(tmp), tmp.str());

  RunConfig ntp_only = cfg;
  apply_preset(ntp_only, "ntp_only");
  CHECK(ntp_only.train.weights.ntp == doctest::Approx(0.5));
  CHECK(ntp_only.train.weights.ld == doctest::Approx(0.0));
  CHECK(ntp_only.train.weights.fd == doctest::Approx(0.0));

  RunConfig ntp_ld = cfg;
  apply_preset(ntp_ld, "ntp_ld");
  CHECK(ntp_ld.train.weights.ld == doctest::Approx(0.5));
  CHECK(ntp_ld.train.weights.fd == doctest::Approx(0.0));

  RunConfig ntp_fd = cfg;
  apply_preset(ntp_fd, "ntp_fd");
  CHECK(ntp_fd.train.weights.ld == doctest::Approx(0.0));
  CHECK(ntp_fd.train.weights.fd == doctest::Approx(1.0));

  RunConfig ctc = cfg;
  apply_preset(ctc, "ctc_pooling");
  CHECK(ctc.encoder.pooling_mode == PoolingMode::kCtcAligned);
  CHECK(ctc.train.pooling_mode == PoolingMode::kCtcAligned);

  RunConfig full = cfg;
  apply_preset(full, "full");
  CHECK(full.train.weights.fd == doctest::Approx(1.0));

  CHECK_THROWS_AS(apply_preset(cfg, "fancy"), std::invalid_argument);
}

TEST_CASE("the config snapshot is canonical and reparses to itself") {
  TempDir tmp("cfg_snap");
  const RunConfig cfg = run_config_from_json_text(minimal_config(tmp), tmp.str());
  const std::string snap = cfg.snapshot();
  const nlohmann::json parsed = nlohmann::json::parse(snap);
  CHECK(parsed["lm"]["vocab_size"].get<int>() == 8);
  CHECK(parsed["train"]["max_steps"].get<long long>() == 64);

  RunConfig reparsed = run_config_from_json_text(snap, "");
  CHECK(reparsed.snapshot() == snap);
}

TEST_CASE("components wire up a full toy run from the fixture config") {
  TempDir tmp("cfg_build");
  FixtureSpec spec;
  spec.dir = tmp.str("fixture");
  spec.count = 4;
  spec.valid_count = 1;
  spec.test_count = 1;
  const FixtureResult fixture = write_fixture(spec);

  const RunConfig cfg = load_run_config(fixture.config_path);
  Components parts = build_components(cfg);
  CHECK(parts.tokenizer->size() == cfg.lm.vocab_size);
  CHECK(parts.lm->model_dim() == cfg.lm.model_dim);
  CHECK(parts.encoder->config().model_dim == cfg.lm.model_dim);
  CHECK(parts.tmpl->eos_id == cfg.lm.eos_id);
  CHECK(parts.matched_asr != nullptr);

  const RunComponents rc = parts.run();
  CHECK(rc.encoder == parts.encoder.get());
  CHECK(rc.lm == parts.lm.get());
}

TEST_CASE("a mismatched vocabulary size fails component construction") {
  TempDir tmp("cfg_vocab");
  std::string text = minimal_config(tmp);
  const size_t pos = text.find("\"vocab_size\": 8");
  text.replace(pos, 15, "\"vocab_size\": 9");
  const RunConfig cfg = run_config_from_json_text(text, tmp.str());
  CHECK_THROWS_WITH_AS(build_components(cfg), doctest::Contains("vocab"),
                       std::invalid_argument);
}
