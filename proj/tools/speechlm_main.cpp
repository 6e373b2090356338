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

#include <cstdio>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "speechlm/config.hpp"
#include "speechlm/fixture.hpp"

namespace speechlm {
namespace {

struct CommonFlags {
  std::string config_path;
  std::string preset;
  std::string checkpoint;
  std::string out_dir;
  std::string audio;
  std::string prompt;
  std::string style_suffix;
  std::vector<std::string> systems;
  std::vector<std::string> metrics;
  long long seed = -1;
};

RunConfig load_with_overrides(const CommonFlags &flags) {
  RunConfig cfg = load_run_config(flags.config_path);
  if (!flags.preset.empty()) apply_preset(cfg, flags.preset);
  if (!flags.out_dir.empty()) cfg.out_dir = flags.out_dir;
  if (!flags.systems.empty()) cfg.systems = flags.systems;
  if (!flags.metrics.empty()) cfg.metrics = flags.metrics;
  if (flags.seed >= 0) {
    cfg.train.seed = static_cast<std::uint64_t>(flags.seed);
  }
  return cfg;
}

std::string default_checkpoint(const RunConfig &cfg) {
  return (std::filesystem::path(cfg.out_dir) / "checkpoint_best.json").string();
}

void load_encoder_checkpoint(const RunConfig &cfg, const CommonFlags &flags,
                             Components &parts) {
  const std::string path =
      flags.checkpoint.empty() ? default_checkpoint(cfg) : flags.checkpoint;
  if (!file_exists(path)) {
    throw std::invalid_argument("checkpoint not found: " + path);
  }
  const CheckpointInfo info = load_checkpoint(path, *parts.encoder, nullptr);
  const std::uint64_t lm_checksum = parts.lm->parameter_checksum();
  if (info.lm_checksum != lm_checksum) {
    throw std::invalid_argument(
        "checkpoint " + path + " was trained against a different frozen " +
        "language model (checksum " + hex_u64(info.lm_checksum) + " vs " +
        hex_u64(lm_checksum) + ")");
  }
  SL_INFO("loaded checkpoint %s (step %lld, validation ntp %.6f)", path.c_str(),
          info.step, info.validation_ntp);
}

Manifest load_built_manifest(const RunConfig &cfg) {
  if (!file_exists(cfg.built_manifest)) {
    throw std::invalid_argument("built manifest not found: " +
                                cfg.built_manifest +
                                "; run the build-responses command first");
  }
  Manifest manifest = Manifest::load(cfg.built_manifest);
  if (!manifest.metadata.built) {
    throw std::invalid_argument("manifest " + cfg.built_manifest +
                                " has no responses; run the build-responses "
                                "command first");
  }
  return manifest;
}

int cmd_build_responses(const CommonFlags &flags) {
  RunConfig cfg = load_with_overrides(flags);
  Components parts = build_components(cfg);
  Manifest input = Manifest::load(cfg.input_manifest);
  BuildResult result =
      build_response_dataset(input, *parts.lm, *parts.tmpl, *parts.tokenizer,
                             cfg.instruction);
  result.manifest.save(cfg.built_manifest);
  std::printf("wrote %s: %d records filled, %d skipped\n",
              cfg.built_manifest.c_str(), result.filled, result.skipped);
  return 0;
}

int cmd_train(const CommonFlags &flags) {
  RunConfig cfg = load_with_overrides(flags);
  Components parts = build_components(cfg);
  Manifest manifest = load_built_manifest(cfg);
  TrainReport report =
      train(manifest, parts.run(), cfg.train, cfg.out_dir, cfg.snapshot());
  std::printf("best checkpoint %s at step %lld with validation ntp %.6f\n",
              report.best_checkpoint_path.c_str(), report.best_step,
              report.best_validation_ntp);
  return 0;
}

int cmd_summarize(const CommonFlags &flags, bool with_cascade) {
  RunConfig cfg = load_with_overrides(flags);
  Components parts = build_components(cfg);
  load_encoder_checkpoint(cfg, flags, parts);
  if (flags.audio.empty()) {
    throw std::invalid_argument("summarize needs --audio");
  }
  const WaveformInput wave = read_wav(flags.audio);
  std::string instruction =
      flags.prompt.empty() ? cfg.instruction : flags.prompt;
  if (!flags.style_suffix.empty()) instruction += " " + flags.style_suffix;
  const RunComponents rc = parts.run();
  std::printf("%s\n", summarize_e2e(wave, instruction, rc).c_str());
  if (with_cascade) {
    std::unique_ptr<OracleAsr> oracle;
    Manifest manifest = load_built_manifest(cfg);
    const AsrAdapter *asr = select_asr(cfg, parts, oracle, manifest);
    std::printf("cascade: %s\n",
                cascade_summarize(wave, *asr, instruction, rc).c_str());
  }
  return 0;
}

Manifest load_or_build(const std::string &path, const Components &parts,
                       const RunConfig &cfg) {
  if (!file_exists(path)) {
    throw std::invalid_argument("manifest not found: " + path);
  }
  Manifest manifest = Manifest::load(path);
  if (!manifest.metadata.built) {
    SL_INFO("manifest %s has no responses; generating them in memory",
            path.c_str());
    manifest = build_response_dataset(manifest, *parts.lm, *parts.tmpl,
                                      *parts.tokenizer, cfg.instruction)
                   .manifest;
  }
  return manifest;
}

int cmd_evaluate(const CommonFlags &flags, const std::string &mode) {
  RunConfig cfg = load_with_overrides(flags);
  Components parts = build_components(cfg);
  load_encoder_checkpoint(cfg, flags, parts);
  const RunComponents rc = parts.run();
  std::filesystem::create_directories(cfg.out_dir);
  const std::filesystem::path out(cfg.out_dir);

  if (mode == "perplexity") {
    if (cfg.perplexity_manifests.empty()) {
      throw std::invalid_argument(
          "config lists no perplexity manifests under paths");
    }
    std::vector<std::pair<std::string, Manifest>> labeled;
    for (const auto &[label, path] : cfg.perplexity_manifests) {
      labeled.emplace_back(label, load_or_build(path, parts, cfg));
    }
    std::unique_ptr<OracleAsr> oracle;
    const AsrAdapter *asr =
        select_asr(cfg, parts, oracle, labeled.front().second);
    PerplexityReport report =
        evaluate_perplexity(labeled, cfg.systems, rc, asr);
    write_text_file((out / "perplexity_table.txt").string(), report.table_text);
    std::printf("%s", report.table_text.c_str());
    return 0;
  }

  Manifest manifest = load_built_manifest(cfg);
  std::unique_ptr<OracleAsr> oracle;
  const AsrAdapter *asr = select_asr(cfg, parts, oracle, manifest);

  if (mode == "summarization") {
    auto metrics = make_metrics(cfg.metrics, cfg.external_metrics);
    SummarizationReport report =
        evaluate_summarization(manifest, cfg.systems, metrics,
                               cfg.reference_sets, rc, asr, cfg.instruction);
    write_text_file((out / "summarization_table.txt").string(),
                    report.table_text);
    write_eval_records((out / "eval_records.jsonl").string(), report.records);
    std::printf("%s", report.table_text.c_str());
    std::printf("evaluated %d samples, excluded %d\n", report.evaluated,
                report.excluded);
    return 0;
  }
  if (mode == "style") {
    StyleReport report = style_variation_run(manifest, cfg.style_suffixes, rc,
                                             cfg.instruction);
    write_text_file((out / "style_table.txt").string(), report.table_text);
    write_style_records((out / "style_records.jsonl").string(), report.records);
    std::printf("%s", report.table_text.c_str());
    return 0;
  }
  throw std::invalid_argument("unknown evaluate mode \"" + mode +
                              "\": choices are perplexity, summarization, style");
}

int cmd_fixture(const FixtureSpec &spec) {
  FixtureResult result = write_fixture(spec);
  std::printf("wrote %d samples under %s (config %s)\n", result.written,
              spec.dir.c_str(), result.config_path.c_str());
  return 0;
}

int cmd_dump_boundaries(const CommonFlags &flags) {
  RunConfig cfg = load_with_overrides(flags);
  Components parts = build_components(cfg);
  if (flags.audio.empty()) {
    throw std::invalid_argument("dump-boundaries needs --audio");
  }
  const WaveformInput wave = read_wav(flags.audio);
  const CtcLabelPath path = parts.matched_asr->label_path(wave);
  const WordBoundarySet set = word_start_indices(path, kNoDelimiter);
  for (int start : set.start_indices) {
    const int label = path.labels[static_cast<size_t>(start)];
    std::printf("%s\t%d\n", parts.tokenizer->token(label).c_str(), start);
  }
  return 0;
}

int run_cli(int argc, char **argv) {
  CLI::App app{"speech-to-LM prompting workbench"};
  app.require_subcommand(1);
  CommonFlags flags;
  bool with_cascade = false;
  std::string eval_mode = "summarization";
  FixtureSpec fixture_spec;

  auto add_common = [&flags](CLI::App *cmd, bool needs_config = true) {
    auto *opt = cmd->add_option("--config", flags.config_path,
                                "run configuration file");
    if (needs_config) opt->required();
    cmd->add_option("--preset", flags.preset,
                    "loss/pooling preset: full, ntp_only, ntp_ld, ntp_fd, "
                    "ctc_pooling");
    cmd->add_option("--checkpoint", flags.checkpoint, "checkpoint file");
    cmd->add_option("--out-dir", flags.out_dir, "output directory override");
    cmd->add_option("--seed", flags.seed, "training seed override");
  };

  CLI::App *build = app.add_subcommand(
      "build-responses", "fill manifest responses with frozen-LM replies");
  add_common(build);

  CLI::App *train_cmd =
      app.add_subcommand("train", "train the audio encoder against the frozen LM");
  add_common(train_cmd);

  CLI::App *summarize =
      app.add_subcommand("summarize", "print the greedy summary of one audio file");
  add_common(summarize);
  summarize->add_option("--audio", flags.audio, "input WAV file")->required();
  summarize->add_option("--prompt", flags.prompt, "instruction override");
  summarize->add_option("--style-suffix", flags.style_suffix,
                        "text appended to the instruction");
  summarize->add_flag("--with-cascade", with_cascade,
                      "also print the cascade baseline summary");

  CLI::App *evaluate = app.add_subcommand("evaluate", "run an evaluation protocol");
  add_common(evaluate);
  evaluate->add_option("--mode", eval_mode,
                       "perplexity, summarization, or style");
  evaluate->add_option("--systems", flags.systems, "systems to score")
      ->delimiter(',');
  evaluate->add_option("--metrics", flags.metrics, "metrics to apply")
      ->delimiter(',');

  CLI::App *fixture =
      app.add_subcommand("fixture", "generate the bundled synthetic corpus");
  fixture->add_option("--out-dir", fixture_spec.dir, "fixture directory")
      ->required();
  fixture->add_option("--count", fixture_spec.count, "sample count");
  fixture->add_option("--valid", fixture_spec.valid_count, "validation samples");
  fixture->add_option("--test", fixture_spec.test_count, "test samples");
  fixture->add_option("--seed", fixture_spec.seed, "corpus seed");
  fixture->add_option("--max-steps", fixture_spec.train_max_steps,
                      "training micro-steps in the generated config");

  CLI::App *dump = app.add_subcommand(
      "dump-boundaries", "print (word, start_frame) pairs for one audio file");
  add_common(dump);
  dump->add_option("--audio", flags.audio, "input WAV file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (build->parsed()) return cmd_build_responses(flags);
    if (train_cmd->parsed()) return cmd_train(flags);
    if (summarize->parsed()) return cmd_summarize(flags, with_cascade);
    if (evaluate->parsed()) return cmd_evaluate(flags, eval_mode);
    if (fixture->parsed()) return cmd_fixture(fixture_spec);
    if (dump->parsed()) return cmd_dump_boundaries(flags);
  } catch (const std::exception &e) {
    SL_ERROR("%s", e.what());
    return 1;
  }
  return 1;
}

}  // namespace
}  // namespace speechlm

int main(int argc, char **argv) { return speechlm::run_cli(argc, argv); }
