// Copyright 2026 The exemplar-forge Authors.
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

// exemplar-forge command-line entry point.

#include <cstdio>
#include <exception>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "exforge/commands.h"
#include "exforge/log.h"
#include "exforge/pipeline.h"

namespace {

using namespace exforge;

constexpr const char* kToolVersion = "0.1.0";

std::string VersionString() {
  return std::string("exemplar-forge ") + kToolVersion +
         "\nartifact schema " + std::to_string(kArtifactSchemaVersion) +
         "\nmanifest schema " + std::to_string(kManifestSchemaVersion) +
         "\nconfig schema " + std::to_string(kConfigSchemaVersion);
}

int PrintDiagnostics(const std::vector<Diagnostic>& diags) {
  for (const Diagnostic& d : diags)
    std::cerr << "config error: " << d.field << ": " << d.reason << '\n';
  return diags.empty() ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Template-masking paraphrase toolkit", "exemplar-forge"};
  app.set_version_flag("--version", VersionString());
  app.require_subcommand(1);
  app.fallthrough();
  bool quiet = false;
  bool verbose = false;
  app.add_flag("-q,--quiet", quiet, "Only log warnings and errors");
  app.add_flag("-v,--verbose", verbose, "Log debug messages");

  // mask
  MaskCommand mask;
  auto* mask_cmd = app.add_subcommand("mask", "First- and second-order masking");
  mask_cmd->add_option("--input", mask.input, "POS corpus")->required();
  mask_cmd->add_option("--output", mask.output, "Masked templates (JSONL)")
      ->required();
  mask_cmd->add_option("-p,--p", mask.p, "Second-order masking probability")
      ->check(CLI::Range(0.0, 1.0));
  mask_cmd->add_option("--seed", mask.seed);
  mask_cmd->add_option("--mask-token", mask.mask_token);

  // select-template
  SelectCommand select;
  std::string select_mode = "ted";
  std::string split = "eval";
  auto* select_cmd =
      app.add_subcommand("select-template", "Pick an exemplar per pair");
  select_cmd->add_option("--mode", select_mode)
      ->check(CLI::IsMember({"ted", "embedding"}));
  select_cmd->add_option("--pairs", select.pairs, "Pair TSV")->required();
  select_cmd->add_option("--pool", select.pool, "Candidate POS corpus")
      ->required();
  select_cmd->add_option("--corpus", select.corpus,
                         "POS corpus resolving pair ids (default: pool)");
  select_cmd->add_option("--trees", select.trees, "Parse trees (ted mode)");
  select_cmd->add_option("--embeddings", select.embeddings,
                         "Sentence vectors (embedding mode)");
  select_cmd->add_option("--output", select.output, "Template TSV")->required();
  select_cmd->add_option("-k,--k", select.k)->check(CLI::PositiveNumber);
  select_cmd->add_option("--max-len-diff", select.ted.max_len_diff);
  select_cmd->add_option("--bleu-ceiling", select.ted.bleu_ceiling);
  select_cmd->add_option("--seed", select.seed);
  select_cmd->add_option("--split", split)
      ->check(CLI::IsMember({"train", "eval"}));

  // build-samples
  BuildSamplesCommand build;
  std::string sample_mode = "masked";
  auto* build_cmd =
      app.add_subcommand("build-samples", "Encode training samples");
  build_cmd->add_option("--mode", sample_mode)
      ->check(CLI::IsMember({"naive", "exemplar", "masked"}));
  build_cmd->add_option("--pairs", build.pairs, "Pair TSV (naive mode)");
  build_cmd->add_option("--templates", build.templates, "Template TSV");
  build_cmd->add_option("--pos-corpus", build.pos_corpus)->required();
  build_cmd->add_option("--vocab-out", build.vocab_out)->required();
  build_cmd->add_option("--output", build.output)->required();
  build_cmd->add_option("--min-count", build.min_count);
  build_cmd->add_option("-p,--p", build.p)->check(CLI::Range(0.0, 1.0));
  build_cmd->add_option("--seed", build.seed);
  build_cmd->add_option("--copies", build.copies)->check(CLI::PositiveNumber);
  build_cmd->add_flag("--single-separator", build.single_separator);
  build_cmd->add_option("--mask-token", build.mask_token);

  // train-toy
  TrainCommand train;
  auto* train_cmd = app.add_subcommand("train-toy", "Train the toy decoder");
  train_cmd->add_option("--samples", train.samples)->required();
  train_cmd->add_option("--config", train.config,
                        "JSON {\"model\": {...}, \"train\": {...}}")
      ->required();
  train_cmd->add_option("--vocab", train.vocab)->required();
  train_cmd->add_option("--checkpoint-out", train.checkpoint_out)->required();

  // decode
  DecodeCommand decode;
  auto* decode_cmd = app.add_subcommand("decode", "Greedy decoding");
  decode_cmd->add_option("--checkpoint", decode.checkpoint)->required();
  decode_cmd->add_option("--input", decode.input)->required();
  decode_cmd->add_option("--output", decode.output)->required();
  decode_cmd->add_option("-p,--p", decode.p)->check(CLI::Range(0.0, 1.0));
  decode_cmd->add_option("--seed", decode.seed);
  decode_cmd->add_option("--max-len", decode.max_len);
  decode_cmd->add_flag("--single-separator", decode.single_separator);

  // eval
  EvalCommand eval;
  std::string eval_mode = "model";
  std::string token_vectors;
  auto* eval_cmd = app.add_subcommand("eval", "Score outputs against targets");
  eval_cmd->add_option("--hyp", eval.hyp)->required();
  eval_cmd->add_option("--ref", eval.ref)->required();
  eval_cmd->add_option("--mode", eval_mode)
      ->check(CLI::IsMember({"model", "source", "exemplar", "source-as-output",
                             "exemplar-as-output"}));
  eval_cmd->add_option("--token-vectors", token_vectors);
  eval_cmd->add_option("--report", eval.report)->required();

  // pipeline / validate
  std::string config_path;
  std::string out_dir;
  auto* pipeline_cmd =
      app.add_subcommand("pipeline", "Run every stage from one config");
  pipeline_cmd->add_option("--config", config_path)->required();
  pipeline_cmd->add_option("--out-dir", out_dir, "Overrides out_dir");
  auto* validate_cmd = app.add_subcommand("validate", "Check a config");
  validate_cmd->add_option("--config", config_path)->required();

  CLI11_PARSE(app, argc, argv);
  if (quiet) SetLogLevel(LogLevel::kWarning);
  if (verbose) SetLogLevel(LogLevel::kDebug);

  try {
    if (*mask_cmd) {
      RunMask(mask);
    } else if (*select_cmd) {
      select.mode = ParseSelectMode(select_mode);
      select.train_split = split == "train";
      RunSelectTemplate(select);
    } else if (*build_cmd) {
      build.mode = ParseSampleMode(sample_mode);
      const std::size_t n = RunBuildSamples(build);
      LogInfo("build-samples: wrote " + std::to_string(n) + " samples");
    } else if (*train_cmd) {
      RunTrainToy(train);
    } else if (*decode_cmd) {
      RunDecode(decode);
    } else if (*eval_cmd) {
      eval.mode = ParseEvalMode(eval_mode);
      if (!token_vectors.empty()) eval.token_vectors = token_vectors;
      std::cout << RunEval(eval).ToJson() << '\n';
    } else if (*validate_cmd) {
      const PipelineConfig cfg = PipelineConfig::Load(config_path);
      const int rc = PrintDiagnostics(ValidateConfig(cfg));
      if (rc == 0) std::cerr << "config ok\n";
      return rc;
    } else if (*pipeline_cmd) {
      PipelineConfig cfg = PipelineConfig::Load(config_path);
      if (!out_dir.empty()) cfg.out_dir = out_dir;
      const PipelineResult result = RunPipeline(cfg);
      if (!result.diagnostics.empty()) return PrintDiagnostics(result.diagnostics);
      for (const StageOutcome& s : result.stages) {
        std::cout << s.name << '\t'
                  << (!s.ok ? "failed" : s.skipped ? "skipped" : "ran") << '\n';
      }
      return result.exit_code;
    }
  } catch (const std::exception& e) {
    Log(LogLevel::kError, e.what());
    return 1;
  }
  return 0;
}
