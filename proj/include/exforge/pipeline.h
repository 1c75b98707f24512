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

// End-to-end pipeline: mask -> select-template -> build-samples -> train-toy
// -> decode -> eval, driven by one JSON config.
//
// Every stage has a key (SHA-256 over the stage name, its settings and the
// hashes of its inputs). A stage is skipped when the previous manifest holds
// the same key and every recorded output still hashes to its recorded
// value. Stage seeds derive from the global seed and the stage name.

#ifndef EXFORGE_PIPELINE_H_
#define EXFORGE_PIPELINE_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "exforge/commands.h"

namespace exforge {

inline constexpr int kManifestSchemaVersion = 1;
inline constexpr int kConfigSchemaVersion = 1;

std::string Sha256Hex(std::string_view data);
std::string FileSha256(const fs::path& path);

struct PipelineConfig {
  fs::path pos_corpus;
  fs::path trees;
  fs::path embeddings;
  fs::path token_vectors;  // optional, for the embedding score
  fs::path train_pairs;
  fs::path eval_pairs;
  fs::path out_dir;
  std::uint64_t seed = 0;

  // mask stage
  double mask_p = 0.15;
  std::string mask_token = kDefaultMaskToken;
  // select-template stage
  SelectMode select_mode = SelectMode::kTed;
  std::size_t k = 10;
  TedConfig ted;
  // build-samples stage
  SampleMode sample_mode = SampleMode::kMasked;
  std::size_t min_count = 1;
  double sample_p = 0.15;
  std::size_t copies = 1;
  bool single_separator = false;
  // train-toy stage
  nlohmann::json model = nlohmann::json::object();
  nlohmann::json train = nlohmann::json::object();
  // decode stage
  double decode_p = 0.0;
  std::size_t decode_max_len = 128;
  // eval stage
  EvalMode eval_mode = EvalMode::kModel;

  // Relative paths resolve against `base_dir`. Unknown keys are errors.
  static PipelineConfig FromJson(const nlohmann::json& j,
                                 const fs::path& base_dir);
  static PipelineConfig Load(const fs::path& path);
  // Settings only; paths are represented by their file hashes elsewhere.
  nlohmann::json SettingsJson() const;
};

struct Diagnostic {
  std::string field;
  std::string reason;
};

// Empty iff the config is runnable.
std::vector<Diagnostic> ValidateConfig(const PipelineConfig& cfg);

struct StageOutcome {
  std::string name;
  bool skipped = false;
  bool ok = true;
  std::string error;
};

struct PipelineResult {
  int exit_code = 0;
  std::vector<Diagnostic> diagnostics;
  std::vector<StageOutcome> stages;
  fs::path manifest;
};

PipelineResult RunPipeline(const PipelineConfig& cfg);

// Stage names in execution order.
const std::vector<std::string>& PipelineStages();

}  // namespace exforge

#endif  // EXFORGE_PIPELINE_H_
