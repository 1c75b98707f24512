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

// File-level stage runners behind the exemplar-forge subcommands.
//
// Artifact formats:
//   JSONL  the first record is {"header": {"artifact", "schema_version",
//          "seed"}}; readers skip header records.
//   TSV    pairs are "source_id<TAB>target_id", templates add a third
//          column (empty when no template was found). Lines starting with
//          '#' are comments; writers put "# seed = N" first.

#ifndef EXFORGE_COMMANDS_H_
#define EXFORGE_COMMANDS_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "exforge/masking.h"
#include "exforge/metrics.h"
#include "exforge/samples.h"
#include "exforge/template_select.h"
#include "exforge/toylm.h"

namespace exforge {

namespace fs = std::filesystem;

inline constexpr int kArtifactSchemaVersion = 1;

std::string ReadFile(const fs::path& path);
// Creates parent directories.
void WriteFile(const fs::path& path, const std::string& contents);

std::string JsonlHeader(const std::string& artifact, std::uint64_t seed);
std::vector<nlohmann::json> ParseJsonl(const std::string& text);
std::vector<nlohmann::json> ReadJsonl(const fs::path& path);
std::vector<TaggedSentence> ReadPosCorpus(const fs::path& path);

using IdPair = std::pair<std::string, std::string>;
std::vector<IdPair> ReadPairs(const fs::path& path);

struct TemplateRow {
  std::string source_id;
  std::string target_id;
  std::optional<std::string> template_id;
};
std::vector<TemplateRow> ReadTemplates(const fs::path& path);
std::string FormatTemplates(const std::vector<TemplateRow>& rows,
                            std::uint64_t seed);

// Resolves an id pair against the corpus; throws Error naming a missing id.
PairRecord ResolvePair(const std::map<std::string, const TaggedSentence*>& index,
                       const IdPair& ids);

struct MaskCommand {
  fs::path input;
  fs::path output;
  double p = 0.0;
  std::uint64_t seed = 0;
  std::string mask_token = kDefaultMaskToken;
};
std::string MaskCorpus(const std::vector<TaggedSentence>& corpus,
                       const MaskCommand& cmd);
void RunMask(const MaskCommand& cmd);

enum class SelectMode { kTed, kEmbedding };
SelectMode ParseSelectMode(const std::string& name);

struct SelectCommand {
  SelectMode mode = SelectMode::kTed;
  fs::path pairs;
  fs::path pool;
  fs::path corpus;  // resolves pair ids; defaults to the pool
  fs::path trees;
  fs::path embeddings;
  fs::path output;
  std::size_t k = 10;
  TedConfig ted;
  std::uint64_t seed = 0;
  // Training pairs use their own target as the template in TED mode.
  bool train_split = false;
};

struct SelectionInputs {
  std::vector<TaggedSentence> corpus;
  CandidatePool pool;
  std::optional<EmbeddingIndex> index;
};
SelectionInputs LoadSelectionInputs(const SelectCommand& cmd);
std::vector<TemplateRow> SelectTemplates(const SelectionInputs& inputs,
                                         const std::vector<IdPair>& pairs,
                                         const SelectCommand& cmd);
void RunSelectTemplate(const SelectCommand& cmd);

struct BuildSamplesCommand {
  SampleMode mode = SampleMode::kMasked;
  fs::path pairs;      // used when templates is empty (naive mode)
  fs::path templates;  // select-template output
  fs::path pos_corpus;
  fs::path vocab_out;
  fs::path output;
  std::size_t min_count = 1;
  double p = 0.15;
  std::uint64_t seed = 0;
  // Independent second-order maskings per triplet.
  std::size_t copies = 1;
  bool single_separator = false;
  std::string mask_token = kDefaultMaskToken;
};
// Returns the number of samples written.
std::size_t RunBuildSamples(const BuildSamplesCommand& cmd);

struct TrainCommand {
  fs::path samples;
  fs::path config;  // JSON {"model": {...}, "train": {...}}
  fs::path vocab;
  fs::path checkpoint_out;
};
// Returns the per-epoch loss history.
std::vector<double> RunTrainToy(const TrainCommand& cmd);

struct DecodeCommand {
  fs::path checkpoint;
  fs::path input;  // JSONL {id, x, template[, source, exemplar]}
  fs::path output;
  double p = 0.0;
  std::uint64_t seed = 0;
  std::size_t max_len = 128;
  bool single_separator = false;
};
void RunDecode(const DecodeCommand& cmd);

struct EvalCommand {
  fs::path hyp;  // JSONL {id, output, source, exemplar}
  fs::path ref;  // JSONL {id, target}
  EvalMode mode = EvalMode::kModel;
  std::optional<fs::path> token_vectors;
  fs::path report;
};
EvalReport RunEval(const EvalCommand& cmd);

}  // namespace exforge

#endif  // EXFORGE_COMMANDS_H_
