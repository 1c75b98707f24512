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

#include "exforge/pipeline.h"

#include <functional>
#include <set>

#include <openssl/evp.h>

#include "exforge/error.h"
#include "exforge/log.h"
#include "exforge/rng.h"

namespace exforge {

std::string Sha256Hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(),
                 nullptr) != 1)
    throw Error("SHA-256 computation failed");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 0xf];
  }
  return out;
}

std::string FileSha256(const fs::path& path) {
  return Sha256Hex(ReadFile(path));
}

namespace {

using Json = nlohmann::json;
using OrderedJson = nlohmann::ordered_json;

void CheckKeys(const Json& j, const std::string& section,
               const std::set<std::string>& allowed) {
  if (!j.is_object())
    throw Error("config section '" + section + "' must be an object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key))
      throw Error("unknown config key '" + (section.empty() ? "" : section + ".") +
                  key + "'");
  }
}

Json Section(const Json& j, const char* name) {
  return j.contains(name) ? j.at(name) : Json::object();
}

fs::path ResolvePath(const Json& inputs, const char* key,
                     const fs::path& base) {
  if (!inputs.contains(key) || inputs.at(key).is_null()) return {};
  const fs::path p = inputs.at(key).get<std::string>();
  if (p.empty() || p.is_absolute()) return p;
  return base / p;
}

std::string SelectModeName(SelectMode m) {
  return m == SelectMode::kTed ? "ted" : "embedding";
}

}  // namespace

PipelineConfig PipelineConfig::FromJson(const Json& j,
                                        const fs::path& base_dir) {
  CheckKeys(j, "",
            {"schema_version", "seed", "out_dir", "inputs", "mask", "select",
             "samples", "model", "train", "decode", "eval"});
  if (j.value("schema_version", kConfigSchemaVersion) != kConfigSchemaVersion)
    throw Error("unsupported config schema_version");
  PipelineConfig c;
  try {
    c.seed = j.value("seed", c.seed);
    if (j.contains("out_dir")) {
      const fs::path out = j.at("out_dir").get<std::string>();
      c.out_dir = out.is_absolute() ? out : base_dir / out;
    }
    const Json inputs = Section(j, "inputs");
    CheckKeys(inputs, "inputs",
              {"pos_corpus", "trees", "embeddings", "token_vectors",
               "train_pairs", "eval_pairs"});
    c.pos_corpus = ResolvePath(inputs, "pos_corpus", base_dir);
    c.trees = ResolvePath(inputs, "trees", base_dir);
    c.embeddings = ResolvePath(inputs, "embeddings", base_dir);
    c.token_vectors = ResolvePath(inputs, "token_vectors", base_dir);
    c.train_pairs = ResolvePath(inputs, "train_pairs", base_dir);
    c.eval_pairs = ResolvePath(inputs, "eval_pairs", base_dir);

    const Json mask = Section(j, "mask");
    CheckKeys(mask, "mask", {"p", "mask_token"});
    c.mask_p = mask.value("p", c.mask_p);
    c.mask_token = mask.value("mask_token", c.mask_token);

    const Json select = Section(j, "select");
    CheckKeys(select, "select", {"mode", "k", "max_len_diff", "bleu_ceiling"});
    c.select_mode = ParseSelectMode(select.value("mode", std::string("ted")));
    c.k = select.value("k", c.k);
    c.ted.max_len_diff = select.value("max_len_diff", c.ted.max_len_diff);
    c.ted.bleu_ceiling = select.value("bleu_ceiling", c.ted.bleu_ceiling);

    const Json samples = Section(j, "samples");
    CheckKeys(samples, "samples",
              {"mode", "min_count", "p", "copies", "single_separator"});
    c.sample_mode =
        ParseSampleMode(samples.value("mode", std::string("masked")));
    c.min_count = samples.value("min_count", c.min_count);
    c.sample_p = samples.value("p", c.sample_p);
    c.copies = samples.value("copies", c.copies);
    c.single_separator = samples.value("single_separator", c.single_separator);

    c.model = Section(j, "model");
    CheckKeys(c.model, "model",
              {"dim", "n_heads", "n_layers", "max_len", "tie_embeddings"});
    c.train = Section(j, "train");
    CheckKeys(c.train, "train",
              {"learning_rate", "adam_beta1", "adam_beta2", "adam_eps",
               "teacher_forcing_ratio", "epochs", "batch_size",
               "freeze_layers", "freeze_embeddings"});

    const Json decode = Section(j, "decode");
    CheckKeys(decode, "decode", {"p", "max_len"});
    c.decode_p = decode.value("p", c.decode_p);
    c.decode_max_len = decode.value("max_len", c.decode_max_len);

    const Json eval = Section(j, "eval");
    CheckKeys(eval, "eval", {"mode"});
    c.eval_mode = ParseEvalMode(eval.value("mode", std::string("model")));
  } catch (const Json::exception& e) {
    throw Error(std::string("invalid pipeline config: ") + e.what());
  }
  return c;
}

PipelineConfig PipelineConfig::Load(const fs::path& path) {
  Json j;
  try {
    j = Json::parse(ReadFile(path));
  } catch (const Json::exception& e) {
    throw Error(path.string() + ": " + e.what());
  }
  return FromJson(j, path.parent_path());
}

Json PipelineConfig::SettingsJson() const {
  OrderedJson j;
  j["seed"] = seed;
  j["mask"] = {{"p", mask_p}, {"mask_token", mask_token}};
  j["select"] = {{"mode", SelectModeName(select_mode)},
                 {"k", k},
                 {"max_len_diff", ted.max_len_diff},
                 {"bleu_ceiling", ted.bleu_ceiling}};
  j["samples"] = {{"mode", SampleModeName(sample_mode)},
                  {"min_count", min_count},
                  {"p", sample_p},
                  {"copies", copies},
                  {"single_separator", single_separator}};
  j["model"] = model;
  j["train"] = train;
  j["decode"] = {{"p", decode_p}, {"max_len", decode_max_len}};
  j["eval"] = {{"mode", EvalModeName(eval_mode)}};
  return j;
}

std::vector<Diagnostic> ValidateConfig(const PipelineConfig& cfg) {
  std::vector<Diagnostic> out;
  auto need_file = [&](const fs::path& p, const std::string& field) {
    if (p.empty())
      out.push_back({field, "required path is not set"});
    else if (!fs::is_regular_file(p))
      out.push_back({field, "file '" + p.string() + "' does not exist"});
  };
  auto prob = [&](double p, const std::string& field) {
    if (!(p >= 0.0 && p <= 1.0))
      out.push_back({field, "probability " + std::to_string(p) +
                                " is outside [0, 1]"});
  };

  need_file(cfg.pos_corpus, "inputs.pos_corpus");
  need_file(cfg.train_pairs, "inputs.train_pairs");
  need_file(cfg.eval_pairs, "inputs.eval_pairs");
  if (cfg.select_mode == SelectMode::kTed)
    need_file(cfg.trees, "inputs.trees");
  else
    need_file(cfg.embeddings, "inputs.embeddings");
  if (!cfg.token_vectors.empty())
    need_file(cfg.token_vectors, "inputs.token_vectors");
  if (cfg.out_dir.empty()) out.push_back({"out_dir", "output directory is not set"});

  prob(cfg.mask_p, "mask.p");
  prob(cfg.sample_p, "samples.p");
  prob(cfg.decode_p, "decode.p");
  if (cfg.mask_token.empty())
    out.push_back({"mask.mask_token", "mask token is empty"});
  if (cfg.k == 0) out.push_back({"select.k", "k must be positive"});
  if (cfg.ted.max_len_diff < 0)
    out.push_back({"select.max_len_diff", "must be non-negative"});
  if (!(cfg.ted.bleu_ceiling > 0.0 && cfg.ted.bleu_ceiling <= 1.0))
    out.push_back({"select.bleu_ceiling", "must be in (0, 1]"});
  if (cfg.copies == 0) out.push_back({"samples.copies", "must be positive"});
  if (cfg.sample_mode != SampleMode::kMasked)
    out.push_back({"samples.mode",
                   "decode builds masked-exemplar prompts, so training "
                   "samples must use mode 'masked'"});
  if (cfg.decode_max_len == 0)
    out.push_back({"decode.max_len", "must be positive"});

  try {
    ModelConfig m = ModelConfig::FromJson(cfg.model);
    m.vocab_size = Vocab::kNumReserved;
    m.Validate();
    const TrainConfig t = TrainConfig::FromJson(cfg.train);
    t.Validate();
    if (!t.freeze_layers.empty() && t.freeze_layers.size() != m.n_layers)
      out.push_back({"train.freeze_layers", "needs one entry per layer"});
  } catch (const Error& e) {
    out.push_back({"model/train", e.what()});
  } catch (const nlohmann::json::exception& e) {
    out.push_back({"model/train", e.what()});
  }
  return out;
}

const std::vector<std::string>& PipelineStages() {
  static const std::vector<std::string> kStages = {
      "mask", "select-template", "build-samples", "train-toy", "decode",
      "eval"};
  return kStages;
}

namespace {

struct StageSpec {
  std::string name;
  std::vector<std::pair<std::string, fs::path>> inputs;
  Json settings;
  std::vector<std::string> outputs;  // relative to out_dir
  std::function<void(std::uint64_t seed)> run;
};

std::string DecodeId(const TemplateRow& row) {
  return row.source_id + "->" + row.target_id;
}

// Writes the decode prompts and the matching references for eval pairs.
void WriteDecodeInputs(const PipelineConfig& cfg, const fs::path& templates,
                       const fs::path& prompts_out, const fs::path& refs_out,
                       std::uint64_t seed) {
  const auto corpus = ReadPosCorpus(cfg.pos_corpus);
  const auto index = IndexById(corpus);
  std::string prompts = JsonlHeader("decode-input", seed);
  std::string refs = JsonlHeader("references", seed);
  for (const TemplateRow& row : ReadTemplates(templates)) {
    const PairRecord pair = ResolvePair(index, {row.source_id, row.target_id});
    OrderedJson p;
    p["id"] = DecodeId(row);
    p["x"] = pair.source.Surfaces();
    if (row.template_id) {
      const TaggedSentence& e = *index.at(*row.template_id);
      p["template_id"] = e.id();
      p["template"] = FirstOrderMask(e).Render(cfg.mask_token);
      p["exemplar"] = e.Surfaces();
    } else {
      p["template"] = Json::array();
      p["exemplar"] = Json::array();
    }
    p["source"] = pair.source.Surfaces();
    prompts += p.dump() + "\n";
    OrderedJson r;
    r["id"] = DecodeId(row);
    r["target"] = pair.target.Surfaces();
    refs += r.dump() + "\n";
  }
  WriteFile(prompts_out, prompts);
  WriteFile(refs_out, refs);
}

std::vector<StageSpec> MakeStages(const PipelineConfig& cfg) {
  const fs::path& out = cfg.out_dir;
  const Json settings = cfg.SettingsJson();
  std::vector<StageSpec> stages;

  stages.push_back(StageSpec{
      "mask",
      {{"pos_corpus", cfg.pos_corpus}},
      settings["mask"],
      {"masks.jsonl"},
      [&cfg, out](std::uint64_t seed) {
        RunMask(MaskCommand{cfg.pos_corpus, out / "masks.jsonl", cfg.mask_p,
                            seed, cfg.mask_token});
      }});

  std::vector<std::pair<std::string, fs::path>> select_inputs = {
      {"pos_corpus", cfg.pos_corpus},
      {"train_pairs", cfg.train_pairs},
      {"eval_pairs", cfg.eval_pairs}};
  if (cfg.select_mode == SelectMode::kTed)
    select_inputs.emplace_back("trees", cfg.trees);
  else
    select_inputs.emplace_back("embeddings", cfg.embeddings);
  stages.push_back(StageSpec{
      "select-template", select_inputs, settings["select"],
      {"templates_train.tsv", "templates_eval.tsv"},
      [&cfg, out](std::uint64_t seed) {
        SelectCommand cmd;
        cmd.mode = cfg.select_mode;
        cmd.pool = cfg.pos_corpus;
        cmd.trees = cfg.trees;
        cmd.embeddings = cfg.embeddings;
        cmd.k = cfg.k;
        cmd.ted = cfg.ted;
        cmd.seed = seed;
        const SelectionInputs inputs = LoadSelectionInputs(cmd);
        cmd.train_split = true;
        WriteFile(out / "templates_train.tsv",
                  FormatTemplates(
                      SelectTemplates(inputs, ReadPairs(cfg.train_pairs), cmd),
                      seed));
        cmd.train_split = false;
        WriteFile(out / "templates_eval.tsv",
                  FormatTemplates(
                      SelectTemplates(inputs, ReadPairs(cfg.eval_pairs), cmd),
                      seed));
      }});

  stages.push_back(StageSpec{
      "build-samples",
      {{"pos_corpus", cfg.pos_corpus},
       {"templates_train", out / "templates_train.tsv"}},
      settings["samples"],
      {"samples.jsonl", "vocab.json"},
      [&cfg, out](std::uint64_t seed) {
        BuildSamplesCommand cmd;
        cmd.mode = cfg.sample_mode;
        cmd.templates = out / "templates_train.tsv";
        cmd.pos_corpus = cfg.pos_corpus;
        cmd.vocab_out = out / "vocab.json";
        cmd.output = out / "samples.jsonl";
        cmd.min_count = cfg.min_count;
        cmd.p = cfg.sample_p;
        cmd.seed = seed;
        cmd.copies = cfg.copies;
        cmd.single_separator = cfg.single_separator;
        cmd.mask_token = cfg.mask_token;
        RunBuildSamples(cmd);
      }});

  stages.push_back(StageSpec{
      "train-toy",
      {{"samples", out / "samples.jsonl"}, {"vocab", out / "vocab.json"}},
      Json{{"model", settings["model"]}, {"train", settings["train"]}},
      {"train_config.json", "checkpoint.json"},
      [&cfg, out](std::uint64_t seed) {
        OrderedJson tc;
        Json model = cfg.model;
        model["seed"] = DeriveSeed(seed, "init");
        Json train = cfg.train;
        train["seed"] = DeriveSeed(seed, "train");
        tc["model"] = model;
        tc["train"] = train;
        WriteFile(out / "train_config.json", tc.dump(2) + "\n");
        RunTrainToy(TrainCommand{out / "samples.jsonl",
                                 out / "train_config.json",
                                 out / "vocab.json", out / "checkpoint.json"});
      }});

  stages.push_back(StageSpec{
      "decode",
      {{"pos_corpus", cfg.pos_corpus},
       {"templates_eval", out / "templates_eval.tsv"},
       {"checkpoint", out / "checkpoint.json"}},
      settings["decode"],
      {"decode_input.jsonl", "references.jsonl", "outputs.jsonl"},
      [&cfg, out](std::uint64_t seed) {
        WriteDecodeInputs(cfg, out / "templates_eval.tsv",
                          out / "decode_input.jsonl", out / "references.jsonl",
                          seed);
        DecodeCommand cmd;
        cmd.checkpoint = out / "checkpoint.json";
        cmd.input = out / "decode_input.jsonl";
        cmd.output = out / "outputs.jsonl";
        cmd.p = cfg.decode_p;
        cmd.seed = seed;
        cmd.max_len = cfg.decode_max_len;
        cmd.single_separator = cfg.single_separator;
        RunDecode(cmd);
      }});

  std::vector<std::pair<std::string, fs::path>> eval_inputs = {
      {"outputs", out / "outputs.jsonl"},
      {"references", out / "references.jsonl"}};
  if (!cfg.token_vectors.empty())
    eval_inputs.emplace_back("token_vectors", cfg.token_vectors);
  stages.push_back(StageSpec{
      "eval", eval_inputs, settings["eval"], {"report.json"},
      [&cfg, out](std::uint64_t) {
        EvalCommand cmd;
        cmd.hyp = out / "outputs.jsonl";
        cmd.ref = out / "references.jsonl";
        cmd.mode = cfg.eval_mode;
        if (!cfg.token_vectors.empty()) cmd.token_vectors = cfg.token_vectors;
        cmd.report = out / "report.json";
        RunEval(cmd);
      }});
  return stages;
}

std::map<std::string, Json> PreviousEntries(const fs::path& manifest) {
  std::map<std::string, Json> out;
  if (!fs::is_regular_file(manifest)) return out;
  try {
    const Json j = Json::parse(ReadFile(manifest));
    for (const Json& e : j.at("stages")) out[e.at("stage")] = e;
  } catch (const std::exception&) {
    LogWarning("ignoring unreadable manifest " + manifest.string());
  }
  return out;
}

bool OutputsMatch(const Json& entry, const fs::path& out_dir) {
  if (entry.value("status", std::string()) != "ok") return false;
  for (const Json& o : entry.at("outputs")) {
    const fs::path p = out_dir / o.at("path").get<std::string>();
    if (!fs::is_regular_file(p)) return false;
    if (FileSha256(p) != o.at("sha256").get<std::string>()) return false;
  }
  return true;
}

}  // namespace

PipelineResult RunPipeline(const PipelineConfig& cfg) {
  PipelineResult result;
  result.diagnostics = ValidateConfig(cfg);
  if (!result.diagnostics.empty()) {
    for (const Diagnostic& d : result.diagnostics)
      Log(LogLevel::kError, d.field + ": " + d.reason);
    result.exit_code = 2;
    return result;
  }
  fs::create_directories(cfg.out_dir);
  result.manifest = cfg.out_dir / "manifest.json";
  const auto previous = PreviousEntries(result.manifest);

  OrderedJson manifest;
  manifest["tool"] = "exemplar-forge";
  manifest["schema_version"] = kManifestSchemaVersion;
  manifest["config_schema_version"] = kConfigSchemaVersion;
  manifest["artifact_schema_version"] = kArtifactSchemaVersion;
  manifest["seed"] = cfg.seed;
  manifest["settings_sha256"] = Sha256Hex(cfg.SettingsJson().dump());
  manifest["stages"] = OrderedJson::array();
  auto flush_manifest = [&]() {
    WriteFile(result.manifest, manifest.dump(2) + "\n");
  };

  for (const StageSpec& stage : MakeStages(cfg)) {
    const std::uint64_t seed = DeriveSeed(cfg.seed, stage.name);
    StageOutcome outcome;
    outcome.name = stage.name;
    OrderedJson entry;
    entry["stage"] = stage.name;
    try {
      OrderedJson inputs = OrderedJson::array();
      std::string key_material = stage.name + "\n" + stage.settings.dump() +
                                 "\n" + std::to_string(seed) + "\n";
      for (const auto& [name, path] : stage.inputs) {
        const std::string h = FileSha256(path);
        inputs.push_back({{"name", name}, {"sha256", h}});
        key_material += name + "=" + h + "\n";
      }
      const std::string key = Sha256Hex(key_material);
      auto prev = previous.find(stage.name);
      if (prev != previous.end() &&
          prev->second.value("key", std::string()) == key &&
          OutputsMatch(prev->second, cfg.out_dir)) {
        outcome.skipped = true;
        LogInfo("stage " + stage.name + ": up to date, skipped");
      } else {
        LogInfo("stage " + stage.name + ": running");
        stage.run(seed);
      }
      OrderedJson outputs = OrderedJson::array();
      for (const std::string& rel : stage.outputs)
        outputs.push_back(
            {{"path", rel}, {"sha256", FileSha256(cfg.out_dir / rel)}});
      entry["status"] = "ok";
      entry["key"] = key;
      entry["seed"] = seed;
      entry["inputs"] = inputs;
      entry["outputs"] = outputs;
    } catch (const std::exception& e) {
      outcome.ok = false;
      outcome.error = e.what();
      entry["status"] = "failed";
      entry["error"] = e.what();
      manifest["stages"].push_back(entry);
      flush_manifest();
      result.stages.push_back(outcome);
      Log(LogLevel::kError, "stage " + stage.name + " failed: " + e.what());
      result.exit_code = 1;
      return result;
    }
    manifest["stages"].push_back(entry);
    flush_manifest();
    result.stages.push_back(outcome);
  }
  return result;
}

}  // namespace exforge
