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

#include "exforge/commands.h"

#include <fstream>
#include <sstream>

#include "exforge/error.h"
#include "exforge/log.h"
#include "exforge/rng.h"
#include "exforge/text.h"

namespace exforge {

std::string ReadFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void WriteFile(const fs::path& path, const std::string& contents) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << contents;
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

std::string JsonlHeader(const std::string& artifact, std::uint64_t seed) {
  nlohmann::ordered_json h;
  h["artifact"] = artifact;
  h["schema_version"] = kArtifactSchemaVersion;
  h["seed"] = seed;
  nlohmann::ordered_json j;
  j["header"] = h;
  return j.dump() + "\n";
}

std::vector<nlohmann::json> ParseJsonl(const std::string& text) {
  std::vector<nlohmann::json> out;
  std::size_t line_no = 0;
  for (std::string_view line : Split(text, '\n')) {
    ++line_no;
    if (Trim(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("line " + std::to_string(line_no) + ": " + e.what(),
                       line_no);
    }
    if (j.is_object() && j.contains("header")) continue;
    out.push_back(std::move(j));
  }
  return out;
}

std::vector<nlohmann::json> ReadJsonl(const fs::path& path) {
  try {
    return ParseJsonl(ReadFile(path));
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), e.position());
  }
}

std::vector<TaggedSentence> ReadPosCorpus(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  try {
    return ParsePosCorpus(in);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), e.position());
  }
}

namespace {

std::vector<std::vector<std::string>> ReadTsv(const fs::path& path) {
  std::vector<std::vector<std::string>> rows;
  const std::string text = ReadFile(path);
  for (std::string_view line : Split(text, '\n')) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (Trim(line).empty() || line.starts_with('#')) continue;
    std::vector<std::string> row;
    for (std::string_view f : Split(line, '\t')) row.emplace_back(Trim(f));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

std::vector<IdPair> ReadPairs(const fs::path& path) {
  std::vector<IdPair> out;
  for (auto& row : ReadTsv(path)) {
    if (row.size() < 2 || row[0].empty() || row[1].empty())
      throw Error(path.string() + ": pair rows need source and target ids");
    out.emplace_back(std::move(row[0]), std::move(row[1]));
  }
  return out;
}

std::vector<TemplateRow> ReadTemplates(const fs::path& path) {
  std::vector<TemplateRow> out;
  for (auto& row : ReadTsv(path)) {
    if (row.size() < 2 || row.size() > 3)
      throw Error(path.string() + ": template rows have 2 or 3 columns");
    TemplateRow r{std::move(row[0]), std::move(row[1]), std::nullopt};
    if (row.size() == 3 && !row[2].empty()) r.template_id = std::move(row[2]);
    out.push_back(std::move(r));
  }
  return out;
}

std::string FormatTemplates(const std::vector<TemplateRow>& rows,
                            std::uint64_t seed) {
  std::string out = "# seed = " + std::to_string(seed) + "\n";
  for (const TemplateRow& r : rows) {
    out += r.source_id + '\t' + r.target_id + '\t' +
           r.template_id.value_or("") + '\n';
  }
  return out;
}

PairRecord ResolvePair(const std::map<std::string, const TaggedSentence*>& index,
                       const IdPair& ids) {
  auto find = [&](const std::string& id) -> const TaggedSentence& {
    auto it = index.find(id);
    if (it == index.end()) throw Error("unknown sentence id '" + id + "'");
    return *it->second;
  };
  return MakePair(find(ids.first), find(ids.second));
}

std::string MaskCorpus(const std::vector<TaggedSentence>& corpus,
                       const MaskCommand& cmd) {
  MaskConfig mc{cmd.p, cmd.seed, cmd.mask_token};
  std::string out = JsonlHeader("mask", cmd.seed);
  for (const TaggedSentence& s : corpus) {
    const MaskedTemplate t = SecondOrderMask(FirstOrderMask(s), mc);
    nlohmann::ordered_json j;
    j["id"] = s.id();
    j["template"] = t.Render(cmd.mask_token);
    j["visible_count"] = t.visible_count();
    out += j.dump() + "\n";
  }
  return out;
}

void RunMask(const MaskCommand& cmd) {
  const auto corpus = ReadPosCorpus(cmd.input);
  WriteFile(cmd.output, MaskCorpus(corpus, cmd));
  LogInfo("mask: wrote " + std::to_string(corpus.size()) + " templates to " +
          cmd.output.string());
}

SelectMode ParseSelectMode(const std::string& name) {
  if (name == "ted") return SelectMode::kTed;
  if (name == "embedding") return SelectMode::kEmbedding;
  throw Error("unknown selection mode '" + name + "'");
}

SelectionInputs LoadSelectionInputs(const SelectCommand& cmd) {
  SelectionInputs in;
  in.pool.sentences = ReadPosCorpus(cmd.pool);
  in.corpus = cmd.corpus.empty() || cmd.corpus == cmd.pool
                  ? in.pool.sentences
                  : ReadPosCorpus(cmd.corpus);
  if (cmd.mode == SelectMode::kTed) {
    if (cmd.trees.empty()) throw Error("TED selection needs a tree file");
    std::ifstream tin(cmd.trees);
    if (!tin) throw Error("cannot open '" + cmd.trees.string() + "'");
    for (auto& [id, tree] : ParseTreeFile(tin)) {
      if (!in.pool.trees.emplace(id, std::move(tree)).second)
        throw Error("duplicate tree id '" + id + "'");
    }
    in.pool.Validate(!cmd.train_split);
  } else {
    if (cmd.embeddings.empty())
      throw Error("embedding selection needs an embedding file");
    std::ifstream ein(cmd.embeddings);
    if (!ein) throw Error("cannot open '" + cmd.embeddings.string() + "'");
    in.pool.Validate(false);
    in.index = EmbeddingIndex::Build(in.pool.sentences, LoadEmbeddings(ein));
  }
  return in;
}

std::vector<TemplateRow> SelectTemplates(const SelectionInputs& inputs,
                                         const std::vector<IdPair>& pairs,
                                         const SelectCommand& cmd) {
  const auto index = IndexById(inputs.corpus);
  std::vector<TemplateRow> rows;
  rows.reserve(pairs.size());
  std::size_t missing = 0;
  for (const IdPair& ids : pairs) {
    const PairRecord pair = ResolvePair(index, ids);
    TemplateRow row{ids.first, ids.second, std::nullopt};
    if (cmd.mode == SelectMode::kTed) {
      row.template_id = cmd.train_split
                            ? std::optional<std::string>(ids.second)
                            : SelectTemplateTed(pair, inputs.pool, cmd.ted);
    } else {
      row.template_id = SelectTemplateEmbedding(pair, *inputs.index, cmd.k,
                                                PairSeed(cmd.seed, pair));
    }
    if (!row.template_id) ++missing;
    rows.push_back(std::move(row));
  }
  if (missing)
    LogWarning("select-template: " + std::to_string(missing) + " of " +
               std::to_string(pairs.size()) + " pairs have no template");
  return rows;
}

void RunSelectTemplate(const SelectCommand& cmd) {
  cmd.ted.Validate();
  const SelectionInputs inputs = LoadSelectionInputs(cmd);
  const auto rows = SelectTemplates(inputs, ReadPairs(cmd.pairs), cmd);
  WriteFile(cmd.output, FormatTemplates(rows, cmd.seed));
  LogInfo("select-template: wrote " + std::to_string(rows.size()) + " rows");
}

std::size_t RunBuildSamples(const BuildSamplesCommand& cmd) {
  if (!(cmd.p >= 0.0 && cmd.p <= 1.0)) throw Error("p must be in [0, 1]");
  if (cmd.copies == 0) throw Error("copies must be positive");
  const auto corpus = ReadPosCorpus(cmd.pos_corpus);
  const auto index = IndexById(corpus);

  std::vector<TemplateRow> rows;
  if (!cmd.templates.empty()) {
    rows = ReadTemplates(cmd.templates);
  } else {
    if (cmd.mode != SampleMode::kNaive)
      throw Error("exemplar and masked samples need --templates");
    for (auto& [s, t] : ReadPairs(cmd.pairs))
      rows.push_back(TemplateRow{s, t, std::nullopt});
  }

  ControlLiterals literals;
  literals.mask = cmd.mask_token;
  const Vocab vocab = Vocab::Build(corpus, cmd.min_count, literals);
  const SampleOptions layout{cmd.single_separator};

  std::string out = JsonlHeader("samples", cmd.seed);
  std::size_t written = 0, skipped = 0;
  for (const TemplateRow& row : rows) {
    const PairRecord pair = ResolvePair(index, {row.source_id, row.target_id});
    if (cmd.mode == SampleMode::kNaive) {
      out += BuildSample(cmd.mode, pair.source, std::monostate{}, pair.target,
                         vocab, layout)
                 .ToJson()
                 .dump() +
             "\n";
      ++written;
      continue;
    }
    if (!row.template_id) {
      ++skipped;
      continue;
    }
    auto it = index.find(*row.template_id);
    if (it == index.end())
      throw Error("unknown template id '" + *row.template_id + "'");
    const TaggedSentence& exemplar = *it->second;
    if (cmd.mode == SampleMode::kExemplar) {
      out += BuildSample(cmd.mode, pair.source, exemplar, pair.target, vocab,
                         layout)
                 .ToJson()
                 .dump() +
             "\n";
      ++written;
      continue;
    }
    const MaskedTemplate first = FirstOrderMask(exemplar);
    for (std::size_t c = 0; c < cmd.copies; ++c) {
      MaskConfig mc{cmd.p, PairSeed(DeriveSeed(cmd.seed, c), pair),
                    cmd.mask_token};
      out += BuildSample(cmd.mode, pair.source, SecondOrderMask(first, mc),
                         pair.target, vocab, layout)
                 .ToJson()
                 .dump() +
             "\n";
      ++written;
    }
  }
  if (skipped)
    LogWarning("build-samples: skipped " + std::to_string(skipped) +
               " pairs without a template");
  WriteFile(cmd.output, out);
  WriteFile(cmd.vocab_out, vocab.ToJson().dump(1) + "\n");
  LogInfo("build-samples: wrote " + std::to_string(written) + " samples, " +
          std::to_string(vocab.size()) + " vocabulary entries");
  return written;
}

std::vector<double> RunTrainToy(const TrainCommand& cmd) {
  const nlohmann::json config = nlohmann::json::parse(ReadFile(cmd.config));
  const Vocab vocab = Vocab::FromJson(nlohmann::json::parse(ReadFile(cmd.vocab)));
  ModelConfig mcfg = ModelConfig::FromJson(config.value("model", nlohmann::json::object()));
  mcfg.vocab_size = vocab.size();
  const TrainConfig tcfg =
      TrainConfig::FromJson(config.value("train", nlohmann::json::object()));

  std::vector<TrainingSample> samples;
  for (const auto& j : ReadJsonl(cmd.samples)) {
    samples.push_back(TrainingSample::FromJson(j));
    for (TokenId id : samples.back().ids) {
      if (id < 0 || static_cast<std::size_t>(id) >= vocab.size())
        throw Error("sample token id " + std::to_string(id) +
                    " is outside the vocabulary");
    }
  }
  LogInfo("train-toy: " + std::to_string(samples.size()) + " samples, " +
          std::to_string(tcfg.epochs) + " epochs");
  TrainResult result = Train(ToyModel::Init(mcfg), samples, tcfg);
  nlohmann::ordered_json ckpt = CheckpointToJson(result.model, vocab);
  ckpt["train_config"] = tcfg.ToJson();
  ckpt["loss_history"] = result.loss_history;
  WriteFile(cmd.checkpoint_out, ckpt.dump() + "\n");
  if (!result.loss_history.empty()) {
    std::ostringstream msg;
    msg << "train-toy: loss " << result.loss_history.front() << " -> "
        << result.loss_history.back();
    LogInfo(msg.str());
  }
  return result.loss_history;
}

namespace {

Tokens TokensField(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return {};
  return j.at(key).get<Tokens>();
}

}  // namespace

void RunDecode(const DecodeCommand& cmd) {
  const Checkpoint ckpt =
      CheckpointFromJson(nlohmann::json::parse(ReadFile(cmd.checkpoint)));
  const std::string& mask_literal = ckpt.vocab.literals().mask;
  DecodeOptions opts;
  opts.p = cmd.p;
  opts.max_len = cmd.max_len;
  opts.layout.single_separator = cmd.single_separator;

  std::string out = JsonlHeader("decode", cmd.seed);
  std::size_t n = 0;
  for (const auto& rec : ReadJsonl(cmd.input)) {
    const std::string id = rec.at("id").get<std::string>();
    const Tokens x = rec.at("x").get<Tokens>();
    std::vector<Slot> slots;
    for (const auto& s : rec.at("template")) {
      if (s.is_null() || s.get<std::string>() == mask_literal) {
        slots.push_back(Slot::Mask());
      } else {
        const std::string w = s.get<std::string>();
        slots.push_back(Slot::Kept(Token{w, Upos::kX, w}));
      }
    }
    const MaskedTemplate tmpl(rec.value("template_id", id), std::move(slots));
    opts.seed = DeriveSeed(cmd.seed, HashString(id));
    nlohmann::ordered_json o;
    o["id"] = id;
    o["output"] = GreedyDecode(ckpt.model, ckpt.vocab, x, tmpl, opts);
    o["source"] = rec.contains("source") ? TokensField(rec, "source") : x;
    o["exemplar"] = TokensField(rec, "exemplar");
    out += o.dump() + "\n";
    ++n;
  }
  WriteFile(cmd.output, out);
  LogInfo("decode: wrote " + std::to_string(n) + " outputs");
}

EvalReport RunEval(const EvalCommand& cmd) {
  std::vector<HypothesisRecord> hyps;
  for (const auto& j : ReadJsonl(cmd.hyp)) {
    HypothesisRecord h;
    h.id = j.at("id").get<std::string>();
    h.output = TokensField(j, "output");
    h.source = TokensField(j, "source");
    h.exemplar = TokensField(j, "exemplar");
    hyps.push_back(std::move(h));
  }
  std::map<std::string, Tokens> refs;
  for (const auto& j : ReadJsonl(cmd.ref)) {
    const std::string id = j.at("id").get<std::string>();
    if (!refs.emplace(id, TokensField(j, "target")).second)
      throw Error("duplicate reference id '" + id + "'");
  }
  std::optional<EmbeddingTable> vectors;
  if (cmd.token_vectors) {
    std::ifstream in(*cmd.token_vectors);
    if (!in) throw Error("cannot open '" + cmd.token_vectors->string() + "'");
    vectors = LoadEmbeddings(in);
  }
  const EvalReport report =
      EvaluateCorpus(hyps, refs, cmd.mode, vectors ? &*vectors : nullptr);
  nlohmann::ordered_json j = nlohmann::ordered_json::parse(report.ToJson());
  j["mode"] = EvalModeName(cmd.mode);
  WriteFile(cmd.report, j.dump(2) + "\n");
  return report;
}

}  // namespace exforge
