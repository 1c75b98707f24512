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

#include "exforge/samples.h"

#include <algorithm>

#include "exforge/error.h"

namespace exforge {

Vocab::Vocab(ControlLiterals literals) : literals_(std::move(literals)) {
  for (const std::string* lit :
       {&literals_.pad, &literals_.unk, &literals_.sos, &literals_.sep1,
        &literals_.sep2, &literals_.eos, &literals_.mask}) {
    if (ids_.count(*lit))
      throw Error("control literal '" + *lit + "' is used twice");
    Append(*lit);
  }
}

void Vocab::Append(const std::string& surface) {
  if (ids_.count(surface)) return;
  ids_.emplace(surface, static_cast<TokenId>(surfaces_.size()));
  surfaces_.push_back(surface);
}

Vocab Vocab::Build(std::span<const TaggedSentence> corpus,
                   std::size_t min_count, ControlLiterals literals) {
  Vocab vocab(std::move(literals));
  std::map<std::string, std::size_t> counts;
  for (const TaggedSentence& s : corpus)
    for (const Token& t : s.tokens()) ++counts[t.surface];
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(),
                                                          counts.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) {
                     return a.second > b.second;
                   });
  for (const auto& [surface, count] : ranked)
    if (count >= min_count) vocab.Append(surface);
  return vocab;
}

TokenId Vocab::Encode(const std::string& surface) const {
  auto it = ids_.find(surface);
  return it == ids_.end() ? kUnk : it->second;
}

const std::string& Vocab::Decode(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= surfaces_.size())
    throw Error("token id " + std::to_string(id) + " is not in the vocabulary");
  return surfaces_[static_cast<std::size_t>(id)];
}

nlohmann::json Vocab::ToJson() const {
  nlohmann::ordered_json j;
  j["format_version"] = 1;
  j["surfaces"] = surfaces_;
  return j;
}

Vocab Vocab::FromJson(const nlohmann::json& j) {
  const auto surfaces = j.at("surfaces").get<std::vector<std::string>>();
  if (surfaces.size() < static_cast<std::size_t>(kNumReserved))
    throw Error("vocabulary is missing reserved entries");
  ControlLiterals lit;
  lit.pad = surfaces[kPad];
  lit.unk = surfaces[kUnk];
  lit.sos = surfaces[kSos];
  lit.sep1 = surfaces[kSep1];
  lit.sep2 = surfaces[kSep2];
  lit.eos = surfaces[kEos];
  lit.mask = surfaces[kMask];
  Vocab v(lit);
  for (std::size_t i = kNumReserved; i < surfaces.size(); ++i) {
    if (v.ids_.count(surfaces[i]))
      throw Error("vocabulary repeats surface '" + surfaces[i] + "'");
    v.Append(surfaces[i]);
  }
  return v;
}

std::string RoleName(Role role) {
  switch (role) {
    case Role::kControl:
      return "control";
    case Role::kSource:
      return "source";
    case Role::kTemplate:
      return "template";
    case Role::kTarget:
      return "target";
  }
  return "control";
}

Role ParseRole(const std::string& name) {
  if (name == "control") return Role::kControl;
  if (name == "source") return Role::kSource;
  if (name == "template") return Role::kTemplate;
  if (name == "target") return Role::kTarget;
  throw Error("unknown role '" + name + "'");
}

nlohmann::json TrainingSample::ToJson() const {
  nlohmann::ordered_json j;
  j["ids"] = ids;
  std::vector<std::string> role_names;
  role_names.reserve(roles.size());
  for (Role r : roles) role_names.push_back(RoleName(r));
  j["roles"] = role_names;
  std::vector<int> mask(loss_mask.begin(), loss_mask.end());
  j["loss_mask"] = mask;
  return j;
}

TrainingSample TrainingSample::FromJson(const nlohmann::json& j) {
  TrainingSample s;
  s.ids = j.at("ids").get<std::vector<TokenId>>();
  for (const auto& r : j.at("roles")) s.roles.push_back(ParseRole(r));
  for (const auto& m : j.at("loss_mask")) s.loss_mask.push_back(m.get<int>());
  if (s.ids.size() != s.roles.size() || s.ids.size() != s.loss_mask.size())
    throw Error("sample fields have different lengths");
  return s;
}

SampleMode ParseSampleMode(const std::string& name) {
  if (name == "naive") return SampleMode::kNaive;
  if (name == "exemplar") return SampleMode::kExemplar;
  if (name == "masked") return SampleMode::kMasked;
  throw Error("unknown sample mode '" + name + "'");
}

std::string SampleModeName(SampleMode mode) {
  switch (mode) {
    case SampleMode::kNaive:
      return "naive";
    case SampleMode::kExemplar:
      return "exemplar";
    case SampleMode::kMasked:
      return "masked";
  }
  return "naive";
}

namespace {

class SampleWriter {
 public:
  explicit SampleWriter(const Vocab& vocab) : vocab_(vocab) {}

  void Push(TokenId id, Role role, bool loss = false) {
    s_.ids.push_back(id);
    s_.roles.push_back(role);
    s_.loss_mask.push_back(loss);
  }

  void Words(std::span<const std::string> words, Role role) {
    for (const std::string& w : words)
      Push(vocab_.Encode(w), role, role == Role::kTarget);
  }

  TrainingSample Take() { return std::move(s_); }

 private:
  const Vocab& vocab_;
  TrainingSample s_;
};

}  // namespace

TrainingSample BuildSample(SampleMode mode, const TaggedSentence& x,
                           const Exemplar& e, const TaggedSentence& y,
                           const Vocab& vocab, SampleOptions opts) {
  const bool has_sentence = std::holds_alternative<TaggedSentence>(e);
  const bool has_template = std::holds_alternative<MaskedTemplate>(e);
  switch (mode) {
    case SampleMode::kNaive:
      if (has_sentence || has_template)
        throw Error("naive samples take no exemplar");
      break;
    case SampleMode::kExemplar:
      if (!has_sentence) throw Error("exemplar samples need a full sentence");
      break;
    case SampleMode::kMasked:
      if (!has_template) throw Error("masked samples need a masked template");
      break;
  }

  SampleWriter w(vocab);
  const TokenId sep2 = opts.single_separator ? Vocab::kSep1 : Vocab::kSep2;
  w.Push(Vocab::kSos, Role::kControl);
  w.Words(x.Surfaces(), Role::kSource);
  w.Push(Vocab::kSep1, Role::kControl);
  if (has_sentence) {
    w.Words(std::get<TaggedSentence>(e).Surfaces(), Role::kTemplate);
    w.Push(sep2, Role::kControl);
  } else if (has_template) {
    for (const Slot& slot : std::get<MaskedTemplate>(e).slots()) {
      w.Push(slot.masked() ? Vocab::kMask : vocab.Encode(slot.token->surface),
             Role::kTemplate);
    }
    w.Push(sep2, Role::kControl);
  }
  w.Words(y.Surfaces(), Role::kTarget);
  w.Push(Vocab::kEos, Role::kControl, true);
  return w.Take();
}

TrainingSample BuildPrompt(std::span<const std::string> x,
                           std::span<const std::optional<std::string>> tmpl,
                           const Vocab& vocab, SampleOptions opts) {
  SampleWriter w(vocab);
  w.Push(Vocab::kSos, Role::kControl);
  w.Words(x, Role::kSource);
  w.Push(Vocab::kSep1, Role::kControl);
  for (const auto& slot : tmpl)
    w.Push(slot ? vocab.Encode(*slot) : Vocab::kMask, Role::kTemplate);
  w.Push(opts.single_separator ? Vocab::kSep1 : Vocab::kSep2, Role::kControl);
  return w.Take();
}

std::vector<std::string> DecodeIds(std::span<const TokenId> ids,
                                   const Vocab& vocab) {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (TokenId id : ids) out.push_back(vocab.Decode(id));
  return out;
}

}  // namespace exforge
