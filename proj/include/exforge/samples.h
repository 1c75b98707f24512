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

// Word-level vocabulary and training-sample layouts:
//
//   naive     SOS x SEP1 y EOS
//   exemplar  SOS x SEP1 e SEP2 y EOS
//   masked    SOS x SEP1 m(e) SEP2 y EOS
//
// With a single separator, SEP2 is written as SEP1. The loss mask covers the
// target tokens and the closing EOS.

#ifndef EXFORGE_SAMPLES_H_
#define EXFORGE_SAMPLES_H_

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "exforge/corpus.h"
#include "exforge/masking.h"

namespace exforge {

using TokenId = std::int32_t;

struct ControlLiterals {
  std::string pad = "<pad>";
  std::string unk = "<unk>";
  std::string sos = "<sos>";
  std::string sep1 = "<sep>";
  std::string sep2 = "<sep2>";
  std::string eos = "<eos>";
  std::string mask = kDefaultMaskToken;
};

class Vocab {
 public:
  static constexpr TokenId kPad = 0;
  static constexpr TokenId kUnk = 1;
  static constexpr TokenId kSos = 2;
  static constexpr TokenId kSep1 = 3;
  static constexpr TokenId kSep2 = 4;
  static constexpr TokenId kEos = 5;
  static constexpr TokenId kMask = 6;
  static constexpr TokenId kNumReserved = 7;

  explicit Vocab(ControlLiterals literals = {});

  // Surfaces with count >= min_count, ordered by count desc then surface.
  static Vocab Build(std::span<const TaggedSentence> corpus,
                     std::size_t min_count,
                     ControlLiterals literals = {});

  std::size_t size() const { return surfaces_.size(); }
  const ControlLiterals& literals() const { return literals_; }
  // UNK for unknown surfaces.
  TokenId Encode(const std::string& surface) const;
  // Throws Error for ids out of range.
  const std::string& Decode(TokenId id) const;
  bool Contains(const std::string& surface) const {
    return ids_.count(surface) > 0;
  }

  nlohmann::json ToJson() const;
  static Vocab FromJson(const nlohmann::json& j);

  friend bool operator==(const Vocab& a, const Vocab& b) {
    return a.surfaces_ == b.surfaces_;
  }

 private:
  void Append(const std::string& surface);

  ControlLiterals literals_;
  std::vector<std::string> surfaces_;
  std::map<std::string, TokenId> ids_;
};

enum class Role : std::uint8_t { kControl, kSource, kTemplate, kTarget };

std::string RoleName(Role role);
Role ParseRole(const std::string& name);

struct TrainingSample {
  std::vector<TokenId> ids;
  std::vector<Role> roles;
  std::vector<bool> loss_mask;

  std::size_t size() const { return ids.size(); }
  nlohmann::json ToJson() const;
  static TrainingSample FromJson(const nlohmann::json& j);

  friend bool operator==(const TrainingSample&,
                         const TrainingSample&) = default;
};

enum class SampleMode { kNaive, kExemplar, kMasked };

SampleMode ParseSampleMode(const std::string& name);
std::string SampleModeName(SampleMode mode);

using Exemplar = std::variant<std::monostate, TaggedSentence, MaskedTemplate>;

struct SampleOptions {
  bool single_separator = false;
};

// Throws Error when the exemplar kind does not fit the mode.
TrainingSample BuildSample(SampleMode mode, const TaggedSentence& x,
                           const Exemplar& e, const TaggedSentence& y,
                           const Vocab& vocab, SampleOptions opts = {});

// The decoding prompt SOS x SEP1 m(e) SEP2, roles included.
TrainingSample BuildPrompt(std::span<const std::string> x,
                           std::span<const std::optional<std::string>> tmpl,
                           const Vocab& vocab, SampleOptions opts = {});

std::vector<std::string> DecodeIds(std::span<const TokenId> ids,
                                   const Vocab& vocab);

}  // namespace exforge

#endif  // EXFORGE_SAMPLES_H_
