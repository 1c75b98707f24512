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

// Template masking.
//
// First-order masking hides content words of an exemplar sentence using its
// POS tags: nouns, proper nouns, adjectives, adverbs, verbs and auxiliaries,
// except modal auxiliaries, "be" in questions, and wh-words.
//
// Second-order masking then hides each remaining visible slot independently
// with probability p (the level of creativity). The number of newly hidden
// slots among l visible ones is Binomial(l, p).

#ifndef EXFORGE_MASKING_H_
#define EXFORGE_MASKING_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "exforge/corpus.h"

namespace exforge {

inline constexpr char kDefaultMaskToken[] = "<|endoftext|>";

// One template position: either the original token or a mask.
struct Slot {
  std::optional<Token> token;  // nullopt means MASK.

  bool masked() const { return !token.has_value(); }
  static Slot Kept(Token t) { return Slot{std::move(t)}; }
  static Slot Mask() { return Slot{std::nullopt}; }

  friend bool operator==(const Slot&, const Slot&) = default;
};

class MaskedTemplate {
 public:
  MaskedTemplate() = default;
  MaskedTemplate(std::string origin_id, std::vector<Slot> slots);

  // A template with every slot visible.
  static MaskedTemplate FromSentence(const TaggedSentence& sentence);

  const std::string& origin_id() const { return origin_id_; }
  const std::vector<Slot>& slots() const { return slots_; }
  std::size_t size() const { return slots_.size(); }
  std::size_t visible_count() const { return visible_count_; }

  // Slot strings with masks rendered as `mask_token`.
  std::vector<std::string> Render(const std::string& mask_token) const;

  friend bool operator==(const MaskedTemplate&,
                         const MaskedTemplate&) = default;

 private:
  std::string origin_id_;
  std::vector<Slot> slots_;
  std::size_t visible_count_ = 0;
};

struct MaskConfig {
  double p = 0.0;
  std::uint64_t seed = 0;
  std::string mask_token = kDefaultMaskToken;
};

// True when the token is a content word that first-order masking hides.
bool IsMaskable(const Token& token, bool in_question);

MaskedTemplate FirstOrderMask(const TaggedSentence& sentence);

// The uniform draw that decides whether slot `index` of a template derived
// from `origin_id` is hidden: the slot is masked iff draw < p.
double SlotDraw(std::uint64_t seed, const std::string& origin_id,
                std::size_t index);

// Throws Error when p is outside [0, 1].
MaskedTemplate SecondOrderMask(const MaskedTemplate& tmpl,
                               const MaskConfig& cfg);

// C(l, k) p^k (1 - p)^(l - k), evaluated in the log domain.
double MaskCountProbability(std::size_t k, std::size_t l, double p);

}  // namespace exforge

#endif  // EXFORGE_MASKING_H_
