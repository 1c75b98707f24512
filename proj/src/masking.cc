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

#include "exforge/masking.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <string_view>

#include "exforge/error.h"
#include "exforge/rng.h"

namespace exforge {
namespace {

constexpr std::array<std::string_view, 9> kModals = {
    "can", "could", "may", "might", "must", "shall", "should", "will", "would"};

constexpr std::array<std::string_view, 9> kWhWords = {
    "what", "which", "who", "whom", "whose", "when", "where", "why", "how"};

template <std::size_t N>
bool Contains(const std::array<std::string_view, N>& set,
              std::string_view word) {
  return std::find(set.begin(), set.end(), word) != set.end();
}

void CheckProbability(double p) {
  if (!(p >= 0.0 && p <= 1.0))
    throw Error("masking probability " + std::to_string(p) +
                " is outside [0, 1]");
}

}  // namespace

MaskedTemplate::MaskedTemplate(std::string origin_id, std::vector<Slot> slots)
    : origin_id_(std::move(origin_id)), slots_(std::move(slots)) {
  visible_count_ = static_cast<std::size_t>(
      std::count_if(slots_.begin(), slots_.end(),
                    [](const Slot& s) { return !s.masked(); }));
}

MaskedTemplate MaskedTemplate::FromSentence(const TaggedSentence& sentence) {
  std::vector<Slot> slots;
  slots.reserve(sentence.size());
  for (const Token& t : sentence.tokens()) slots.push_back(Slot::Kept(t));
  return MaskedTemplate(sentence.id(), std::move(slots));
}

std::vector<std::string> MaskedTemplate::Render(
    const std::string& mask_token) const {
  std::vector<std::string> out;
  out.reserve(slots_.size());
  for (const Slot& s : slots_)
    out.push_back(s.masked() ? mask_token : s.token->surface);
  return out;
}

bool IsMaskable(const Token& token, bool in_question) {
  switch (token.upos) {
    case Upos::kNoun:
    case Upos::kPropn:
    case Upos::kAdj:
    case Upos::kAdv:
    case Upos::kVerb:
    case Upos::kAux:
      break;
    default:
      return false;
  }
  if (Contains(kWhWords, token.lemma)) return false;
  if (token.upos == Upos::kAux || token.upos == Upos::kVerb) {
    if (Contains(kModals, token.lemma)) return false;
    if (in_question && token.lemma == "be") return false;
  }
  return true;
}

MaskedTemplate FirstOrderMask(const TaggedSentence& sentence) {
  std::vector<Slot> slots;
  slots.reserve(sentence.size());
  for (const Token& t : sentence.tokens()) {
    slots.push_back(IsMaskable(t, sentence.is_question()) ? Slot::Mask()
                                                           : Slot::Kept(t));
  }
  return MaskedTemplate(sentence.id(), std::move(slots));
}

double SlotDraw(std::uint64_t seed, const std::string& origin_id,
                std::size_t index) {
  const std::uint64_t stream = DeriveSeed(seed, HashString(origin_id));
  return ToUnit(DeriveSeed(stream, static_cast<std::uint64_t>(index)));
}

MaskedTemplate SecondOrderMask(const MaskedTemplate& tmpl,
                               const MaskConfig& cfg) {
  CheckProbability(cfg.p);
  std::vector<Slot> slots = tmpl.slots();
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (slots[i].masked()) continue;
    if (SlotDraw(cfg.seed, tmpl.origin_id(), i) < cfg.p) slots[i] = Slot::Mask();
  }
  return MaskedTemplate(tmpl.origin_id(), std::move(slots));
}

double MaskCountProbability(std::size_t k, std::size_t l, double p) {
  CheckProbability(p);
  if (k > l)
    throw Error("mask count " + std::to_string(k) + " exceeds template length " +
                std::to_string(l));
  // Degenerate endpoints: 0^0 = 1.
  if (p == 0.0) return k == 0 ? 1.0 : 0.0;
  if (p == 1.0) return k == l ? 1.0 : 0.0;
  const double n = static_cast<double>(l);
  const double kk = static_cast<double>(k);
  const double log_choose =
      std::lgamma(n + 1.0) - std::lgamma(kk + 1.0) - std::lgamma(n - kk + 1.0);
  return std::exp(log_choose + kk * std::log(p) + (n - kk) * std::log1p(-p));
}

}  // namespace exforge
